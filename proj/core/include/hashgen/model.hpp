#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hashgen/corpus.hpp"
#include "hashgen/gradcheck.hpp"
#include "hashgen/rng.hpp"
#include "hashgen/tape.hpp"

namespace hashgen {

// The six wirings examined in the ablation study: the full dual-encoder
// bi-attention model, single-source baselines, a single encoder over the
// token-level concatenation, and the two one-sided attention variants.
enum class Variant {
    full,
    post_only,
    conv_only,
    post_plus_conv_concat,
    post_att_only,
    conv_att_only,
};

Variant variant_from_string(const std::string& name);
std::string to_string(Variant variant);

struct ModelConfig {
    Variant variant = Variant::full;
    int vocab_size = 0; // |V| including the four reserved ids
    int emb_dim = 0;
    int hidden_dim = 0; // d; every encoder direction is d/2 wide, so d must be even
    int enc_layers = 2;
    double dropout = 0.1;
    bool separate_embeddings = false; // one table per source instead of a shared one

    void validate() const;
};

// Shapes of every learnable tensor for a configuration; the single source of
// truth for initialization, optimizer state and checkpoint validation.
// A weight mapping n -> m features is stored [m x n] and applied to row
// vectors via its transpose.
std::map<std::string, std::vector<int>> param_shapes(const ModelConfig& cfg);

// Seeded fan-balanced uniform for matrices (bound sqrt(6/(rows+cols))),
// zeros for rank-1 tensors (biases).
Parameters init_params(const ModelConfig& cfg, Rng& rng);

std::int64_t param_count(const Parameters& params);

// Per-position flags over a padded sequence; 1 marks a real token. Padding
// is only ever appended at the tail.
struct PadMask {
    std::vector<std::uint8_t> flags;

    static PadMask all_real(std::size_t len) { return PadMask{std::vector<std::uint8_t>(len, 1)}; }
    int size() const { return static_cast<int>(flags.size()); }
    int last_real() const;
    bool any() const;
};

// Decoder recurrence position: hidden state s_t, the token that produced it,
// and the step index (0 before the first step).
struct DecoderState {
    Var state;
    int last_token = Vocabulary::kBos;
    int step = 0;
};

// Encoder-side outputs wired for a particular variant. `memory` is whatever
// the decoder attends to (v, v^p, v^c or plain hidden states) with
// `memory_mask` marking its real rows. Vars that a variant does not produce
// stay invalid.
struct EncodedPair {
    Var memory;
    Var init_state; // s_0 [1 x d]
    std::vector<std::uint8_t> memory_mask;

    Var h_post, h_conv;
    Var r_conv, r_post;
    Var v_post, v_conv, v_all;
    Var alpha_post_over_conv; // [|x^p| x |x^c|]
    Var alpha_conv_over_post; // [|x^c| x |x^p|]
};

// One forward step of the attentive decoder.
struct DecodeStep {
    DecoderState next;
    Var context;      // c_t [1 x d]
    Var logits;       // [1 x |V|], pre-softmax
    Var distribution; // [1 x |V|], sums to one
};

struct NllResult {
    Var loss;       // summed negative log-likelihood over predicted positions
    int tokens = 0; // number of predicted positions (EOS included, PAD skipped)
};

enum class Source { post, conversation };

// Binds a parameter set to a tape for one forward pass. Parameters are
// registered as named leaves on first use and weight transposes are cached,
// so repeated calls (batches, beam steps) share nodes. A session is
// single-threaded like its tape.
class ModelSession {
public:
    ModelSession(Tape& tape, const ModelConfig& cfg, const Parameters& params, bool trainable,
                 bool training = false, Rng* dropout_rng = nullptr);

    // Two stacked Bi-GRU layers over the token ids of one source; rows of the
    // result concatenate the forward and backward top-layer states. Padded
    // positions still produce states; callers exclude them via masks.
    struct EncoderOut {
        Var h;   // [T x d]
        Var fwd; // [T x d/2] forward direction, top layer
        Var bwd; // [T x d/2] backward direction, top layer
    };
    EncoderOut encode_bigru(const std::vector<int>& ids, Source which, const PadMask& mask);

    struct BiAttention {
        Var alpha_post_over_conv; // row-normalized over conversation positions
        Var r_conv;               // post-aware conversation summary, [|x^p| x d]
        Var alpha_conv_over_post;
        Var r_post;
    };
    BiAttention bi_attention(Var h_post, Var h_conv, const PadMask& post_mask, const PadMask& conv_mask);

    struct Merged {
        Var v_post; // tanh-fused, entries in [-1, 1]
        Var v_conv;
        Var v_all; // time-axis concatenation, |x^p| + |x^c| rows
    };
    Merged merge(Var h_post, Var r_conv, Var h_conv, Var r_post);

    // s_0 from the final forward/backward states of the encoders that ran.
    Var init_decoder(const std::vector<Var>& final_direction_states);

    // Full encoder-side wiring for the configured variant.
    EncodedPair encode(const std::vector<int>& post_ids, const std::vector<int>& conv_ids,
                       const PadMask& post_mask, const PadMask& conv_mask);

    DecodeStep decode_step(const DecoderState& state, int prev_token_id, Var memory,
                           const std::vector<std::uint8_t>& memory_mask);

    // Teacher-forced NLL of one example; target must be BOS ... EOS.
    NllResult forward_nll(const TrainingExample& example);

    DecoderState initial_decoder_state(const EncodedPair& enc) const;

    const ModelConfig& config() const { return cfg_; }
    Tape& tape() { return tape_; }

private:
    Var param(const std::string& name);
    Var param_t(const std::string& name); // cached transpose
    Var embed(const std::vector<int>& ids, Source which, bool decoder = false);
    Var dropout(Var x);
    Var gru_layer_direction(Var inputs, const std::string& prefix, bool backward);
    EncoderOut run_encoder(const std::vector<int>& ids, const std::string& group, Source emb_source);
    Var gru_cell(Var x, Var h, const std::string& prefix);
    std::string embedding_name(Source which, bool decoder) const;

    Tape& tape_;
    ModelConfig cfg_;
    const Parameters& params_;
    bool trainable_;
    bool training_;
    Rng* dropout_rng_;
    std::map<std::string, Var> param_vars_;
    std::map<std::string, Var> param_transposes_;
    std::map<int, Var> memory_transposes_;
};

} // namespace hashgen
