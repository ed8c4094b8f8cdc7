#include "hashgen/model.hpp"

#include <algorithm>
#include <cmath>

namespace hashgen {

Variant variant_from_string(const std::string& name) {
    if (name == "full") return Variant::full;
    if (name == "post_only") return Variant::post_only;
    if (name == "conv_only") return Variant::conv_only;
    if (name == "post_plus_conv_concat") return Variant::post_plus_conv_concat;
    if (name == "post_att_only") return Variant::post_att_only;
    if (name == "conv_att_only") return Variant::conv_att_only;
    throw config_error("unknown model variant '" + name + "'");
}

std::string to_string(Variant variant) {
    switch (variant) {
        case Variant::full: return "full";
        case Variant::post_only: return "post_only";
        case Variant::conv_only: return "conv_only";
        case Variant::post_plus_conv_concat: return "post_plus_conv_concat";
        case Variant::post_att_only: return "post_att_only";
        case Variant::conv_att_only: return "conv_att_only";
    }
    throw config_error("invalid variant value");
}

void ModelConfig::validate() const {
    if (vocab_size <= Vocabulary::kReserved)
        throw config_error("model: vocab_size must exceed the reserved ids, got " +
                           std::to_string(vocab_size));
    if (emb_dim < 1) throw config_error("model: emb_dim must be positive");
    if (hidden_dim < 2 || hidden_dim % 2 != 0)
        throw config_error("model: hidden_dim must be even and >= 2, got " + std::to_string(hidden_dim));
    if (enc_layers < 1) throw config_error("model: enc_layers must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0)
        throw config_error("model: dropout must lie in [0, 1), got " + std::to_string(dropout));
}

namespace {

bool uses_post_encoder(Variant v) { return v != Variant::conv_only; }

bool uses_conv_encoder(Variant v) {
    return v == Variant::full || v == Variant::conv_only || v == Variant::post_att_only ||
           v == Variant::conv_att_only;
}

bool uses_bi_attention(Variant v) {
    return v == Variant::full || v == Variant::post_att_only || v == Variant::conv_att_only;
}

// Dual-encoder variants initialize the decoder from four direction states,
// single-encoder variants from two.
bool dual_encoder(Variant v) { return uses_bi_attention(v); }

} // namespace

std::map<std::string, std::vector<int>> param_shapes(const ModelConfig& cfg) {
    cfg.validate();
    const int V = cfg.vocab_size;
    const int e = cfg.emb_dim;
    const int d = cfg.hidden_dim;
    const int w = d / 2;

    std::map<std::string, std::vector<int>> shapes;

    auto add_gru = [&shapes](const std::string& prefix, int width, int input) {
        for (const char* gate : {"z", "r", "h"}) {
            shapes[prefix + ".W_" + gate] = {width, input};
            shapes[prefix + ".U_" + gate] = {width, width};
            shapes[prefix + ".b_" + gate] = {width};
        }
    };
    auto add_encoder = [&](const std::string& group) {
        for (int layer = 0; layer < cfg.enc_layers; ++layer) {
            int input = layer == 0 ? e : d;
            std::string base = group + ".l" + std::to_string(layer);
            add_gru(base + ".fwd", w, input);
            add_gru(base + ".bwd", w, input);
        }
    };

    const Variant v = cfg.variant;
    if (cfg.separate_embeddings) {
        if (uses_post_encoder(v)) shapes["emb.post"] = {V, e};
        if (uses_conv_encoder(v)) shapes["emb.conv"] = {V, e};
        shapes["emb.dec"] = {V, e};
    } else {
        shapes["emb"] = {V, e};
    }

    if (uses_post_encoder(v)) add_encoder("enc.post");
    if (uses_conv_encoder(v)) add_encoder("enc.conv");

    if (uses_bi_attention(v)) shapes["biatt.W"] = {d, d};
    if (v == Variant::full || v == Variant::post_att_only) {
        shapes["merge.post.W"] = {d, 2 * d};
        shapes["merge.post.b"] = {d};
    }
    if (v == Variant::full || v == Variant::conv_att_only) {
        shapes["merge.conv.W"] = {d, 2 * d};
        shapes["merge.conv.b"] = {d};
    }

    add_gru("dec", d, e);
    shapes["dec.W_att"] = {d, d};
    shapes["out.W"] = {V, 2 * d};
    shapes["out.b"] = {V};
    shapes["init.W"] = {d, dual_encoder(v) ? 2 * d : d};
    shapes["init.b"] = {d};
    return shapes;
}

Parameters init_params(const ModelConfig& cfg, Rng& rng) {
    Parameters params;
    for (const auto& [name, shape] : param_shapes(cfg)) {
        if (shape.size() == 1) {
            params[name] = Tensor::zeros(shape);
        } else {
            // Fan-balanced uniform bound; a fixed small range stalls training
            // at desk-scale step budgets.
            double limit = std::sqrt(6.0 / (shape[0] + shape[1]));
            params[name] = Tensor::uniform(shape, -limit, limit, rng);
        }
        params[name].requires_grad = true;
    }
    return params;
}

std::int64_t param_count(const Parameters& params) {
    std::int64_t n = 0;
    for (const auto& [name, t] : params) n += static_cast<std::int64_t>(t.size());
    return n;
}

int PadMask::last_real() const {
    for (int i = size() - 1; i >= 0; --i)
        if (flags[static_cast<std::size_t>(i)]) return i;
    return -1;
}

bool PadMask::any() const { return last_real() >= 0; }

ModelSession::ModelSession(Tape& tape, const ModelConfig& cfg, const Parameters& params,
                           bool trainable, bool training, Rng* dropout_rng)
    : tape_(tape), cfg_(cfg), params_(params), trainable_(trainable), training_(training),
      dropout_rng_(dropout_rng) {
    cfg_.validate();
    if (training_ && cfg_.dropout > 0.0 && dropout_rng_ == nullptr)
        throw config_error("model: training with dropout requires a dropout rng");
    for (const auto& [name, shape] : param_shapes(cfg_)) {
        auto it = params_.find(name);
        if (it == params_.end()) throw contract_error("model: missing parameter '" + name + "'");
        if (it->second.shape != shape)
            throw shape_error("model: parameter '" + name + "' has shape " + shape_str(it->second.shape) +
                              ", expected " + shape_str(shape));
    }
}

Var ModelSession::param(const std::string& name) {
    auto it = param_vars_.find(name);
    if (it != param_vars_.end()) return it->second;
    auto pit = params_.find(name);
    if (pit == params_.end()) throw contract_error("model: unknown parameter '" + name + "'");
    Var v = tape_.leaf(pit->second, trainable_, name);
    param_vars_.emplace(name, v);
    return v;
}

Var ModelSession::param_t(const std::string& name) {
    auto it = param_transposes_.find(name);
    if (it != param_transposes_.end()) return it->second;
    Var v = tape_.transpose(param(name));
    param_transposes_.emplace(name, v);
    return v;
}

std::string ModelSession::embedding_name(Source which, bool decoder) const {
    if (!cfg_.separate_embeddings) return "emb";
    if (decoder) return "emb.dec";
    return which == Source::post ? "emb.post" : "emb.conv";
}

Var ModelSession::embed(const std::vector<int>& ids, Source which, bool decoder) {
    for (int id : ids)
        if (id < 0 || id >= cfg_.vocab_size)
            throw contract_error("model: token id " + std::to_string(id) + " outside vocabulary of size " +
                                 std::to_string(cfg_.vocab_size));
    Var x = tape_.gather_rows(param(embedding_name(which, decoder)), ids);
    return dropout(x);
}

Var ModelSession::dropout(Var x) {
    if (!training_ || cfg_.dropout <= 0.0) return x;
    const Tensor& v = tape_.value(x);
    Tensor mask = Tensor::zeros(v.shape);
    double keep = 1.0 - cfg_.dropout;
    for (double& m : mask.data) m = (dropout_rng_->next_double() < keep) ? 1.0 / keep : 0.0;
    return tape_.mul(x, tape_.constant(std::move(mask)));
}

Var ModelSession::gru_cell(Var x, Var h, const std::string& prefix) {
    Var z = tape_.sigmoid(tape_.add(
        tape_.add(tape_.matmul(x, param_t(prefix + ".W_z")), tape_.matmul(h, param_t(prefix + ".U_z"))),
        param(prefix + ".b_z")));
    Var r = tape_.sigmoid(tape_.add(
        tape_.add(tape_.matmul(x, param_t(prefix + ".W_r")), tape_.matmul(h, param_t(prefix + ".U_r"))),
        param(prefix + ".b_r")));
    Var cand = tape_.tanh(tape_.add(tape_.add(tape_.matmul(x, param_t(prefix + ".W_h")),
                                              tape_.matmul(tape_.mul(r, h), param_t(prefix + ".U_h"))),
                                    param(prefix + ".b_h")));
    int width = tape_.value(h).shape[1];
    Var ones = tape_.constant(Tensor::full({1, width}, 1.0));
    return tape_.add(tape_.mul(z, h), tape_.mul(tape_.sub(ones, z), cand));
}

Var ModelSession::gru_layer_direction(Var inputs, const std::string& prefix, bool backward) {
    const int steps = tape_.value(inputs).shape[0];
    const int w = cfg_.hidden_dim / 2;

    // Input-side affine terms for all steps at once.
    Var pre_z = tape_.add(tape_.matmul(inputs, param_t(prefix + ".W_z")), param(prefix + ".b_z"));
    Var pre_r = tape_.add(tape_.matmul(inputs, param_t(prefix + ".W_r")), param(prefix + ".b_r"));
    Var pre_h = tape_.add(tape_.matmul(inputs, param_t(prefix + ".W_h")), param(prefix + ".b_h"));
    Var u_z = param_t(prefix + ".U_z");
    Var u_r = param_t(prefix + ".U_r");
    Var u_h = param_t(prefix + ".U_h");
    Var ones = tape_.constant(Tensor::full({1, w}, 1.0));

    Var h = tape_.constant(Tensor::zeros({1, w}));
    std::vector<Var> states(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) {
        int t = backward ? steps - 1 - i : i;
        Var xz = tape_.slice_rows(pre_z, t, t + 1);
        Var xr = tape_.slice_rows(pre_r, t, t + 1);
        Var xh = tape_.slice_rows(pre_h, t, t + 1);
        Var z = tape_.sigmoid(tape_.add(xz, tape_.matmul(h, u_z)));
        Var r = tape_.sigmoid(tape_.add(xr, tape_.matmul(h, u_r)));
        Var cand = tape_.tanh(tape_.add(xh, tape_.matmul(tape_.mul(r, h), u_h)));
        h = tape_.add(tape_.mul(z, h), tape_.mul(tape_.sub(ones, z), cand));
        states[static_cast<std::size_t>(t)] = h;
    }
    return tape_.stack_rows(states);
}

ModelSession::EncoderOut ModelSession::run_encoder(const std::vector<int>& ids, const std::string& group,
                                                   Source emb_source) {
    if (ids.empty()) throw contract_error("encode_bigru: empty sequence");
    Var layer_in = embed(ids, emb_source);
    EncoderOut out;
    for (int layer = 0; layer < cfg_.enc_layers; ++layer) {
        std::string base = group + ".l" + std::to_string(layer);
        Var fwd = gru_layer_direction(layer_in, base + ".fwd", false);
        Var bwd = gru_layer_direction(layer_in, base + ".bwd", true);
        Var h = dropout(tape_.concat_cols(fwd, bwd));
        layer_in = h;
        if (layer == cfg_.enc_layers - 1) {
            out.h = h;
            out.fwd = fwd;
            out.bwd = bwd;
        }
    }
    return out;
}

ModelSession::EncoderOut ModelSession::encode_bigru(const std::vector<int>& ids, Source which,
                                                    const PadMask& mask) {
    if (static_cast<int>(ids.size()) != mask.size())
        throw contract_error("encode_bigru: mask length " + std::to_string(mask.size()) +
                             " does not match sequence length " + std::to_string(ids.size()));
    const std::string group = which == Source::post ? "enc.post" : "enc.conv";
    return run_encoder(ids, group, which);
}

namespace {

Tensor replicate_mask_rows(const PadMask& mask, int rows) {
    Tensor out = Tensor::zeros({rows, mask.size()});
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < mask.size(); ++j)
            out.at(i, j) = mask.flags[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
    return out;
}

Tensor row_mask(const std::vector<std::uint8_t>& flags) {
    Tensor out = Tensor::zeros({1, static_cast<int>(flags.size())});
    for (std::size_t j = 0; j < flags.size(); ++j) out.data[j] = flags[j] ? 1.0 : 0.0;
    return out;
}

} // namespace

ModelSession::BiAttention ModelSession::bi_attention(Var h_post, Var h_conv, const PadMask& post_mask,
                                                     const PadMask& conv_mask) {
    const int post_len = tape_.value(h_post).shape[0];
    const int conv_len = tape_.value(h_conv).shape[0];

    Var scores = tape_.matmul(tape_.matmul(h_post, param("biatt.W")), tape_.transpose(h_conv));

    BiAttention out;
    out.alpha_post_over_conv = tape_.softmax_rows(scores, replicate_mask_rows(conv_mask, post_len));
    out.r_conv = tape_.matmul(out.alpha_post_over_conv, h_conv);
    out.alpha_conv_over_post =
        tape_.softmax_rows(tape_.transpose(scores), replicate_mask_rows(post_mask, conv_len));
    out.r_post = tape_.matmul(out.alpha_conv_over_post, h_post);
    return out;
}

ModelSession::Merged ModelSession::merge(Var h_post, Var r_conv, Var h_conv, Var r_post) {
    Merged out;
    out.v_post = tape_.tanh(tape_.add(
        tape_.matmul(tape_.concat_cols(h_post, r_conv), param_t("merge.post.W")), param("merge.post.b")));
    out.v_conv = tape_.tanh(tape_.add(
        tape_.matmul(tape_.concat_cols(h_conv, r_post), param_t("merge.conv.W")), param("merge.conv.b")));
    out.v_all = tape_.concat_rows(out.v_post, out.v_conv);
    return out;
}

Var ModelSession::init_decoder(const std::vector<Var>& final_direction_states) {
    if (final_direction_states.empty()) throw contract_error("init_decoder: no encoder states given");
    Var cat = final_direction_states[0];
    for (std::size_t i = 1; i < final_direction_states.size(); ++i)
        cat = tape_.concat_cols(cat, final_direction_states[i]);
    return tape_.tanh(tape_.add(tape_.matmul(cat, param_t("init.W")), param("init.b")));
}

EncodedPair ModelSession::encode(const std::vector<int>& post_ids, const std::vector<int>& conv_ids,
                                 const PadMask& post_mask, const PadMask& conv_mask) {
    const Variant variant = cfg_.variant;
    EncodedPair enc;

    auto finals = [&](const EncoderOut& eo, const PadMask& mask) {
        int last = mask.last_real();
        if (last < 0) throw contract_error("encode: sequence is fully padded");
        std::vector<Var> states;
        states.push_back(tape_.slice_rows(eo.fwd, last, last + 1));
        states.push_back(tape_.slice_rows(eo.bwd, 0, 1));
        return states;
    };
    auto concat_masks = [&](const PadMask& a, const PadMask& b) {
        std::vector<std::uint8_t> m = a.flags;
        m.insert(m.end(), b.flags.begin(), b.flags.end());
        return m;
    };

    switch (variant) {
        case Variant::post_only: {
            EncoderOut ep = encode_bigru(post_ids, Source::post, post_mask);
            enc.h_post = ep.h;
            enc.memory = ep.h;
            enc.memory_mask = post_mask.flags;
            enc.init_state = init_decoder(finals(ep, post_mask));
            return enc;
        }
        case Variant::conv_only: {
            EncoderOut ec = encode_bigru(conv_ids, Source::conversation, conv_mask);
            enc.h_conv = ec.h;
            enc.memory = ec.h;
            enc.memory_mask = conv_mask.flags;
            enc.init_state = init_decoder(finals(ec, conv_mask));
            return enc;
        }
        case Variant::post_plus_conv_concat: {
            std::vector<int> ids = post_ids;
            ids.insert(ids.end(), conv_ids.begin(), conv_ids.end());
            PadMask joined{concat_masks(post_mask, conv_mask)};
            EncoderOut eo = encode_bigru(ids, Source::post, joined);
            enc.memory = eo.h;
            enc.memory_mask = joined.flags;
            enc.init_state = init_decoder(finals(eo, joined));
            return enc;
        }
        case Variant::full:
        case Variant::post_att_only:
        case Variant::conv_att_only: {
            EncoderOut ep = encode_bigru(post_ids, Source::post, post_mask);
            EncoderOut ec = encode_bigru(conv_ids, Source::conversation, conv_mask);
            enc.h_post = ep.h;
            enc.h_conv = ec.h;
            BiAttention ba = bi_attention(ep.h, ec.h, post_mask, conv_mask);
            enc.alpha_post_over_conv = ba.alpha_post_over_conv;
            enc.alpha_conv_over_post = ba.alpha_conv_over_post;
            enc.r_conv = ba.r_conv;
            enc.r_post = ba.r_post;

            if (variant == Variant::full) {
                Merged m = merge(ep.h, ba.r_conv, ec.h, ba.r_post);
                enc.v_post = m.v_post;
                enc.v_conv = m.v_conv;
                enc.v_all = m.v_all;
                enc.memory = m.v_all;
                enc.memory_mask = concat_masks(post_mask, conv_mask);
            } else if (variant == Variant::post_att_only) {
                enc.v_post = tape_.tanh(
                    tape_.add(tape_.matmul(tape_.concat_cols(ep.h, ba.r_conv), param_t("merge.post.W")),
                              param("merge.post.b")));
                enc.memory = enc.v_post;
                enc.memory_mask = post_mask.flags;
            } else {
                enc.v_conv = tape_.tanh(
                    tape_.add(tape_.matmul(tape_.concat_cols(ec.h, ba.r_post), param_t("merge.conv.W")),
                              param("merge.conv.b")));
                enc.memory = enc.v_conv;
                enc.memory_mask = conv_mask.flags;
            }

            std::vector<Var> states = finals(ep, post_mask);
            std::vector<Var> conv_states = finals(ec, conv_mask);
            states.insert(states.end(), conv_states.begin(), conv_states.end());
            enc.init_state = init_decoder(states);
            return enc;
        }
    }
    throw config_error("encode: invalid variant");
}

DecoderState ModelSession::initial_decoder_state(const EncodedPair& enc) const {
    return DecoderState{enc.init_state, Vocabulary::kBos, 0};
}

DecodeStep ModelSession::decode_step(const DecoderState& state, int prev_token_id, Var memory,
                                     const std::vector<std::uint8_t>& memory_mask) {
    if (prev_token_id < 0 || prev_token_id >= cfg_.vocab_size)
        throw contract_error("decode_step: invalid token id " + std::to_string(prev_token_id));
    const Tensor& mem = tape_.value(memory);
    if (mem.shape.size() != 2 || mem.shape[0] != static_cast<int>(memory_mask.size()))
        throw contract_error("decode_step: memory mask length " + std::to_string(memory_mask.size()) +
                             " does not match memory " + shape_str(mem.shape));

    Var x = embed({prev_token_id}, Source::post, /*decoder=*/true);
    Var s = gru_cell(x, state.state, "dec");

    Var mem_t;
    auto cached = memory_transposes_.find(memory.idx);
    if (cached != memory_transposes_.end()) {
        mem_t = cached->second;
    } else {
        mem_t = tape_.transpose(memory);
        memory_transposes_.emplace(memory.idx, mem_t);
    }

    Var scores = tape_.matmul(tape_.matmul(s, param("dec.W_att")), mem_t);
    Var alpha = tape_.softmax_rows(scores, row_mask(memory_mask));
    Var context = tape_.matmul(alpha, memory);
    Var pre_proj = dropout(tape_.concat_cols(s, context));
    Var logits = tape_.add(tape_.matmul(pre_proj, param_t("out.W")), param("out.b"));

    DecodeStep out;
    out.next = DecoderState{s, prev_token_id, state.step + 1};
    out.context = context;
    out.logits = logits;
    out.distribution = tape_.softmax_rows(logits);
    return out;
}

NllResult ModelSession::forward_nll(const TrainingExample& example) {
    const auto& target = example.target_ids;
    if (target.size() < 2)
        throw contract_error("forward_nll: target must hold at least BOS and EOS");
    if (target.front() != Vocabulary::kBos || target.back() != Vocabulary::kEos)
        throw contract_error("forward_nll: target must start with BOS and end with EOS");

    PadMask post_mask = PadMask::all_real(example.post_ids.size());
    PadMask conv_mask = PadMask::all_real(example.conv_ids.size());
    EncodedPair enc = encode(example.post_ids, example.conv_ids, post_mask, conv_mask);

    DecoderState state = initial_decoder_state(enc);
    Var log_prob_sum;
    int tokens = 0;
    for (std::size_t t = 1; t < target.size(); ++t) {
        if (target[t] == Vocabulary::kPad) break;
        DecodeStep step = decode_step(state, target[t - 1], enc.memory, enc.memory_mask);
        Var logp = tape_.log_softmax_rows(step.logits);
        Var picked = tape_.pick_entries(logp, {{0, target[t]}});
        log_prob_sum = log_prob_sum.valid() ? tape_.add(log_prob_sum, picked) : picked;
        state = step.next;
        state.last_token = target[t];
        ++tokens;
    }
    return NllResult{tape_.neg(log_prob_sum), tokens};
}

} // namespace hashgen
