#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hashgen/corpus.hpp"
#include "hashgen/model.hpp"

namespace hashgen {

// One partial decode: emitted token ids (BOS excluded), summed log
// probability, and the decoder state that produced the last distribution.
// Finished hypotheses have consumed EOS and are never extended.
struct Hypothesis {
    std::vector<int> tokens;
    double log_prob = 0.0;
    DecoderState state;
    bool finished = false;
};

// Total deterministic order: score descending, then shorter sequence first,
// then lexicographically smaller token ids first. Returns <0, 0 or >0.
int compare_hypotheses(const Hypothesis& a, const Hypothesis& b);
bool hypothesis_precedes(const Hypothesis& a, const Hypothesis& b);

struct ScoredTag {
    TokenSeq tokens;
    double score = 0.0;
};

// Ranked, deduplicated prediction list; scores nonincreasing, length <= K.
struct RankedOutput {
    std::vector<ScoredTag> items;
};

struct BeamConfig {
    int beam_width = 20;
    int max_len = 10; // maximum number of real tokens in a hashtag
    int top_k = 5;
    int min_len = 1; // real tokens required before EOS may be emitted
};

// Breadth-limited best-first search over decode_step. PAD, UNK and BOS are
// barred from emission via a -1e9 logit surrogate (EOS too while a
// hypothesis is shorter than min_len); hypotheses emitting EOS freeze and
// compete by final score; finished hypotheses rank before truncated ones.
RankedOutput beam_search(const std::vector<int>& post_ids, const std::vector<int>& conv_ids,
                         const ModelConfig& cfg, const Parameters& params, const Vocabulary& vocab,
                         const BeamConfig& beam);

// Bi-attention matrices for one instance (rows normalized over unmasked
// positions); empty for variants without bi-attention.
struct AttentionDump {
    std::optional<Tensor> post_over_conv;
    std::optional<Tensor> conv_over_post;
};

AttentionDump attention_matrices(const std::vector<int>& post_ids, const std::vector<int>& conv_ids,
                                 const ModelConfig& cfg, const Parameters& params);

} // namespace hashgen
