#pragma once

#include <string>
#include <vector>

#include "hashgen/corpus.hpp"
#include "hashgen/dataset_io.hpp"

namespace hashgen {

// Matching knobs for the ROUGE family: Porter-style stemming for English,
// character-level units for Chinese. Cutoffs apply to F1@K and MAP.
struct MatchConfig {
    bool stemming = false;
    bool char_mode = false;
    int map_cutoff = 5;
};

struct MetricsReport {
    double f1_at_1 = 0.0;
    double f1_at_5 = 0.0;
    double map_at_5 = 0.0;
    double rouge1_f1 = 0.0;
    double rouge_su4_f1 = 0.0;
    int instances = 0;
};

// Classic Porter (1980) suffix stripping, steps 1a through 5b. Words of one
// or two letters pass through unchanged.
std::string porter_stem(const std::string& word);

// Exact token-sequence match against the gold set after lowercasing. hits =
// |top-k ∩ gold|, P = hits/k, R = hits/|gold|, F1 = 2PR/(P+R) (0 when both
// vanish). Predictions must be ranked; duplicates are collapsed keeping rank.
double f1_at_k(const std::vector<TokenSeq>& predictions, const std::vector<TokenSeq>& gold, int k);

// AP = sum_{k<=cutoff} P@k * rel_k / min(|gold|, cutoff).
double average_precision(const std::vector<TokenSeq>& predictions, const std::vector<TokenSeq>& gold,
                         int cutoff = 5);

// Clipped unigram-overlap F1 between one prediction and one gold tag;
// averaged over golds by the multi-gold overloads.
double rouge1_f1(const TokenSeq& prediction, const TokenSeq& gold, const MatchConfig& cfg);
double rouge1_f1(const TokenSeq& prediction, const std::vector<TokenSeq>& golds, const MatchConfig& cfg);

// Skip-bigrams with at most four intervening tokens, unioned with unigrams
// (multiset counts), clipped-count F1.
double rouge_su4_f1(const TokenSeq& prediction, const TokenSeq& gold, const MatchConfig& cfg);
double rouge_su4_f1(const TokenSeq& prediction, const std::vector<TokenSeq>& golds,
                    const MatchConfig& cfg);

// Macro-averages F1@1, F1@5, MAP@5 and the ROUGE scores of the top-ranked
// prediction over aligned dataset/prediction lists.
MetricsReport evaluate(const std::vector<Instance>& dataset, const std::vector<Prediction>& predictions,
                       const MatchConfig& cfg);

} // namespace hashgen
