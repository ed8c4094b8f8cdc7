#include "hashgen/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace hashgen {

namespace {

TokenSeq lowercase_tag(const TokenSeq& tag) {
    TokenSeq out;
    out.reserve(tag.size());
    for (const auto& t : tag) out.push_back(ascii_lower(t));
    return out;
}

// Ranked predictions with duplicates collapsed, earliest rank kept.
std::vector<TokenSeq> dedup_ranked(const std::vector<TokenSeq>& predictions) {
    std::vector<TokenSeq> out;
    std::set<TokenSeq> seen;
    for (const auto& p : predictions) {
        TokenSeq low = lowercase_tag(p);
        if (seen.insert(low).second) out.push_back(std::move(low));
    }
    return out;
}

std::set<TokenSeq> gold_set(const std::vector<TokenSeq>& gold) {
    if (gold.empty()) throw contract_error("metrics: empty gold hashtag set");
    std::set<TokenSeq> s;
    for (const auto& g : gold) s.insert(lowercase_tag(g));
    return s;
}

std::vector<std::string> utf8_chars(const std::string& s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t len = 1;
        unsigned char c = static_cast<unsigned char>(s[i]);
        if ((c & 0x80) == 0x00) len = 1;
        else if ((c & 0xE0) == 0xC0) len = 2;
        else if ((c & 0xF0) == 0xE0) len = 3;
        else if ((c & 0xF8) == 0xF0) len = 4;
        out.push_back(s.substr(i, len));
        i += len;
    }
    return out;
}

// Stemming and character splitting applied to one tag's tokens.
TokenSeq match_units(const TokenSeq& tokens, const MatchConfig& cfg) {
    TokenSeq work;
    work.reserve(tokens.size());
    for (const auto& t : tokens) work.push_back(cfg.stemming ? porter_stem(ascii_lower(t)) : ascii_lower(t));
    if (!cfg.char_mode) return work;
    TokenSeq chars;
    for (const auto& t : work) {
        auto cs = utf8_chars(t);
        chars.insert(chars.end(), cs.begin(), cs.end());
    }
    return chars;
}

double harmonic_f1(double p, double r) { return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

std::map<std::string, int> unigram_counts(const TokenSeq& tokens) {
    std::map<std::string, int> counts;
    for (const auto& t : tokens) ++counts[t];
    return counts;
}

// Unigrams plus skip bigrams with at most four intervening tokens, as one
// multiset. Pair keys join the two tokens with a unit separator.
std::map<std::string, int> su4_counts(const TokenSeq& tokens) {
    std::map<std::string, int> counts;
    const int n = static_cast<int>(tokens.size());
    for (int i = 0; i < n; ++i) ++counts[tokens[static_cast<std::size_t>(i)]];
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n && j - i <= 5; ++j)
            ++counts[tokens[static_cast<std::size_t>(i)] + "\x1f" + tokens[static_cast<std::size_t>(j)]];
    return counts;
}

double clipped_overlap_f1(const std::map<std::string, int>& pred, const std::map<std::string, int>& gold) {
    long long pred_total = 0, gold_total = 0, overlap = 0;
    for (const auto& [k, c] : pred) pred_total += c;
    for (const auto& [k, c] : gold) gold_total += c;
    for (const auto& [k, c] : pred) {
        auto it = gold.find(k);
        if (it != gold.end()) overlap += std::min(c, it->second);
    }
    if (pred_total == 0 || gold_total == 0) return 0.0;
    double p = static_cast<double>(overlap) / static_cast<double>(pred_total);
    double r = static_cast<double>(overlap) / static_cast<double>(gold_total);
    return harmonic_f1(p, r);
}

} // namespace

double f1_at_k(const std::vector<TokenSeq>& predictions, const std::vector<TokenSeq>& gold, int k) {
    if (k < 1) throw contract_error("f1_at_k: k must be >= 1");
    std::set<TokenSeq> golds = gold_set(gold);
    std::vector<TokenSeq> ranked = dedup_ranked(predictions);

    int hits = 0;
    for (int i = 0; i < k && i < static_cast<int>(ranked.size()); ++i)
        if (golds.count(ranked[static_cast<std::size_t>(i)])) ++hits;
    double p = static_cast<double>(hits) / static_cast<double>(k);
    double r = static_cast<double>(hits) / static_cast<double>(golds.size());
    return harmonic_f1(p, r);
}

double average_precision(const std::vector<TokenSeq>& predictions, const std::vector<TokenSeq>& gold,
                         int cutoff) {
    if (cutoff < 1) throw contract_error("average_precision: cutoff must be >= 1");
    std::set<TokenSeq> golds = gold_set(gold);
    std::vector<TokenSeq> ranked = dedup_ranked(predictions);

    int hits = 0;
    double sum = 0.0;
    for (int i = 0; i < cutoff && i < static_cast<int>(ranked.size()); ++i) {
        if (golds.count(ranked[static_cast<std::size_t>(i)])) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    double denom = static_cast<double>(std::min<std::size_t>(golds.size(), static_cast<std::size_t>(cutoff)));
    return sum / denom;
}

double rouge1_f1(const TokenSeq& prediction, const TokenSeq& gold, const MatchConfig& cfg) {
    if (gold.empty()) throw contract_error("rouge1_f1: empty gold hashtag");
    if (prediction.empty()) return 0.0;
    return clipped_overlap_f1(unigram_counts(match_units(prediction, cfg)),
                              unigram_counts(match_units(gold, cfg)));
}

double rouge1_f1(const TokenSeq& prediction, const std::vector<TokenSeq>& golds, const MatchConfig& cfg) {
    if (golds.empty()) throw contract_error("rouge1_f1: empty gold hashtag set");
    double sum = 0.0;
    for (const auto& g : golds) sum += rouge1_f1(prediction, g, cfg);
    return sum / static_cast<double>(golds.size());
}

double rouge_su4_f1(const TokenSeq& prediction, const TokenSeq& gold, const MatchConfig& cfg) {
    if (gold.empty()) throw contract_error("rouge_su4_f1: empty gold hashtag");
    if (prediction.empty()) return 0.0;
    return clipped_overlap_f1(su4_counts(match_units(prediction, cfg)),
                              su4_counts(match_units(gold, cfg)));
}

double rouge_su4_f1(const TokenSeq& prediction, const std::vector<TokenSeq>& golds,
                    const MatchConfig& cfg) {
    if (golds.empty()) throw contract_error("rouge_su4_f1: empty gold hashtag set");
    double sum = 0.0;
    for (const auto& g : golds) sum += rouge_su4_f1(prediction, g, cfg);
    return sum / static_cast<double>(golds.size());
}

MetricsReport evaluate(const std::vector<Instance>& dataset, const std::vector<Prediction>& predictions,
                       const MatchConfig& cfg) {
    if (dataset.size() != predictions.size())
        throw contract_error("evaluate: dataset has " + std::to_string(dataset.size()) +
                             " lines but predictions have " + std::to_string(predictions.size()) +
                             "; files must align 1:1");
    if (dataset.empty()) throw contract_error("evaluate: empty dataset");

    MetricsReport report;
    report.instances = static_cast<int>(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& gold = dataset[i].hashtags;
        const auto& pred = predictions[i].tags;
        report.f1_at_1 += f1_at_k(pred, gold, 1);
        report.f1_at_5 += f1_at_k(pred, gold, 5);
        report.map_at_5 += average_precision(pred, gold, cfg.map_cutoff);
        if (!pred.empty()) {
            report.rouge1_f1 += rouge1_f1(pred.front(), gold, cfg);
            report.rouge_su4_f1 += rouge_su4_f1(pred.front(), gold, cfg);
        }
    }
    double n = static_cast<double>(report.instances);
    report.f1_at_1 /= n;
    report.f1_at_5 /= n;
    report.map_at_5 /= n;
    report.rouge1_f1 /= n;
    report.rouge_su4_f1 /= n;
    return report;
}

} // namespace hashgen
