#include "hashgen/corpus.hpp"

#include <algorithm>
#include <cctype>

namespace hashgen {

namespace {

const std::string kReservedNames[Vocabulary::kReserved] = {"<pad>", "<unk>", "<bos>", "<eos>"};

bool is_url(const std::string& t) {
    auto starts_with_ci = [&](const char* prefix) {
        std::size_t n = std::char_traits<char>::length(prefix);
        if (t.size() < n) return false;
        for (std::size_t i = 0; i < n; ++i)
            if (std::tolower(static_cast<unsigned char>(t[i])) != prefix[i]) return false;
        return true;
    };
    return starts_with_ci("http://") || starts_with_ci("https://") || starts_with_ci("www.");
}

bool is_all_digits(const std::string& t) {
    if (t.empty()) return false;
    for (char c : t)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

std::size_t utf8_length(const std::string& s) {
    std::size_t n = 0;
    for (char c : s)
        if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
    return n;
}

} // namespace

std::string ascii_lower(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens_in_id_order)
    : id_to_token_(std::move(tokens_in_id_order)) {
    for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
        const std::string& tok = id_to_token_[i];
        if (tok.empty()) throw contract_error("vocabulary: empty token at position " + std::to_string(i));
        auto [it, inserted] = token_to_id_.emplace(tok, static_cast<int>(i) + kReserved);
        if (!inserted) throw contract_error("vocabulary: duplicate token '" + tok + "'");
    }
}

int Vocabulary::id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= size())
        throw contract_error("vocabulary: id " + std::to_string(id) + " out of range [0, " +
                             std::to_string(size()) + ")");
    if (id < kReserved) return kReservedNames[id];
    return id_to_token_[static_cast<std::size_t>(id - kReserved)];
}

std::vector<int> Vocabulary::encode(const TokenSeq& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
}

TokenSeq Vocabulary::decode(const std::vector<int>& ids) const {
    TokenSeq out;
    out.reserve(ids.size());
    for (int i : ids) out.push_back(token(i));
    return out;
}

TokenSeq normalize_tokens(const TokenSeq& raw) {
    TokenSeq out;
    out.reserve(raw.size());
    for (const auto& t : raw) {
        if (t.empty()) continue;
        if (is_url(t))
            out.push_back("URL");
        else if (t[0] == '@')
            out.push_back("MENTION");
        else if (is_all_digits(t))
            out.push_back("DIGIT");
        else
            out.push_back(ascii_lower(t));
    }
    return out;
}

std::vector<TokenSeq> filter_hashtags(const std::vector<TokenSeq>& tags) {
    std::vector<TokenSeq> kept;
    for (const auto& tag : tags) {
        if (tag.empty()) continue;
        if (tag.size() == 1 && utf8_length(tag[0]) <= 1) continue;
        kept.push_back(tag);
    }
    return kept;
}

Vocabulary build_vocab(const std::vector<Instance>& instances, int max_size) {
    if (max_size < 1) throw contract_error("build_vocab: max_size must be >= 1");
    if (instances.empty()) throw contract_error("build_vocab: empty corpus");

    std::map<std::string, std::int64_t> counts;
    for (const auto& inst : instances) {
        for (const auto& t : inst.post) ++counts[t];
        for (const auto& t : inst.conversation) ++counts[t];
        for (const auto& tag : inst.hashtags)
            for (const auto& t : tag) ++counts[t];
    }

    std::vector<std::pair<std::string, std::int64_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(ranked.size()) > max_size) ranked.resize(static_cast<std::size_t>(max_size));

    std::vector<std::string> tokens;
    tokens.reserve(ranked.size());
    for (auto& [tok, cnt] : ranked) tokens.push_back(tok);
    return Vocabulary(std::move(tokens));
}

std::vector<TrainingExample> expand_instances(const Instance& instance, const Vocabulary& vocab) {
    if (instance.hashtags.empty())
        throw contract_error("expand_instances: instance has no gold hashtags");
    std::vector<TrainingExample> out;
    out.reserve(instance.hashtags.size());
    std::vector<int> post_ids = vocab.encode(instance.post);
    std::vector<int> conv_ids = vocab.encode(instance.conversation);
    for (const auto& tag : instance.hashtags) {
        TrainingExample ex;
        ex.post_ids = post_ids;
        ex.conv_ids = conv_ids;
        ex.target_ids.push_back(Vocabulary::kBos);
        for (const auto& t : tag) ex.target_ids.push_back(vocab.id(t));
        ex.target_ids.push_back(Vocabulary::kEos);
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<TrainingExample> expand_all(const std::vector<Instance>& instances, const Vocabulary& vocab) {
    std::vector<TrainingExample> out;
    for (const auto& inst : instances) {
        auto ex = expand_instances(inst, vocab);
        out.insert(out.end(), ex.begin(), ex.end());
    }
    return out;
}

SignalLocation signal_location_from_string(const std::string& s) {
    if (s == "post") return SignalLocation::post;
    if (s == "conversation") return SignalLocation::conversation;
    if (s == "both") return SignalLocation::both;
    throw config_error("unknown signal_location '" + s + "' (expected post|conversation|both)");
}

std::string to_string(SignalLocation loc) {
    switch (loc) {
        case SignalLocation::post: return "post";
        case SignalLocation::conversation: return "conversation";
        case SignalLocation::both: return "both";
    }
    throw config_error("invalid signal_location value");
}

} // namespace hashgen
