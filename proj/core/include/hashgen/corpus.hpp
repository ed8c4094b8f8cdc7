#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hashgen/error.hpp"

namespace hashgen {

using TokenSeq = std::vector<std::string>;

// Surface form of the reserved token that separates conversation turns once
// they are joined into a single sequence. It is an ordinary vocabulary entry,
// not a reserved id.
inline constexpr const char* kTurnSeparator = "<turn>";

// Token <-> id map shared by posts, conversations and hashtags. Ids 0..3 are
// reserved (PAD, UNK, BOS, EOS) and never evicted; real tokens start at 4.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kBos = 2;
    static constexpr int kEos = 3;
    static constexpr int kReserved = 4;

    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> tokens_in_id_order);

    int size() const { return static_cast<int>(id_to_token_.size()) + kReserved; }
    int id(const std::string& token) const; // kUnk when absent
    bool contains(const std::string& token) const { return token_to_id_.count(token) != 0; }
    const std::string& token(int id) const;

    std::vector<int> encode(const TokenSeq& tokens) const;
    TokenSeq decode(const std::vector<int>& ids) const;

    // Non-reserved tokens in id order (id = position + 4).
    const std::vector<std::string>& tokens() const { return id_to_token_; }

private:
    std::vector<std::string> id_to_token_;
    std::map<std::string, int> token_to_id_;
};

// One dataset record: a post, its conversation (turns already joined with
// kTurnSeparator, chronological order) and a nonempty set of gold hashtags.
struct Instance {
    TokenSeq post;
    TokenSeq conversation;
    std::vector<TokenSeq> hashtags;
};

// Supervised pair: one gold hashtag per example, target wrapped BOS ... EOS.
struct TrainingExample {
    std::vector<int> post_ids;
    std::vector<int> conv_ids;
    std::vector<int> target_ids;
};

std::string ascii_lower(const std::string& s);

// URL -> "URL", @mention -> "MENTION", all-digit -> "DIGIT", else lowercased
// (ASCII letters only; multi-byte text passes through untouched).
TokenSeq normalize_tokens(const TokenSeq& raw);

// Drops hashtags whose whole surface form is a single character (one token of
// one Unicode code point). May return an empty set; callers drop such
// instances.
std::vector<TokenSeq> filter_hashtags(const std::vector<TokenSeq>& tags);

// The max_size most frequent tokens over posts, conversations and hashtags;
// frequency ties break lexicographically.
Vocabulary build_vocab(const std::vector<Instance>& instances, int max_size);

// One TrainingExample per gold hashtag; OOV tokens map to UNK.
std::vector<TrainingExample> expand_instances(const Instance& instance, const Vocabulary& vocab);
std::vector<TrainingExample> expand_all(const std::vector<Instance>& instances, const Vocabulary& vocab);

enum class SignalLocation { post, conversation, both };

SignalLocation signal_location_from_string(const std::string& s);
std::string to_string(SignalLocation loc);

struct SynthConfig {
    int n_topics = 10;
    int n_instances = 100;
    int vocab_size = 120; // distinct surface words available to the generator
    SignalLocation signal_location = SignalLocation::both;
    std::uint64_t seed = 0;
};

// Deterministic topic-keyphrase corpus. Each instance draws a topic whose
// 1-3 word keyphrase is the gold hashtag; topic-indicative words are planted
// in the post, the conversation, or both, mixed with noise words. Keyphrase,
// indicative and noise word pools are pairwise disjoint.
std::vector<Instance> generate_synthetic(const SynthConfig& config);

} // namespace hashgen
