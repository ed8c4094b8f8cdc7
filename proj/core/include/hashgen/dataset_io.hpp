#pragma once

#include <string>
#include <vector>

#include "hashgen/corpus.hpp"

namespace hashgen {

// One ranked prediction list for a dataset line.
struct Prediction {
    std::vector<TokenSeq> tags;
    std::vector<double> scores;
};

struct LoadOptions {
    bool normalize = true;  // apply normalize_tokens to posts and turns
    int max_conv_len = 120; // token cap on the joined conversation, earliest turns kept
};

// JSON-Lines dataset: {"post": [...], "conversation": [[turn], ...],
// "hashtags": [[tag tokens], ...]} per line, UTF-8. Turns are normalized,
// joined with kTurnSeparator, and capped. Hashtags are lowercased and
// single-character tags dropped; instances left with no gold tags (or with an
// empty post/conversation) are skipped with a warning on stderr.
std::vector<Instance> load_dataset(const std::string& path, const LoadOptions& opts = {});

// Inverse of load_dataset's joining: the conversation splits back into turns
// at kTurnSeparator.
void write_dataset(const std::string& path, const std::vector<Instance>& instances);

// One token per line, line number = id - 4.
void write_vocab(const std::string& path, const Vocabulary& vocab);
Vocabulary load_vocab(const std::string& path);

// Prediction JSONL: {"predictions": [[tag tokens], ...], "scores": [...]}
// aligned 1:1 with the dataset it was generated from.
void write_predictions(const std::string& path, const std::vector<Prediction>& predictions);
std::vector<Prediction> load_predictions(const std::string& path);

} // namespace hashgen
