#pragma once

#include <string>

#include "hashgen/config.hpp"

namespace hashgen {

// Options shared by every subcommand: merged config (file + overrides), the
// output directory, and whether existing output files may be replaced.
struct CommandOptions {
    Config config;
    std::string out_dir = ".";
    bool overwrite = false;
};

// Generates a synthetic corpus and writes train/dev/test JSONL splits
// (80/10/10 by seeded shuffle), the vocabulary file and a manifest.
void run_synth(const CommandOptions& opts);

// Trains per the run configuration; writes checkpoint.bin, loss.csv and a
// manifest. Throws numeric_error after saving when training diverged.
void run_train(const CommandOptions& opts);

// Streams a dataset through beam search; writes predictions.jsonl aligned
// with the input, optionally attention.jsonl with raw bi-attention matrices.
void run_generate(const CommandOptions& opts);

// Scores aligned dataset/prediction files; writes report.json and prints a
// table.
void run_evaluate(const CommandOptions& opts);

// Trains and evaluates all six variants with one seed and budget; writes
// ablation.json and prints the table. On a conversation-signal corpus the
// full variant must beat post_only on F1@1.
void run_ablate(const CommandOptions& opts);

// manifest.json: command, seed, config snapshot and format versions.
void write_manifest(const std::string& out_dir, const std::string& command, const Config& config);

} // namespace hashgen
