#pragma once

#include <string>

#include "hashgen/model.hpp"

namespace hashgen {

struct Checkpoint {
    ModelConfig config;
    Parameters params;
};

// Named-tensor container: magic string, format version, JSON metadata block
// (dims, vocab size, variant, layer count), then each tensor as
// name-length/name, dtype tag, rank, dims and raw little-endian values.
// Loading validates every tensor name and shape against the metadata.
void save_checkpoint(const std::string& path, const ModelConfig& config, const Parameters& params);
Checkpoint load_checkpoint(const std::string& path);

inline constexpr int kCheckpointVersion = 1;

} // namespace hashgen
