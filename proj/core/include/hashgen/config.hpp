#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "hashgen/error.hpp"

namespace hashgen {

// Flat key=value run configuration ('#' starts a comment). A manifest.json
// written by a previous run is also accepted; its config snapshot is loaded,
// which makes reruns from a manifest exact.
class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path);
    static Config parse_flat(const std::string& text, const std::string& origin);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_str(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    int get_int(const std::string& key, int fallback) const;
    int require_int(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::uint64_t get_seed() const { return get_u64("seed", 0); }
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

} // namespace hashgen
