#include "hashgen/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace hashgen {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'H', 'G', 'C', 'K', 'P', 'T', '\0', '\0'};
constexpr std::uint8_t kDtypeF64 = 0;

template <typename T>
void write_pod(std::ofstream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw contract_error("checkpoint: truncated file " + path);
    return value;
}

} // namespace

void save_checkpoint(const std::string& path, const ModelConfig& config, const Parameters& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw contract_error("checkpoint: cannot open for writing: " + path);

    json meta;
    meta["d"] = config.hidden_dim;
    meta["e_dim"] = config.emb_dim;
    meta["vocab_size"] = config.vocab_size;
    meta["variant"] = to_string(config.variant);
    meta["enc_layers"] = config.enc_layers;
    meta["dropout"] = config.dropout;
    meta["separate_embeddings"] = config.separate_embeddings;
    std::string meta_str = meta.dump();

    out.write(kMagic, sizeof(kMagic));
    write_pod<std::uint32_t>(out, kCheckpointVersion);
    write_pod<std::uint64_t>(out, meta_str.size());
    out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));

    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, tensor] : params) {
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<std::uint8_t>(out, kDtypeF64);
        write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(tensor.shape.size()));
        for (int dim : tensor.shape) write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(dim));
        out.write(reinterpret_cast<const char*>(tensor.data.data()),
                  static_cast<std::streamsize>(tensor.data.size() * sizeof(double)));
    }
    if (!out) throw contract_error("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw contract_error("checkpoint: cannot open for reading: " + path);

    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw contract_error("checkpoint: bad magic in " + path);
    auto version = read_pod<std::uint32_t>(in, path);
    if (version != kCheckpointVersion)
        throw contract_error("checkpoint: unsupported format version " + std::to_string(version));

    auto meta_len = read_pod<std::uint64_t>(in, path);
    std::string meta_str(meta_len, '\0');
    in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
    if (!in) throw contract_error("checkpoint: truncated metadata in " + path);
    json meta = json::parse(meta_str, nullptr, false);
    if (meta.is_discarded()) throw contract_error("checkpoint: invalid metadata JSON in " + path);

    Checkpoint ckpt;
    ckpt.config.hidden_dim = meta.at("d").get<int>();
    ckpt.config.emb_dim = meta.at("e_dim").get<int>();
    ckpt.config.vocab_size = meta.at("vocab_size").get<int>();
    ckpt.config.variant = variant_from_string(meta.at("variant").get<std::string>());
    ckpt.config.enc_layers = meta.at("enc_layers").get<int>();
    ckpt.config.dropout = meta.at("dropout").get<double>();
    ckpt.config.separate_embeddings = meta.at("separate_embeddings").get<bool>();

    auto expected = param_shapes(ckpt.config);
    auto count = read_pod<std::uint32_t>(in, path);
    for (std::uint32_t i = 0; i < count; ++i) {
        auto name_len = read_pod<std::uint32_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), static_cast<std::streamsize>(name_len));
        if (!in) throw contract_error("checkpoint: truncated tensor name in " + path);

        auto dtype = read_pod<std::uint8_t>(in, path);
        if (dtype != kDtypeF64)
            throw contract_error("checkpoint: unsupported dtype tag " + std::to_string(dtype) +
                                 " for tensor '" + name + "'");
        auto rank = read_pod<std::uint8_t>(in, path);
        std::vector<int> shape;
        for (std::uint8_t r = 0; r < rank; ++r)
            shape.push_back(static_cast<int>(read_pod<std::uint64_t>(in, path)));

        auto it = expected.find(name);
        if (it == expected.end())
            throw contract_error("checkpoint: unexpected tensor '" + name + "' for variant " +
                                 to_string(ckpt.config.variant));
        if (it->second != shape)
            throw shape_error("checkpoint: tensor '" + name + "' has shape " + shape_str(shape) +
                              ", metadata implies " + shape_str(it->second));

        std::vector<double> data(shape_numel(shape));
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(double)));
        if (!in) throw contract_error("checkpoint: truncated tensor data for '" + name + "'");
        Tensor t(shape, std::move(data));
        t.requires_grad = true;
        ckpt.params.emplace(name, std::move(t));
    }

    for (const auto& [name, shape] : expected)
        if (!ckpt.params.count(name))
            throw contract_error("checkpoint: missing tensor '" + name + "' in " + path);
    return ckpt;
}

} // namespace hashgen
