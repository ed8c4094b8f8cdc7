#include "hashgen/dataset_io.hpp"

#include <fstream>
#include <iostream>

#include <json.hpp>

namespace hashgen {

namespace {

using nlohmann::json;

TokenSeq tokens_from_json(const json& arr, const std::string& where) {
    if (!arr.is_array()) throw contract_error("dataset: expected token array in " + where);
    TokenSeq out;
    out.reserve(arr.size());
    for (const auto& t : arr) {
        if (!t.is_string()) throw contract_error("dataset: non-string token in " + where);
        out.push_back(t.get<std::string>());
    }
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw contract_error("cannot open file for reading: " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw contract_error("cannot open file for writing: " + path);
    return out;
}

} // namespace

std::vector<Instance> load_dataset(const std::string& path, const LoadOptions& opts) {
    std::ifstream in = open_in(path);
    std::vector<Instance> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded())
            throw contract_error(path + ":" + std::to_string(line_no) + ": invalid JSON");
        std::string where = path + ":" + std::to_string(line_no);

        Instance inst;
        inst.post = tokens_from_json(rec.at("post"), where + " post");
        if (opts.normalize) inst.post = normalize_tokens(inst.post);

        const json& turns = rec.at("conversation");
        if (!turns.is_array()) throw contract_error("dataset: conversation must be a list of turns in " + where);
        int kept_tokens = 0;
        bool first = true;
        for (const auto& turn : turns) {
            TokenSeq words = tokens_from_json(turn, where + " conversation");
            if (opts.normalize) words = normalize_tokens(words);
            if (words.empty()) continue;
            if (kept_tokens >= opts.max_conv_len) break;
            if (!first) {
                inst.conversation.push_back(kTurnSeparator);
                ++kept_tokens;
            }
            for (const auto& w : words) {
                if (kept_tokens >= opts.max_conv_len) break;
                inst.conversation.push_back(w);
                ++kept_tokens;
            }
            first = false;
        }

        std::vector<TokenSeq> tags;
        for (const auto& tag : rec.at("hashtags")) {
            TokenSeq words = tokens_from_json(tag, where + " hashtags");
            for (auto& w : words) w = ascii_lower(w);
            tags.push_back(std::move(words));
        }
        inst.hashtags = filter_hashtags(tags);

        if (inst.hashtags.empty()) {
            std::cerr << "warning: " << where << ": no usable gold hashtags, instance dropped\n";
            continue;
        }
        if (inst.post.empty() || inst.conversation.empty()) {
            std::cerr << "warning: " << where << ": empty post or conversation, instance dropped\n";
            continue;
        }
        out.push_back(std::move(inst));
    }
    return out;
}

void write_dataset(const std::string& path, const std::vector<Instance>& instances) {
    std::ofstream out = open_out(path);
    for (const auto& inst : instances) {
        json rec;
        rec["post"] = inst.post;
        json turns = json::array();
        json turn = json::array();
        for (const auto& tok : inst.conversation) {
            if (tok == kTurnSeparator) {
                turns.push_back(std::move(turn));
                turn = json::array();
            } else {
                turn.push_back(tok);
            }
        }
        turns.push_back(std::move(turn));
        rec["conversation"] = std::move(turns);
        rec["hashtags"] = inst.hashtags;
        out << rec.dump() << "\n";
    }
}

void write_vocab(const std::string& path, const Vocabulary& vocab) {
    std::ofstream out = open_out(path);
    for (const auto& tok : vocab.tokens()) out << tok << "\n";
}

Vocabulary load_vocab(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        tokens.push_back(line);
    }
    return Vocabulary(std::move(tokens));
}

void write_predictions(const std::string& path, const std::vector<Prediction>& predictions) {
    std::ofstream out = open_out(path);
    for (const auto& pred : predictions) {
        json rec;
        rec["predictions"] = pred.tags;
        rec["scores"] = pred.scores;
        out << rec.dump() << "\n";
    }
}

std::vector<Prediction> load_predictions(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<Prediction> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded())
            throw contract_error(path + ":" + std::to_string(line_no) + ": invalid JSON");
        Prediction pred;
        for (const auto& tag : rec.at("predictions"))
            pred.tags.push_back(tokens_from_json(tag, path + ":" + std::to_string(line_no)));
        for (const auto& s : rec.at("scores")) pred.scores.push_back(s.get<double>());
        out.push_back(std::move(pred));
    }
    return out;
}

} // namespace hashgen
