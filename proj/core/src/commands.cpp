#include "hashgen/commands.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "hashgen/checkpoint.hpp"
#include "hashgen/dataset_io.hpp"
#include "hashgen/inference.hpp"
#include "hashgen/metrics.hpp"
#include "hashgen/training.hpp"

namespace hashgen {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string out_path(const CommandOptions& opts, const std::string& name) {
    fs::create_directories(opts.out_dir);
    fs::path p = fs::path(opts.out_dir) / name;
    if (fs::exists(p) && !opts.overwrite)
        throw config_error("refusing to overwrite existing file " + p.string() +
                           " (pass --overwrite)");
    return p.string();
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

ModelConfig model_config_from(const Config& cfg, int vocab_size) {
    ModelConfig mc;
    mc.variant = variant_from_string(cfg.get_str("variant", "full"));
    mc.vocab_size = vocab_size;
    mc.emb_dim = cfg.get_int("emb_dim", 64);
    mc.hidden_dim = cfg.get_int("hidden_dim", 64);
    mc.enc_layers = cfg.get_int("enc_layers", 2);
    mc.dropout = cfg.get_double("dropout", 0.1);
    mc.separate_embeddings = cfg.get_bool("separate_embeddings", false);
    mc.validate();
    return mc;
}

// The manifest records effective values, not just what the user typed, so a
// replay stays exact even if a default changes later.
void materialize_model_config(Config& cfg, const ModelConfig& mc) {
    cfg.set("variant", to_string(mc.variant));
    cfg.set("emb_dim", std::to_string(mc.emb_dim));
    cfg.set("hidden_dim", std::to_string(mc.hidden_dim));
    cfg.set("enc_layers", std::to_string(mc.enc_layers));
    cfg.set("dropout", fmt_double(mc.dropout));
    cfg.set("separate_embeddings", mc.separate_embeddings ? "true" : "false");
}

RunConfig run_config_from(const Config& cfg) {
    RunConfig rc;
    rc.batch = cfg.get_int("batch", 64);
    rc.seed = cfg.get_seed();
    rc.max_epochs = cfg.get_int("max_epochs", 100);
    rc.lr = cfg.get_double("lr", 1e-3);
    rc.clip_threshold = cfg.get_double("clip", 1.0);
    rc.lr_decay = cfg.get_double("lr_decay", 0.5);
    rc.lr_floor = cfg.get_double("lr_floor", 1e-6);
    rc.patience = cfg.get_int("patience", 1);
    rc.max_bad_decays = cfg.get_int("max_bad_decays", 3);
    return rc;
}

void materialize_run_config(Config& cfg, const RunConfig& rc) {
    cfg.set("batch", std::to_string(rc.batch));
    cfg.set("seed", std::to_string(rc.seed));
    cfg.set("max_epochs", std::to_string(rc.max_epochs));
    cfg.set("lr", fmt_double(rc.lr));
    cfg.set("clip", fmt_double(rc.clip_threshold));
    cfg.set("lr_decay", fmt_double(rc.lr_decay));
    cfg.set("lr_floor", fmt_double(rc.lr_floor));
    cfg.set("patience", std::to_string(rc.patience));
    cfg.set("max_bad_decays", std::to_string(rc.max_bad_decays));
}

BeamConfig beam_config_from(const Config& cfg) {
    BeamConfig bc;
    bc.beam_width = cfg.get_int("beam_width", 20);
    bc.max_len = cfg.get_int("max_len", 10);
    bc.top_k = cfg.get_int("top_k", 5);
    bc.min_len = cfg.get_int("min_len", 1);
    return bc;
}

void materialize_beam_config(Config& cfg, const BeamConfig& bc) {
    cfg.set("beam_width", std::to_string(bc.beam_width));
    cfg.set("max_len", std::to_string(bc.max_len));
    cfg.set("top_k", std::to_string(bc.top_k));
    cfg.set("min_len", std::to_string(bc.min_len));
}

void write_loss_csv(const std::string& path, const FitResult& fit_result) {
    std::ofstream out(path);
    if (!out) throw contract_error("cannot write " + path);
    out << "epoch,train_loss,dev_loss,lr\n";
    char buf[160];
    for (const auto& s : fit_result.history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", s.epoch, s.train_loss, s.dev_loss, s.lr);
        out << buf;
    }
}

json report_to_json(const MetricsReport& r) {
    json j;
    j["f1_at_1"] = r.f1_at_1;
    j["f1_at_5"] = r.f1_at_5;
    j["map_at_5"] = r.map_at_5;
    j["rouge1_f1"] = r.rouge1_f1;
    j["rouge_su4_f1"] = r.rouge_su4_f1;
    j["instances"] = r.instances;
    return j;
}

void print_report(const std::string& label, const MetricsReport& r) {
    std::printf("%-24s F1@1 %.4f  F1@5 %.4f  MAP@5 %.4f  RG-1 %.4f  RG-SU4 %.4f  (n=%d)\n",
                label.c_str(), r.f1_at_1, r.f1_at_5, r.map_at_5, r.rouge1_f1, r.rouge_su4_f1,
                r.instances);
}

// Instances decode independently against the parameter snapshot, so they
// fan out across worker threads; output order follows input order.
std::vector<Prediction> generate_predictions(const std::vector<Instance>& data, const Vocabulary& vocab,
                                             const ModelConfig& mc, const Parameters& params,
                                             const BeamConfig& bc) {
    std::vector<Prediction> preds(data.size());
    std::atomic<std::size_t> cursor{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        while (true) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= data.size()) return;
            try {
                const Instance& inst = data[i];
                RankedOutput ranked = beam_search(vocab.encode(inst.post),
                                                  vocab.encode(inst.conversation), mc, params, vocab, bc);
                Prediction p;
                for (const auto& item : ranked.items) {
                    p.tags.push_back(item.tokens);
                    p.scores.push_back(item.score);
                }
                preds[i] = std::move(p);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                cursor.store(data.size());
                return;
            }
        }
    };

    unsigned n_threads = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                         static_cast<unsigned>(data.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return preds;
}

// The dataset manifest records signal_location for synthetic corpora; used
// by ablate's direction check when the run config does not pin it.
std::string sniff_signal_location(const std::string& dataset_path) {
    fs::path manifest = fs::path(dataset_path).parent_path() / "manifest.json";
    if (!fs::exists(manifest)) return "";
    std::ifstream in(manifest);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("config")) return "";
    const auto& c = j.at("config");
    if (!c.contains("signal_location")) return "";
    return c.at("signal_location").get<std::string>();
}

} // namespace

void write_manifest(const std::string& out_dir, const std::string& command, const Config& config) {
    fs::create_directories(out_dir);
    json manifest;
    manifest["command"] = command;
    manifest["seed"] = config.get_seed();
    json snapshot = json::object();
    for (const auto& [k, v] : config.entries()) snapshot[k] = v;
    manifest["config"] = snapshot;
    manifest["format_versions"] = {{"dataset", 1}, {"checkpoint", kCheckpointVersion},
                                   {"predictions", 1}, {"report", 1}};
    std::ofstream out(fs::path(out_dir) / "manifest.json");
    if (!out) throw contract_error("cannot write manifest in " + out_dir);
    out << manifest.dump(2) << "\n";
}

void run_synth(const CommandOptions& opts) {
    Config cfg = opts.config;
    SynthConfig sc;
    sc.n_topics = cfg.get_int("n_topics", 10);
    sc.n_instances = cfg.get_int("n_instances", 100);
    sc.vocab_size = cfg.get_int("vocab_size", 150);
    sc.signal_location = signal_location_from_string(cfg.get_str("signal_location", "both"));
    sc.seed = cfg.get_seed();
    cfg.set("n_topics", std::to_string(sc.n_topics));
    cfg.set("n_instances", std::to_string(sc.n_instances));
    cfg.set("vocab_size", std::to_string(sc.vocab_size));
    cfg.set("signal_location", to_string(sc.signal_location));
    cfg.set("seed", std::to_string(sc.seed));
    cfg.set("vocab_max_size", std::to_string(cfg.get_int("vocab_max_size", 10000)));

    std::vector<Instance> instances = generate_synthetic(sc);

    Rng split_rng = Rng::child(sc.seed, "synth.split");
    split_rng.shuffle(instances);
    std::size_t n = instances.size();
    std::size_t n_train = static_cast<std::size_t>(0.8 * static_cast<double>(n));
    std::size_t n_dev = static_cast<std::size_t>(0.1 * static_cast<double>(n));
    std::vector<Instance> train(instances.begin(), instances.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<Instance> dev(instances.begin() + static_cast<std::ptrdiff_t>(n_train),
                              instances.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev));
    std::vector<Instance> test(instances.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev),
                               instances.end());

    std::string train_path = out_path(opts, "train.jsonl");
    std::string dev_path = out_path(opts, "dev.jsonl");
    std::string test_path = out_path(opts, "test.jsonl");
    std::string vocab_path = out_path(opts, "vocab.txt");

    write_dataset(train_path, train);
    write_dataset(dev_path, dev);
    write_dataset(test_path, test);
    write_vocab(vocab_path, build_vocab(train, cfg.get_int("vocab_max_size", 10000)));
    write_manifest(opts.out_dir, "synth", cfg);
    std::printf("synth: %zu instances -> %zu train / %zu dev / %zu test, vocab written\n", n,
                train.size(), dev.size(), test.size());
}

void run_train(const CommandOptions& opts) {
    Config cfg = opts.config;
    Vocabulary vocab = load_vocab(cfg.get_str("vocab_path"));
    std::vector<Instance> train_data = load_dataset(cfg.get_str("train_path"));
    std::vector<Instance> dev_data = load_dataset(cfg.get_str("dev_path"));

    std::vector<TrainingExample> train = expand_all(train_data, vocab);
    std::vector<TrainingExample> dev = expand_all(dev_data, vocab);

    ModelConfig mc = model_config_from(cfg, vocab.size());
    RunConfig rc = run_config_from(cfg);
    materialize_model_config(cfg, mc);
    materialize_run_config(cfg, rc);

    std::string ckpt_path = out_path(opts, "checkpoint.bin");
    std::string csv_path = out_path(opts, "loss.csv");

    FitResult result = fit(train, dev, mc, rc);

    save_checkpoint(ckpt_path, mc, result.best_params);
    write_loss_csv(csv_path, result);
    write_manifest(opts.out_dir, "train", cfg);

    std::printf("train: %d epochs run, best dev loss %.6f at epoch %d\n",
                result.history.empty() ? 0 : result.history.back().epoch, result.best_dev_loss,
                result.best_epoch);
    if (result.diverged)
        throw numeric_error("training diverged; best checkpoint before divergence was saved");
}

void run_generate(const CommandOptions& opts) {
    Config cfg = opts.config;
    Checkpoint ckpt = load_checkpoint(cfg.get_str("checkpoint_path"));
    Vocabulary vocab = load_vocab(cfg.get_str("vocab_path"));
    if (vocab.size() != ckpt.config.vocab_size)
        throw contract_error("generate: vocabulary size " + std::to_string(vocab.size()) +
                             " does not match checkpoint vocab_size " +
                             std::to_string(ckpt.config.vocab_size));
    std::vector<Instance> data = load_dataset(cfg.get_str("data_path"));
    BeamConfig bc = beam_config_from(cfg);
    materialize_beam_config(cfg, bc);

    std::string pred_path = out_path(opts, "predictions.jsonl");
    bool dump_attention = cfg.get_bool("attention_dump", false);
    std::string att_path = dump_attention ? out_path(opts, "attention.jsonl") : "";

    std::vector<Prediction> preds = generate_predictions(data, vocab, ckpt.config, ckpt.params, bc);
    write_predictions(pred_path, preds);

    if (dump_attention) {
        std::ofstream att(att_path);
        for (const auto& inst : data) {
            AttentionDump dump = attention_matrices(vocab.encode(inst.post),
                                                    vocab.encode(inst.conversation), ckpt.config,
                                                    ckpt.params);
            json rec;
            auto matrix_to_json = [](const Tensor& t) {
                json rows = json::array();
                for (int i = 0; i < t.rows(); ++i) {
                    json row = json::array();
                    for (int j = 0; j < t.cols(); ++j) row.push_back(t.at(i, j));
                    rows.push_back(std::move(row));
                }
                return rows;
            };
            rec["post_over_conv"] =
                dump.post_over_conv ? matrix_to_json(*dump.post_over_conv) : json::array();
            rec["conv_over_post"] =
                dump.conv_over_post ? matrix_to_json(*dump.conv_over_post) : json::array();
            att << rec.dump() << "\n";
        }
    }

    write_manifest(opts.out_dir, "generate", cfg);
    std::printf("generate: %zu instances decoded\n", data.size());
}

void run_evaluate(const CommandOptions& opts) {
    Config cfg = opts.config;
    std::vector<Instance> data = load_dataset(cfg.get_str("data_path"));
    std::vector<Prediction> preds = load_predictions(cfg.get_str("predictions_path"));
    MatchConfig mcfg;
    mcfg.stemming = cfg.get_bool("stemming", false);
    mcfg.char_mode = cfg.get_bool("char_mode", false);
    cfg.set("stemming", mcfg.stemming ? "true" : "false");
    cfg.set("char_mode", mcfg.char_mode ? "true" : "false");

    MetricsReport report = evaluate(data, preds, mcfg);

    std::string report_path = out_path(opts, "report.json");
    std::ofstream out(report_path);
    out << report_to_json(report).dump(2) << "\n";
    write_manifest(opts.out_dir, "evaluate", cfg);
    print_report("evaluate", report);
}

void run_ablate(const CommandOptions& opts) {
    Config cfg = opts.config;
    Vocabulary vocab = load_vocab(cfg.get_str("vocab_path"));
    std::vector<Instance> train_data = load_dataset(cfg.get_str("train_path"));
    std::vector<Instance> dev_data = load_dataset(cfg.get_str("dev_path"));
    std::vector<Instance> test_data = load_dataset(cfg.get_str("test_path"));

    std::vector<TrainingExample> train = expand_all(train_data, vocab);
    std::vector<TrainingExample> dev = expand_all(dev_data, vocab);

    RunConfig rc = run_config_from(cfg);
    BeamConfig bc = beam_config_from(cfg);
    materialize_run_config(cfg, rc);
    materialize_beam_config(cfg, bc);
    MatchConfig mcfg;
    mcfg.stemming = cfg.get_bool("stemming", false);
    mcfg.char_mode = cfg.get_bool("char_mode", false);

    // Same presentation order as the ablation table.
    const Variant variants[] = {Variant::post_only,     Variant::conv_only,
                                Variant::post_plus_conv_concat, Variant::post_att_only,
                                Variant::conv_att_only, Variant::full};

    json rows = json::array();
    std::map<Variant, double> f1_by_variant;
    for (Variant variant : variants) {
        Config vcfg = cfg;
        vcfg.set("variant", to_string(variant));
        ModelConfig mc = model_config_from(vcfg, vocab.size());
        json row;
        row["variant"] = to_string(variant);
        try {
            FitResult fitted = fit(train, dev, mc, rc);
            if (fitted.diverged) throw numeric_error("diverged");
            std::vector<Prediction> preds =
                generate_predictions(test_data, vocab, mc, fitted.best_params, bc);
            MetricsReport report = evaluate(test_data, preds, mcfg);
            f1_by_variant[variant] = report.f1_at_1;
            row["status"] = "ok";
            row["metrics"] = report_to_json(report);
            row["best_dev_loss"] = fitted.best_dev_loss;
            print_report(to_string(variant), report);
        } catch (const numeric_error& e) {
            row["status"] = "failed";
            row["error"] = e.what();
            std::printf("%-24s FAILED (%s)\n", to_string(variant).c_str(), e.what());
        }
        rows.push_back(std::move(row));
    }

    json out_json;
    out_json["rows"] = std::move(rows);

    std::string signal = cfg.get_str("signal_location", "");
    if (signal.empty()) signal = sniff_signal_location(cfg.get_str("train_path"));
    bool direction_ok = true;
    if (signal == "conversation" && f1_by_variant.count(Variant::full) &&
        f1_by_variant.count(Variant::post_only)) {
        double full_f1 = f1_by_variant[Variant::full];
        double post_f1 = f1_by_variant[Variant::post_only];
        direction_ok = full_f1 > post_f1;
        out_json["conversation_signal_check"] = {{"full_f1", full_f1},
                                                 {"post_only_f1", post_f1},
                                                 {"full_beats_post_only", direction_ok}};
        std::printf("conversation-signal check: full %.4f vs post_only %.4f -> %s\n", full_f1, post_f1,
                    direction_ok ? "ok" : "VIOLATED");
    }

    std::string out_file = out_path(opts, "ablation.json");
    std::ofstream out(out_file);
    out << out_json.dump(2) << "\n";
    write_manifest(opts.out_dir, "ablate", cfg);

    if (!direction_ok)
        throw numeric_error("ablate: full variant did not beat post_only on a conversation-signal corpus");
}

} // namespace hashgen
