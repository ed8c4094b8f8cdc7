#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hashgen/commands.hpp"
#include "hashgen/error.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir = ".";
    bool overwrite = false;
    std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Run configuration file (key=value or manifest.json)");
    cmd->add_option("--set", args.overrides, "Override a config key, key=value (repeatable)");
    cmd->add_option("--out", args.out_dir, "Output directory");
    cmd->add_option("--seed", args.seed, "Override the root seed");
    cmd->add_flag("--overwrite", args.overwrite, "Replace existing output files");
}

hashgen::CommandOptions build_options(const CommonArgs& args) {
    hashgen::CommandOptions opts;
    if (!args.config_path.empty()) opts.config = hashgen::Config::from_file(args.config_path);
    for (const auto& kv : args.overrides) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw hashgen::config_error("--set expects key=value, got '" + kv + "'");
        opts.config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (args.seed >= 0) opts.config.set("seed", std::to_string(args.seed));
    opts.out_dir = args.out_dir;
    opts.overwrite = args.overwrite;
    return opts;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conversation-aware hashtag generation toolkit"};
    app.require_subcommand(1);

    CommonArgs synth_args, train_args, gen_args, eval_args, ablate_args;
    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic corpus and splits");
    CLI::App* train = app.add_subcommand("train", "Train a model");
    CLI::App* generate = app.add_subcommand("generate", "Decode hashtags with beam search");
    CLI::App* evaluate = app.add_subcommand("evaluate", "Score predictions against gold hashtags");
    CLI::App* ablate = app.add_subcommand("ablate", "Train and compare all model variants");
    add_common(synth, synth_args);
    add_common(train, train_args);
    add_common(generate, gen_args);
    add_common(evaluate, eval_args);
    add_common(ablate, ablate_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) hashgen::run_synth(build_options(synth_args));
        if (train->parsed()) hashgen::run_train(build_options(train_args));
        if (generate->parsed()) hashgen::run_generate(build_options(gen_args));
        if (evaluate->parsed()) hashgen::run_evaluate(build_options(eval_args));
        if (ablate->parsed()) hashgen::run_ablate(build_options(ablate_args));
    } catch (const hashgen::numeric_error& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
