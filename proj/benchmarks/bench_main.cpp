#include <benchmark/benchmark.h>

#include "hashgen/inference.hpp"
#include "hashgen/metrics.hpp"
#include "hashgen/model.hpp"
#include "hashgen/rng.hpp"

using namespace hashgen;

namespace {

ModelConfig bench_config(int vocab, int emb, int hidden) {
    ModelConfig cfg;
    cfg.variant = Variant::full;
    cfg.vocab_size = vocab;
    cfg.emb_dim = emb;
    cfg.hidden_dim = hidden;
    cfg.enc_layers = 2;
    cfg.dropout = 0.0;
    return cfg;
}

Parameters bench_params(const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    Parameters p;
    for (const auto& [name, shape] : param_shapes(cfg)) {
        p[name] = Tensor::uniform(shape, -0.08, 0.08, rng);
        p[name].requires_grad = true;
    }
    return p;
}

TrainingExample bench_example(int post_len, int conv_len, int target_len, int vocab, std::uint64_t seed) {
    Rng rng(seed);
    auto tok = [&]() { return 4 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(vocab - 4))); };
    TrainingExample ex;
    for (int i = 0; i < post_len; ++i) ex.post_ids.push_back(tok());
    for (int i = 0; i < conv_len; ++i) ex.conv_ids.push_back(tok());
    ex.target_ids.push_back(Vocabulary::kBos);
    for (int i = 0; i < target_len; ++i) ex.target_ids.push_back(tok());
    ex.target_ids.push_back(Vocabulary::kEos);
    return ex;
}

} // namespace

static void BM_Matmul(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    Rng rng(1);
    Tensor a = Tensor::uniform({n, n}, -1.0, 1.0, rng);
    Tensor b = Tensor::uniform({n, n}, -1.0, 1.0, rng);
    for (auto _ : state) {
        Tape tape;
        benchmark::DoNotOptimize(tape.value(tape.matmul(tape.constant(a), tape.constant(b))).data.data());
    }
    state.SetItemsProcessed(state.iterations() * 2ll * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

static void BM_EncodeForward(benchmark::State& state) {
    ModelConfig cfg = bench_config(304, 32, 64);
    Parameters params = bench_params(cfg, 2);
    TrainingExample ex = bench_example(12, 28, 3, cfg.vocab_size, 3);
    for (auto _ : state) {
        Tape tape;
        ModelSession session(tape, cfg, params, false);
        EncodedPair enc = session.encode(ex.post_ids, ex.conv_ids, PadMask::all_real(ex.post_ids.size()),
                                         PadMask::all_real(ex.conv_ids.size()));
        benchmark::DoNotOptimize(tape.value(enc.memory).data.data());
    }
}
BENCHMARK(BM_EncodeForward);

static void BM_NllForwardBackward(benchmark::State& state) {
    ModelConfig cfg = bench_config(304, 32, 64);
    Parameters params = bench_params(cfg, 4);
    TrainingExample ex = bench_example(12, 28, 3, cfg.vocab_size, 5);
    for (auto _ : state) {
        Tape tape;
        ModelSession session(tape, cfg, params, true);
        NllResult r = session.forward_nll(ex);
        tape.backward(r.loss);
        benchmark::DoNotOptimize(tape.gradients().size());
    }
}
BENCHMARK(BM_NllForwardBackward);

static void BM_BeamSearch(benchmark::State& state) {
    ModelConfig cfg = bench_config(304, 32, 64);
    Parameters params = bench_params(cfg, 6);
    TrainingExample ex = bench_example(12, 28, 3, cfg.vocab_size, 7);
    std::vector<std::string> tokens;
    for (int i = 4; i < cfg.vocab_size; ++i) tokens.push_back("w" + std::to_string(i));
    Vocabulary vocab(std::move(tokens));
    BeamConfig bc;
    bc.beam_width = static_cast<int>(state.range(0));
    bc.top_k = std::min(5, bc.beam_width);
    bc.max_len = 10;
    for (auto _ : state) {
        RankedOutput out = beam_search(ex.post_ids, ex.conv_ids, cfg, params, vocab, bc);
        benchmark::DoNotOptimize(out.items.size());
    }
}
BENCHMARK(BM_BeamSearch)->Arg(5)->Arg(20);

static void BM_RougeSu4(benchmark::State& state) {
    Rng rng(8);
    std::vector<TokenSeq> pred, gold;
    for (int i = 0; i < 64; ++i) {
        TokenSeq a, b;
        for (int j = 0; j < 6; ++j) {
            a.push_back(std::string(1, static_cast<char>('a' + rng.next_below(6))));
            b.push_back(std::string(1, static_cast<char>('a' + rng.next_below(6))));
        }
        pred.push_back(a);
        gold.push_back(b);
    }
    MatchConfig cfg;
    for (auto _ : state) {
        double acc = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) acc += rouge_su4_f1(pred[i], gold[i], cfg);
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long long>(pred.size()));
}
BENCHMARK(BM_RougeSu4);

BENCHMARK_MAIN();
