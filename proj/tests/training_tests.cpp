#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hashgen/training.hpp"
#include "test_support.hpp"

using namespace hashgen;
using testsupport::random_params;
using testsupport::tiny_config;

TEST_CASE("clip rescales the [3,4] gradient to unit norm") {
    GradMap grads;
    grads["w"] = Tensor({2}, {3.0, 4.0});
    double norm = clip_global_norm(grads, 1.0);
    CHECK(norm == doctest::Approx(5.0));
    CHECK(grads["w"].data[0] == doctest::Approx(0.6));
    CHECK(grads["w"].data[1] == doctest::Approx(0.8));
}

TEST_CASE("clip leaves small and zero gradients untouched") {
    GradMap grads;
    grads["w"] = Tensor({2}, {0.3, 0.4});
    clip_global_norm(grads, 1.0);
    CHECK(grads["w"].data == std::vector<double>{0.3, 0.4});

    GradMap zeros;
    zeros["w"] = Tensor::zeros({3});
    clip_global_norm(zeros, 1.0);
    CHECK(zeros["w"].data == std::vector<double>{0, 0, 0});
}

TEST_CASE("post-clip norm never exceeds the threshold") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        GradMap grads;
        grads["a"] = Tensor::uniform({3, 4}, -10.0, 10.0, rng);
        grads["b"] = Tensor::uniform({7}, -10.0, 10.0, rng);
        clip_global_norm(grads, 1.0);
        double sq = 0.0;
        for (const auto& [n, g] : grads)
            for (double v : g.data) sq += v * v;
        CHECK(std::sqrt(sq) <= 1.0 + 1e-9);
    }
}

TEST_CASE("clip aborts on non-finite gradients naming the parameter") {
    GradMap grads;
    grads["enc.bad"] = Tensor({2}, {1.0, std::nan("")});
    try {
        clip_global_norm(grads, 1.0);
        FAIL("expected numeric_error");
    } catch (const numeric_error& e) {
        CHECK(std::string(e.what()).find("enc.bad") != std::string::npos);
    }
}

TEST_CASE("first Adam step moves by about -lr sign(g)") {
    Parameters params;
    params["w"] = Tensor({3}, {0.0, 0.0, 0.0});
    GradMap grads;
    grads["w"] = Tensor({3}, {1.0, -2.0, 0.5});
    AdamState opt;
    opt.lr = 1e-3;
    adam_step(params, grads, opt);
    for (std::size_t i = 0; i < 3; ++i) {
        double expect = -opt.lr * grads["w"].data[i] / (std::fabs(grads["w"].data[i]) + opt.eps);
        CHECK(std::fabs(params["w"].data[i] - expect) < 1e-6);
        CHECK(std::fabs(std::fabs(params["w"].data[i]) - opt.lr) < 1e-6);
    }
}

TEST_CASE("zero gradients leave parameters unchanged") {
    Parameters params;
    params["w"] = Tensor({2}, {0.5, -0.25});
    GradMap grads;
    grads["w"] = Tensor::zeros({2});
    AdamState opt;
    adam_step(params, grads, opt);
    CHECK(params["w"].data == std::vector<double>{0.5, -0.25});
}

TEST_CASE("adam rejects non-positive learning rates") {
    Parameters params;
    params["w"] = Tensor({1}, {0.0});
    GradMap grads;
    grads["w"] = Tensor({1}, {1.0});
    AdamState opt;
    opt.lr = 0.0;
    CHECK_THROWS_AS(adam_step(params, grads, opt), config_error);
}

TEST_CASE("repeated non-improvement halves lr geometrically down to the floor") {
    Schedule schedule;
    schedule.lr = 1e-3;
    schedule.max_bad_decays = 0; // exercise the pure geometric sequence
    schedule.observe(1.0);       // initial best

    std::vector<double> rates;
    int decays = 0;
    while (true) {
        Schedule::Action a = schedule.observe(2.0); // never improves
        if (a == Schedule::Action::halved || a == Schedule::Action::stop) {
            ++decays;
            rates.push_back(schedule.lr);
        }
        if (a == Schedule::Action::stop) break;
        REQUIRE(decays < 50);
    }
    CHECK(rates[0] == doctest::Approx(5e-4));
    CHECK(rates[1] == doctest::Approx(2.5e-4));
    CHECK(schedule.lr < 1e-6);
    CHECK(decays <= 10);
}

TEST_CASE("three consecutive bad halvings stop the run") {
    Schedule schedule;
    schedule.lr = 1e-3;
    schedule.observe(1.0);
    int halvings = 0;
    Schedule::Action a = Schedule::Action::kept;
    for (int i = 0; i < 10 && a != Schedule::Action::stop; ++i) {
        a = schedule.observe(5.0);
        if (a == Schedule::Action::halved || a == Schedule::Action::stop) ++halvings;
    }
    CHECK(halvings == 3);
    CHECK(a == Schedule::Action::stop);

    // An improvement resets the bad-decay streak.
    Schedule s2;
    s2.lr = 1e-3;
    s2.observe(1.0);
    s2.observe(2.0);
    s2.observe(2.0);
    CHECK(s2.consecutive_bad_decays > 0);
    s2.observe(0.5);
    CHECK(s2.consecutive_bad_decays == 0);
}

TEST_CASE("one small Adam step decreases the loss on nearly every tiny model") {
    int decreased = 0;
    const int trials = 20;
    for (int trial = 0; trial < trials; ++trial) {
        ModelConfig cfg = tiny_config(Variant::full, 14, 6, 6);
        Parameters params = random_params(cfg, 1000 + static_cast<std::uint64_t>(trial));
        TrainingExample ex;
        ex.post_ids = {4, 5, 6};
        ex.conv_ids = {7, 8};
        ex.target_ids = {Vocabulary::kBos, 9, 10, Vocabulary::kEos};

        auto loss_of = [&](const Parameters& p) {
            Tape tape;
            ModelSession session(tape, cfg, p, false);
            return tape.value(session.forward_nll(ex).loss).data[0];
        };
        double before = loss_of(params);

        Tape tape;
        ModelSession session(tape, cfg, params, true);
        NllResult r = session.forward_nll(ex);
        tape.backward(r.loss);
        GradMap grads = tape.gradients();
        AdamState opt;
        opt.lr = 1e-4;
        adam_step(params, grads, opt);

        if (loss_of(params) < before) ++decreased;
    }
    CHECK(decreased >= trials - 1);
}

namespace {

// Tiny expanded corpus over a fixed vocabulary; target follows the post's
// first token so the mapping is learnable.
std::vector<TrainingExample> toy_examples(int n, int vocab, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<TrainingExample> out;
    for (int i = 0; i < n; ++i) {
        TrainingExample ex;
        int topic = 4 + static_cast<int>(rng.next_below(4));
        ex.post_ids = {topic, 8 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(vocab - 8)))};
        ex.conv_ids = {topic, 8 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(vocab - 8)))};
        ex.target_ids = {Vocabulary::kBos, topic, Vocabulary::kEos};
        out.push_back(std::move(ex));
    }
    return out;
}

} // namespace

TEST_CASE("fit overfits a 50-instance corpus below 0.05 nats per token") {
    ModelConfig cfg = tiny_config(Variant::full, 24, 16, 16);
    cfg.dropout = 0.1;
    auto train = toy_examples(50, 24, 17);

    RunConfig run;
    run.batch = 16;
    run.seed = 99;
    run.max_epochs = 150;
    FitResult result = fit(train, train, cfg, run);
    CHECK_FALSE(result.diverged);
    double final_nll = mean_nll(train, cfg, result.best_params);
    CHECK(final_nll < 0.05);
}

TEST_CASE("fit is deterministic under a fixed seed") {
    ModelConfig cfg = tiny_config(Variant::post_only, 20, 8, 8);
    cfg.dropout = 0.1;
    auto train = toy_examples(20, 20, 3);
    auto dev = toy_examples(6, 20, 4);

    RunConfig run;
    run.batch = 8;
    run.seed = 12345;
    run.max_epochs = 5;
    run.max_bad_decays = 0;

    FitResult a = fit(train, dev, cfg, run);
    FitResult b = fit(train, dev, cfg, run);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].train_loss == b.history[i].train_loss);
        CHECK(a.history[i].dev_loss == b.history[i].dev_loss);
    }
    for (const auto& [name, t] : a.best_params) CHECK(t.data == b.best_params.at(name).data);
}

TEST_CASE("returned checkpoint has the lowest dev loss of the run") {
    ModelConfig cfg = tiny_config(Variant::post_only, 20, 8, 8);
    auto train = toy_examples(24, 20, 5);
    auto dev = toy_examples(8, 20, 6);

    RunConfig run;
    run.batch = 8;
    run.seed = 7;
    run.max_epochs = 12;
    FitResult result = fit(train, dev, cfg, run);
    for (const auto& stats : result.history) CHECK(result.best_dev_loss <= stats.dev_loss + 1e-12);
}

TEST_CASE("fit flags divergence and keeps the last good checkpoint") {
    ModelConfig cfg = tiny_config(Variant::post_only, 16, 6, 6);
    auto train = toy_examples(8, 16, 8);

    Parameters poisoned = random_params(cfg, 1);
    poisoned["out.b"].data[0] = std::nan("");

    RunConfig run;
    run.batch = 4;
    run.seed = 11;
    run.max_epochs = 3;
    FitResult result = fit(train, train, cfg, run, &poisoned);
    CHECK(result.diverged);
}

TEST_CASE("fit rejects empty splits") {
    ModelConfig cfg = tiny_config(Variant::post_only, 16, 6, 6);
    auto train = toy_examples(4, 16, 9);
    RunConfig run;
    CHECK_THROWS_AS(fit({}, train, cfg, run), contract_error);
    CHECK_THROWS_AS(fit(train, {}, cfg, run), contract_error);
}
