#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "hashgen/inference.hpp"
#include "test_support.hpp"

using namespace hashgen;
using testsupport::enumerate_best;
using testsupport::numbered_vocab;
using testsupport::random_params;
using testsupport::tiny_config;

TEST_CASE("hypothesis ordering is total and deterministic") {
    Hypothesis a, b;
    a.tokens = {4, 5};
    b.tokens = {4, 5, 6};
    a.log_prob = b.log_prob = -1.0;
    CHECK(compare_hypotheses(a, b) < 0); // equal scores: shorter first

    b.tokens = {4, 6};
    CHECK(compare_hypotheses(a, b) < 0); // equal scores and lengths: lexicographic

    b.log_prob = -0.5;
    CHECK(compare_hypotheses(a, b) > 0); // higher score first regardless of length
    CHECK(compare_hypotheses(a, a) == 0);
}

TEST_CASE("beam config validation") {
    ModelConfig cfg = tiny_config(Variant::full, 12, 6, 6);
    Parameters params = random_params(cfg, 2);
    Vocabulary vocab = numbered_vocab(12);

    BeamConfig bad;
    bad.beam_width = 3;
    bad.top_k = 5;
    CHECK_THROWS_AS(beam_search({4, 5}, {6, 7}, cfg, params, vocab, bad), config_error);
    bad.beam_width = 0;
    CHECK_THROWS_AS(beam_search({4, 5}, {6, 7}, cfg, params, vocab, bad), config_error);
}

TEST_CASE("width-1 beam follows the greedy path with optimal stopping") {
    // A frozen EOS extension never occupies a beam slot, so the width-1 live
    // trajectory is exactly greedy argmax over non-EOS tokens; the returned
    // top-1 is that path cut at its best-scoring EOS point.
    for (std::uint64_t seed : {3, 4, 5, 6, 7}) {
        ModelConfig cfg = tiny_config(Variant::full, 14, 6, 6);
        Parameters params = random_params(cfg, seed);
        Vocabulary vocab = numbered_vocab(14);
        std::vector<int> post = {4, 5, 6};
        std::vector<int> conv = {7, 8};

        BeamConfig bc;
        bc.beam_width = 1;
        bc.top_k = 1;
        bc.max_len = 6;
        RankedOutput out = beam_search(post, conv, cfg, params, vocab, bc);

        // Greedy trace over non-EOS tokens, recording the score of stopping
        // (emitting EOS) after each prefix.
        Tape tape;
        ModelSession session(tape, cfg, params, false);
        EncodedPair enc = session.encode(post, conv, PadMask::all_real(3), PadMask::all_real(2));
        DecoderState state = session.initial_decoder_state(enc);
        std::vector<int> path;
        double path_score = 0.0;
        std::vector<std::pair<double, std::vector<int>>> stops;
        int prev = Vocabulary::kBos;
        for (int step = 0; step < bc.max_len; ++step) {
            DecodeStep ds = session.decode_step(state, prev, enc.memory, enc.memory_mask);
            Tensor penalty = Tensor::zeros({1, cfg.vocab_size});
            penalty.at(0, Vocabulary::kPad) = -1e9;
            penalty.at(0, Vocabulary::kUnk) = -1e9;
            penalty.at(0, Vocabulary::kBos) = -1e9;
            if (static_cast<int>(path.size()) < bc.min_len) penalty.at(0, Vocabulary::kEos) = -1e9;
            Var logp = tape.log_softmax_rows(tape.add(ds.logits, tape.constant(penalty)));
            const Tensor& lp = tape.value(logp);

            if (static_cast<int>(path.size()) >= bc.min_len)
                stops.emplace_back(path_score + lp.at(0, Vocabulary::kEos), path);

            int best = -1;
            double best_lp = -1e300;
            for (int v = 0; v < cfg.vocab_size; ++v) {
                if (v == Vocabulary::kPad || v == Vocabulary::kUnk || v == Vocabulary::kBos ||
                    v == Vocabulary::kEos)
                    continue;
                if (lp.at(0, v) > best_lp) {
                    best_lp = lp.at(0, v);
                    best = v;
                }
            }
            path.push_back(best);
            path_score += best_lp;
            state = ds.next;
            state.last_token = best;
            prev = best;
        }

        REQUIRE(out.items.size() == 1);
        REQUIRE(!stops.empty());
        auto best_stop = *std::max_element(stops.begin(), stops.end(),
                                           [](const auto& a, const auto& b) { return a.first < b.first; });
        CHECK(out.items[0].tokens == vocab.decode(best_stop.second));
        CHECK(out.items[0].score == doctest::Approx(best_stop.first).epsilon(1e-12));
    }
}

TEST_CASE("outputs are sorted, deduplicated, and at most K") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ModelConfig cfg = tiny_config(Variant::full, 16, 6, 6);
        Parameters params = random_params(cfg, 100 + seed);
        Vocabulary vocab = numbered_vocab(16);
        BeamConfig bc;
        bc.beam_width = 8;
        bc.top_k = 5;
        bc.max_len = 4;
        RankedOutput out = beam_search({4, 5, 6}, {7, 8, 9}, cfg, params, vocab, bc);

        CHECK(out.items.size() <= 5);
        CHECK(!out.items.empty());
        std::set<TokenSeq> seen;
        for (const auto& item : out.items) {
            CHECK(seen.insert(item.tokens).second); // pairwise distinct surfaces
            CHECK(item.score <= 1e-12);             // log probabilities
            for (const auto& tok : item.tokens) {
                CHECK(tok != "<unk>");
                CHECK(tok != "<pad>");
                CHECK(tok != "<bos>");
                CHECK(tok != "<eos>");
            }
        }
    }
}

TEST_CASE("beam search is deterministic") {
    ModelConfig cfg = tiny_config(Variant::full, 14, 6, 6);
    Parameters params = random_params(cfg, 55);
    Vocabulary vocab = numbered_vocab(14);
    BeamConfig bc;
    bc.beam_width = 6;
    bc.top_k = 4;
    RankedOutput a = beam_search({4, 5}, {6, 7, 8}, cfg, params, vocab, bc);
    RankedOutput b = beam_search({4, 5}, {6, 7, 8}, cfg, params, vocab, bc);
    REQUIRE(a.items.size() == b.items.size());
    for (std::size_t i = 0; i < a.items.size(); ++i) {
        CHECK(a.items[i].tokens == b.items[i].tokens);
        CHECK(a.items[i].score == b.items[i].score);
    }
}

TEST_CASE("a point mass on EOS still yields a single best unigram") {
    ModelConfig cfg = tiny_config(Variant::full, 12, 6, 6);
    Parameters params;
    for (const auto& [name, shape] : param_shapes(cfg)) params[name] = Tensor::zeros(shape);
    params["out.b"].data[Vocabulary::kEos] = 50.0; // distribution ~ point mass on EOS

    Vocabulary vocab = numbered_vocab(12);
    BeamConfig bc;
    bc.beam_width = 4;
    bc.top_k = 2;
    bc.max_len = 5;
    RankedOutput out = beam_search({4, 5}, {6, 7}, cfg, params, vocab, bc);

    REQUIRE(!out.items.empty());
    CHECK(out.items[0].tokens.size() == 1);
    // All weights zero: every unigram ties, so the tiebreak picks the
    // smallest token id, which is id 4.
    CHECK(out.items[0].tokens[0] == vocab.token(4));
}

TEST_CASE("beam equals exhaustive enumeration on small vocabularies") {
    int agreements = 0;
    const int trials = 10;
    for (int trial = 0; trial < trials; ++trial) {
        ModelConfig cfg = tiny_config(Variant::full, 12, 8, 8);
        Parameters params = random_params(cfg, 9000 + static_cast<std::uint64_t>(trial));
        Vocabulary vocab = numbered_vocab(12);
        Rng rng(300 + static_cast<std::uint64_t>(trial));
        std::vector<int> post, conv;
        for (int i = 0; i < 4; ++i) post.push_back(4 + static_cast<int>(rng.next_below(8)));
        for (int i = 0; i < 5; ++i) conv.push_back(4 + static_cast<int>(rng.next_below(8)));

        BeamConfig bc;
        bc.beam_width = 12;
        bc.top_k = 1;
        bc.max_len = 3;
        RankedOutput beam = beam_search(post, conv, cfg, params, vocab, bc);
        auto oracle = enumerate_best(post, conv, cfg, params, bc.max_len, bc.min_len);

        REQUIRE(beam.items.size() == 1);
        REQUIRE(oracle.found);
        if (beam.items[0].tokens == vocab.decode(oracle.tokens) &&
            std::fabs(beam.items[0].score - oracle.score) < 1e-9)
            ++agreements;
    }
    CHECK(agreements == trials);
}

TEST_CASE("attention matrices are dumped for bi-attention variants only") {
    Parameters params = random_params(tiny_config(Variant::full), 8);
    AttentionDump full = attention_matrices({4, 5, 6}, {7, 8}, tiny_config(Variant::full), params);
    REQUIRE(full.post_over_conv.has_value());
    REQUIRE(full.conv_over_post.has_value());
    CHECK(full.post_over_conv->shape == std::vector<int>{3, 2});
    CHECK(full.conv_over_post->shape == std::vector<int>{2, 3});
    for (int i = 0; i < 3; ++i) {
        double sum = 0.0;
        for (int j = 0; j < 2; ++j) sum += full.post_over_conv->at(i, j);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }

    ModelConfig postcfg = tiny_config(Variant::post_only);
    AttentionDump none = attention_matrices({4, 5, 6}, {7, 8}, postcfg, random_params(postcfg, 9));
    CHECK_FALSE(none.post_over_conv.has_value());
    CHECK_FALSE(none.conv_over_post.has_value());
}
