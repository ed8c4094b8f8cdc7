#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "hashgen/metrics.hpp"
#include "hashgen/rng.hpp"
#include "test_support.hpp"

using namespace hashgen;

namespace {

// Brute-force ROUGE-SU4 oracle built on explicit unit lists and sorted
// intersection, structurally unlike the map-counting implementation.
double su4_oracle(const TokenSeq& pred, const TokenSeq& gold) {
    auto units = [](const TokenSeq& seq) {
        std::vector<std::string> out;
        for (const auto& t : seq) out.push_back("U:" + t);
        for (std::size_t i = 0; i < seq.size(); ++i)
            for (std::size_t j = i + 1; j < seq.size() && j - i <= 5; ++j)
                out.push_back("P:" + seq[i] + "|" + seq[j]);
        std::sort(out.begin(), out.end());
        return out;
    };
    std::vector<std::string> pu = units(pred), gu = units(gold);
    if (pu.empty() || gu.empty()) return 0.0;
    std::vector<std::string> common;
    std::set_intersection(pu.begin(), pu.end(), gu.begin(), gu.end(), std::back_inserter(common));
    double p = static_cast<double>(common.size()) / static_cast<double>(pu.size());
    double r = static_cast<double>(common.size()) / static_cast<double>(gu.size());
    return (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
}

TokenSeq random_tokens(Rng& rng, int max_len, int alphabet) {
    int len = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_len)));
    TokenSeq out;
    for (int i = 0; i < len; ++i)
        out.push_back(std::string(1, static_cast<char>('a' + rng.next_below(static_cast<std::uint64_t>(alphabet)))));
    return out;
}

} // namespace

TEST_CASE("F1@K worked examples") {
    CHECK(f1_at_k({{"aus", "open"}}, {{"aus", "open"}}, 1) == doctest::Approx(1.0));

    std::vector<TokenSeq> five = {{"a"}, {"b"}, {"aus", "open"}, {"d"}, {"e"}};
    // one hit in the top five, single gold: P=0.2, R=1, F1=1/3
    CHECK(f1_at_k(five, {{"aus", "open"}}, 5) == doctest::Approx(1.0 / 3.0));

    CHECK(f1_at_k({{"x"}, {"y"}}, {{"gold", "tag"}}, 5) == 0.0);
    CHECK_THROWS_AS(f1_at_k({{"x"}}, {}, 1), contract_error);
}

TEST_CASE("F1@K matches against the union of gold tags after lowercasing") {
    std::vector<TokenSeq> gold = {{"Aus", "Open"}, {"tennis"}};
    CHECK(f1_at_k({{"aus", "open"}}, gold, 1) == doctest::Approx(2.0 / 3.0)); // P=1, R=1/2
    CHECK(f1_at_k({{"TENNIS"}}, gold, 1) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("F1@K ignores permutations inside the top-k window") {
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<TokenSeq> preds;
        for (int i = 0; i < 5; ++i) preds.push_back(random_tokens(rng, 2, 6));
        std::vector<TokenSeq> gold = {random_tokens(rng, 2, 6), {"q", "q"}};
        double before = f1_at_k(preds, gold, 5);
        std::vector<TokenSeq> shuffled = preds;
        rng.shuffle(shuffled);
        CHECK(f1_at_k(shuffled, gold, 5) == doctest::Approx(before));
    }
}

TEST_CASE("average precision worked examples") {
    CHECK(average_precision({{"hit"}}, {{"hit"}}, 5) == doctest::Approx(1.0));
    // single gold hit at rank 3: AP = (1/3)/1
    CHECK(average_precision({{"a"}, {"b"}, {"hit"}}, {{"hit"}}, 5) == doctest::Approx(1.0 / 3.0));
    CHECK(average_precision({{"a"}, {"b"}}, {{"hit"}}, 5) == 0.0);
    // two golds, hits at ranks 1 and 3: AP = (1 + 2/3) / 2
    CHECK(average_precision({{"g1"}, {"x"}, {"g2"}}, {{"g1"}, {"g2"}}, 5) ==
          doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
}

TEST_CASE("ROUGE-1 worked examples") {
    MatchConfig cfg;
    CHECK(rouge1_f1(TokenSeq{"aus", "open"}, TokenSeq{"aus", "open"}, cfg) == doctest::Approx(1.0));
    CHECK(rouge1_f1(TokenSeq{"open", "tennis"}, TokenSeq{"aus", "open"}, cfg) == doctest::Approx(0.5));
    CHECK(rouge1_f1(TokenSeq{"x", "y"}, TokenSeq{"a", "b"}, cfg) == 0.0);
    CHECK(rouge1_f1(TokenSeq{}, TokenSeq{"a"}, cfg) == 0.0); // empty prediction scores zero
    CHECK_THROWS_AS(rouge1_f1(TokenSeq{"a"}, TokenSeq{}, cfg), contract_error);

    // clipped counts: "a a" vs "a" has overlap 1, P=1/2, R=1
    CHECK(rouge1_f1(TokenSeq{"a", "a"}, TokenSeq{"a"}, cfg) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("ROUGE-1 averages over multiple golds") {
    MatchConfig cfg;
    std::vector<TokenSeq> golds = {{"aus", "open"}, {"tennis"}};
    double expect = (rouge1_f1(TokenSeq{"aus", "open"}, golds[0], cfg) +
                     rouge1_f1(TokenSeq{"aus", "open"}, golds[1], cfg)) /
                    2.0;
    CHECK(rouge1_f1(TokenSeq{"aus", "open"}, golds, cfg) == doctest::Approx(expect));
}

TEST_CASE("ROUGE-1 with stemming matches inflected forms") {
    MatchConfig cfg;
    cfg.stemming = true;
    CHECK(rouge1_f1(TokenSeq{"running"}, TokenSeq{"runs"}, cfg) == doctest::Approx(1.0));
    cfg.stemming = false;
    CHECK(rouge1_f1(TokenSeq{"running"}, TokenSeq{"runs"}, cfg) == 0.0);
}

TEST_CASE("ROUGE-1 symmetry when lengths match") {
    Rng rng(77);
    MatchConfig cfg;
    for (int trial = 0; trial < 100; ++trial) {
        TokenSeq a = random_tokens(rng, 4, 5);
        TokenSeq b = a;
        for (auto& t : b)
            if (rng.next_double() < 0.4) t = std::string(1, static_cast<char>('a' + rng.next_below(5)));
        CHECK(rouge1_f1(a, b, cfg) == doctest::Approx(rouge1_f1(b, a, cfg)));
    }
}

TEST_CASE("character mode reduces to word mode on unique single characters") {
    MatchConfig word_cfg;
    MatchConfig char_cfg;
    char_cfg.char_mode = true;
    TokenSeq a = {"a", "b", "c"};
    TokenSeq b = {"a", "c", "d"};
    CHECK(rouge1_f1(a, b, char_cfg) == doctest::Approx(rouge1_f1(a, b, word_cfg)));

    // multi-byte sequences split at code-point boundaries
    TokenSeq zh_pred = {"\xE4\xB8\xAD\xE5\x9B\xBD"};
    TokenSeq zh_gold = {"\xE4\xB8\xAD"};
    CHECK(rouge1_f1(zh_pred, zh_gold, char_cfg) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("ROUGE-SU4 basics") {
    MatchConfig cfg;
    CHECK(rouge_su4_f1(TokenSeq{"same"}, TokenSeq{"same"}, cfg) == doctest::Approx(1.0));
    CHECK(rouge_su4_f1(TokenSeq{"a", "b", "c"}, TokenSeq{"a", "b", "c"}, cfg) == doctest::Approx(1.0));
    double swapped = rouge_su4_f1(TokenSeq{"a", "b", "c"}, TokenSeq{"a", "c", "b"}, cfg);
    CHECK(swapped == doctest::Approx(su4_oracle({"a", "b", "c"}, {"a", "c", "b"})));
    CHECK(swapped == doctest::Approx(5.0 / 6.0)); // 3 unigrams + pairs (a,b),(a,c) of 6 units
}

TEST_CASE("ROUGE-SU4 honors the maximum skip distance") {
    MatchConfig cfg;
    // tokens 7 apart share unigrams but no skip pair
    TokenSeq far = {"x", "n1", "n2", "n3", "n4", "n5", "y"};
    TokenSeq pair = {"x", "y"};
    double got = rouge_su4_f1(pair, far, cfg);
    CHECK(got == doctest::Approx(su4_oracle(pair, far)));
    // gold has 7 unigrams + 20 in-range pairs; overlap is the two unigrams
    // only, so P = 2/3 and R = 2/27
    CHECK(got == doctest::Approx(2.0 * (2.0 / 3.0) * (2.0 / 27.0) / (2.0 / 3.0 + 2.0 / 27.0)));
}

TEST_CASE("ROUGE-SU4 equals the brute-force oracle exactly on random pairs") {
    Rng rng(123);
    MatchConfig cfg;
    for (int trial = 0; trial < 200; ++trial) {
        TokenSeq pred = random_tokens(rng, 8, 4);
        TokenSeq gold = random_tokens(rng, 8, 4);
        CHECK(rouge_su4_f1(pred, gold, cfg) == su4_oracle(pred, gold));
    }
}

TEST_CASE("metric values always lie in [0, 1]") {
    Rng rng(321);
    MatchConfig cfg;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<TokenSeq> preds;
        int np = static_cast<int>(rng.next_below(6));
        for (int i = 0; i < np; ++i) preds.push_back(random_tokens(rng, 3, 4));
        std::vector<TokenSeq> gold = {random_tokens(rng, 3, 4)};
        for (double v : {f1_at_k(preds, gold, 1), f1_at_k(preds, gold, 5),
                         average_precision(preds, gold, 5)}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        if (!preds.empty()) {
            for (double v : {rouge1_f1(preds[0], gold, cfg), rouge_su4_f1(preds[0], gold, cfg)}) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
        }
    }
}

TEST_CASE("porter stemmer classic vocabulary") {
    const std::pair<const char*, const char*> vectors[] = {
        {"caresses", "caress"}, {"ponies", "poni"},       {"ties", "ti"},
        {"caress", "caress"},   {"cats", "cat"},          {"feed", "feed"},
        {"agreed", "agre"},     {"plastered", "plaster"}, {"bled", "bled"},
        {"motoring", "motor"},  {"sing", "sing"},         {"conflated", "conflat"},
        {"troubled", "troubl"}, {"sized", "size"},        {"hopping", "hop"},
        {"tanned", "tan"},      {"falling", "fall"},      {"hissing", "hiss"},
        {"fizzed", "fizz"},     {"failing", "fail"},      {"filing", "file"},
        {"happy", "happi"},     {"sky", "sky"},           {"relational", "relat"},
        {"conditional", "condit"}, {"rational", "ration"}, {"valenci", "valenc"},
        {"digitizer", "digit"}, {"operator", "oper"},     {"feudalism", "feudal"},
        {"decisiveness", "decis"}, {"hopefulness", "hope"}, {"formaliti", "formal"},
        {"sensitiviti", "sensit"}, {"triplicate", "triplic"}, {"formative", "form"},
        {"formalize", "formal"}, {"electriciti", "electr"}, {"electrical", "electr"},
        {"hopeful", "hope"},    {"goodness", "good"},     {"revival", "reviv"},
        {"allowance", "allow"}, {"inference", "infer"},   {"airliner", "airlin"},
        {"adjustable", "adjust"}, {"defensible", "defens"}, {"irritant", "irrit"},
        {"replacement", "replac"}, {"adjustment", "adjust"}, {"dependent", "depend"},
        {"adoption", "adopt"},  {"communism", "commun"},  {"activate", "activ"},
        {"effective", "effect"}, {"probate", "probat"},   {"rate", "rate"},
        {"cease", "ceas"},      {"controll", "control"},  {"roll", "roll"},
    };
    for (const auto& [input, expect] : vectors) CHECK(porter_stem(input) == expect);

    CHECK(porter_stem("by") == "by");               // too short to stem
    CHECK(porter_stem("DIGIT5") == "DIGIT5");       // non a-z words pass through
}

TEST_CASE("evaluate on aligned files") {
    std::vector<Instance> data(3);
    data[0].post = {"p"};
    data[0].conversation = {"c"};
    data[0].hashtags = {{"aus", "open"}};
    data[1] = data[0];
    data[1].hashtags = {{"deep", "learning"}};
    data[2] = data[0];
    data[2].hashtags = {{"tennis"}};

    std::vector<Prediction> perfect(3);
    perfect[0].tags = {{"aus", "open"}};
    perfect[1].tags = {{"deep", "learning"}};
    perfect[2].tags = {{"tennis"}};

    MatchConfig cfg;
    MetricsReport r = evaluate(data, perfect, cfg);
    CHECK(r.f1_at_1 == doctest::Approx(1.0));
    CHECK(r.map_at_5 == doctest::Approx(1.0));
    CHECK(r.rouge1_f1 == doctest::Approx(1.0));
    CHECK(r.rouge_su4_f1 == doctest::Approx(1.0));
    CHECK(r.instances == 3);
    // With a single gold, F1@5 for a one-item list is 2*(1/5)/(1/5+1)
    CHECK(r.f1_at_5 == doctest::Approx(2.0 * 0.2 * 1.0 / 1.2));

    std::vector<Prediction> empty(3);
    MetricsReport zero = evaluate(data, empty, cfg);
    CHECK(zero.f1_at_1 == 0.0);
    CHECK(zero.map_at_5 == 0.0);
    CHECK(zero.rouge1_f1 == 0.0);

    std::vector<Prediction> misaligned(2);
    try {
        evaluate(data, misaligned, cfg);
        FAIL("expected contract_error");
    } catch (const contract_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("3") != std::string::npos);
        CHECK(msg.find("2") != std::string::npos);
    }
}

TEST_CASE("evaluate per-instance fixture with a reversed ranking") {
    std::vector<Instance> data(1);
    data[0].post = {"p"};
    data[0].conversation = {"c"};
    data[0].hashtags = {{"gold"}};

    std::vector<Prediction> preds(1);
    preds[0].tags = {{"wrong"}, {"gold"}};
    MatchConfig cfg;
    MetricsReport r = evaluate(data, preds, cfg);
    CHECK(r.f1_at_1 == 0.0);                        // rank 1 missed
    CHECK(r.map_at_5 == doctest::Approx(0.5));      // hit at rank 2
    CHECK(r.rouge1_f1 == 0.0);                      // top-ranked prediction only
}
