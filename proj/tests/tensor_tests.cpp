#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hashgen/rng.hpp"
#include "hashgen/tape.hpp"
#include "hashgen/tensor.hpp"

using namespace hashgen;

TEST_CASE("tensor shape and data length must agree") {
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), shape_error);
    CHECK_THROWS_AS(Tensor({0}, {}), shape_error);
    CHECK_THROWS_AS(Tensor({2, 3, 4}, std::vector<double>(24, 0.0)), shape_error);
    Tensor ok({2, 2}, {1, 2, 3, 4});
    CHECK(ok.size() == 4);
}

TEST_CASE("matmul identity case") {
    Tape tape;
    Var eye = tape.constant(Tensor({2, 2}, {1, 0, 0, 1}));
    Var a = tape.constant(Tensor({2, 2}, {1, 2, 3, 4}));
    const Tensor& out = tape.value(tape.matmul(eye, a));
    CHECK(out.data == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("matmul zero case") {
    Tape tape;
    Var a = tape.constant(Tensor({2, 2}, {1, 2, 3, 4}));
    Var z = tape.constant(Tensor({2, 1}, {0, 0}));
    const Tensor& out = tape.value(tape.matmul(a, z));
    CHECK(out.shape == std::vector<int>{2, 1});
    CHECK(out.data == std::vector<double>{0, 0});
}

TEST_CASE("matmul hand-multiplied oracle") {
    // [[1,2],[3,4]] x [[5,6],[7,8]] worked out by hand.
    Tape tape;
    Var a = tape.constant(Tensor({2, 2}, {1, 2, 3, 4}));
    Var b = tape.constant(Tensor({2, 2}, {5, 6, 7, 8}));
    const Tensor& out = tape.value(tape.matmul(a, b));
    CHECK(out.data == std::vector<double>{19, 22, 43, 50});
}

TEST_CASE("matmul shape mismatch names both shapes") {
    Tape tape;
    Var a = tape.constant(Tensor::zeros({2, 3}));
    Var b = tape.constant(Tensor::zeros({2, 3}));
    try {
        tape.matmul(a, b);
        FAIL("expected shape_error");
    } catch (const shape_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
    }
}

TEST_CASE("identity product stays bit-near the input") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 2 + static_cast<int>(rng.next_below(6));
        Tensor a = Tensor::uniform({n, n}, -5.0, 5.0, rng);
        Tensor eye = Tensor::zeros({n, n});
        for (int i = 0; i < n; ++i) eye.at(i, i) = 1.0;
        Tape tape;
        const Tensor& out = tape.value(tape.matmul(tape.constant(eye), tape.constant(a)));
        for (std::size_t i = 0; i < a.data.size(); ++i)
            CHECK(std::fabs(out.data[i] - a.data[i]) <= 1e-12);
    }
}

TEST_CASE("softmax of equal inputs is uniform") {
    Tape tape;
    const Tensor& out = tape.value(tape.softmax_rows(tape.constant(Tensor({1, 3}, {0, 0, 0}))));
    for (double v : out.data) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax is stable under large inputs") {
    Tape tape;
    const Tensor& out = tape.value(tape.softmax_rows(tape.constant(Tensor({1, 2}, {1000.0, 0.0}))));
    CHECK(std::isfinite(out.data[0]));
    CHECK(out.data[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(out.data[1] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("softmax matches the direct exp/sum oracle") {
    Tape tape;
    const Tensor& out = tape.value(tape.softmax_rows(tape.constant(Tensor({1, 3}, {1, 2, 3}))));
    CHECK(std::fabs(out.data[0] - 0.09003) < 1e-5);
    CHECK(std::fabs(out.data[1] - 0.24473) < 1e-5);
    CHECK(std::fabs(out.data[2] - 0.66524) < 1e-5);

    // Independent direct computation on random rows.
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor x = Tensor::uniform({2, 5}, -4.0, 4.0, rng);
        Tape t2;
        const Tensor& y = t2.value(t2.softmax_rows(t2.constant(x)));
        for (int i = 0; i < 2; ++i) {
            double denom = 0.0;
            for (int j = 0; j < 5; ++j) denom += std::exp(x.at(i, j));
            for (int j = 0; j < 5; ++j)
                CHECK(y.at(i, j) == doctest::Approx(std::exp(x.at(i, j)) / denom).epsilon(1e-12));
        }
    }
}

TEST_CASE("softmax rows sum to one, masked entries exactly zero") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        int m = 1 + static_cast<int>(rng.next_below(4));
        int n = 2 + static_cast<int>(rng.next_below(6));
        Tensor x = Tensor::uniform({m, n}, -8.0, 8.0, rng);
        Tensor mask = Tensor::zeros({m, n});
        for (int i = 0; i < m; ++i) {
            bool any = false;
            for (int j = 0; j < n; ++j) {
                mask.at(i, j) = rng.next_double() < 0.6 ? 1.0 : 0.0;
                any = any || mask.at(i, j) != 0.0;
            }
            if (!any) mask.at(i, static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)))) = 1.0;
        }
        Tape tape;
        const Tensor& y = tape.value(tape.softmax_rows(tape.constant(x), mask));
        for (int i = 0; i < m; ++i) {
            double sum = 0.0;
            for (int j = 0; j < n; ++j) {
                if (mask.at(i, j) == 0.0) CHECK(y.at(i, j) == 0.0);
                sum += y.at(i, j);
            }
            CHECK(std::fabs(sum - 1.0) < 1e-6);
        }
    }
}

TEST_CASE("fully masked row is a contract violation") {
    Tape tape;
    Tensor mask = Tensor::zeros({2, 3});
    mask.at(0, 0) = 1.0;
    Var x = tape.constant(Tensor::zeros({2, 3}));
    CHECK_THROWS_AS(tape.softmax_rows(x, mask), contract_error);
}

TEST_CASE("elementwise fixpoints") {
    Tape tape;
    CHECK(tape.value(tape.tanh(tape.constant(Tensor::scalar(0.0)))).data[0] == 0.0);
    CHECK(tape.value(tape.sigmoid(tape.constant(Tensor::scalar(0.0)))).data[0] == 0.5);
    CHECK(tape.value(tape.tanh(tape.constant(Tensor::scalar(1.0)))).data[0] ==
          doctest::Approx(0.761594).epsilon(1e-6));
}

TEST_CASE("elementwise add/sub/mul with bias broadcast") {
    Tape tape;
    Var a = tape.constant(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    Var bias = tape.constant(Tensor({3}, {10, 20, 30}));
    CHECK(tape.value(tape.add(a, bias)).data == std::vector<double>{11, 22, 33, 14, 25, 36});
    CHECK(tape.value(tape.sub(a, bias)).data == std::vector<double>{-9, -18, -27, -6, -15, -24});
    CHECK(tape.value(tape.mul(a, bias)).data == std::vector<double>{10, 40, 90, 40, 100, 180});

    Var wrong = tape.constant(Tensor({4}, {1, 2, 3, 4}));
    CHECK_THROWS_AS(tape.add(a, wrong), shape_error);
    CHECK_THROWS_AS(tape.mul(a, tape.constant(Tensor::zeros({3, 2}))), shape_error);
}

TEST_CASE("structural ops slice, gather, stack, concat, pick") {
    Tape tape;
    Var x = tape.constant(Tensor({3, 2}, {1, 2, 3, 4, 5, 6}));
    CHECK(tape.value(tape.slice_rows(x, 1, 3)).data == std::vector<double>{3, 4, 5, 6});
    CHECK(tape.value(tape.gather_rows(x, {2, 0, 2})).data == std::vector<double>{5, 6, 1, 2, 5, 6});
    CHECK(tape.value(tape.transpose(x)).data == std::vector<double>{1, 3, 5, 2, 4, 6});

    Var r0 = tape.slice_rows(x, 0, 1);
    Var r2 = tape.slice_rows(x, 2, 3);
    CHECK(tape.value(tape.stack_rows({r0, r2})).data == std::vector<double>{1, 2, 5, 6});
    CHECK(tape.value(tape.concat_cols(r0, r2)).data == std::vector<double>{1, 2, 5, 6});
    CHECK(tape.value(tape.concat_rows(r0, r2)).shape == std::vector<int>{2, 2});
    CHECK(tape.value(tape.pick_entries(x, {{0, 1}, {2, 0}})).data == std::vector<double>{2, 5});

    CHECK_THROWS_AS(tape.slice_rows(x, 2, 2), contract_error);
    CHECK_THROWS_AS(tape.gather_rows(x, {3}), contract_error);
    CHECK_THROWS_AS(tape.pick_entries(x, {{0, 5}}), contract_error);
}
