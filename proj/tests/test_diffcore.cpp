#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "rrl/rng.hpp"
#include "rrl/tape.hpp"

using rrl::Shape;
using rrl::Stream;
using rrl::Tape;

namespace {

std::vector<double> random_values(Stream& s, int n, double scale = 1.0) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = scale * s.normal();
    return v;
}

}  // namespace

TEST_CASE("forward op values") {
    Tape t;

    SUBCASE("sigmoid(0) = 0.5") {
        const double zero = 0.0;
        const auto x = t.leaf(Shape{1, 1}, std::span<const double>(&zero, 1));
        CHECK(t.value(t.sigmoid(x))[0] == doctest::Approx(0.5).epsilon(1e-15));
    }

    SUBCASE("matmul by the identity is the identity map") {
        Stream s(11);
        const auto a_vals = random_values(s, 9);
        std::vector<double> eye = {1, 0, 0, 0, 1, 0, 0, 0, 1};
        const auto eye_id = t.leaf(Shape{3, 3}, eye);
        const auto a = t.leaf(Shape{3, 3}, a_vals);
        const auto prod = t.matmul(eye_id, a);
        const auto got = t.value(prod);
        for (int i = 0; i < 9; ++i)
            CHECK(got[static_cast<std::size_t>(i)] ==
                  doctest::Approx(a_vals[static_cast<std::size_t>(i)]).epsilon(1e-15));
    }

    SUBCASE("softmax_log of equal logits") {
        std::vector<double> ones = {1.0, 1.0};
        const auto x = t.leaf(Shape{2, 1}, ones);
        const auto lp = t.value(t.softmax_log(x));
        CHECK(lp[0] == doctest::Approx(std::log(0.5)).epsilon(1e-15));
        CHECK(lp[1] == doctest::Approx(std::log(0.5)).epsilon(1e-15));
    }

    SUBCASE("shape mismatch is rejected with shapes reported") {
        const std::vector<double> a = {1.0, 2.0};
        const std::vector<double> b = {1.0, 2.0, 3.0};
        const auto ia = t.leaf(Shape{2, 1}, a);
        const auto ib = t.leaf(Shape{3, 1}, b);
        CHECK_THROWS_WITH_AS(t.add(ia, ib), doctest::Contains("(2x1)"),
                             std::invalid_argument);
        CHECK_THROWS_AS(t.matmul(ia, ib), std::invalid_argument);
    }

    SUBCASE("non-finite leaf is rejected") {
        const std::vector<double> bad = {1.0, std::nan("")};
        CHECK_THROWS_AS(t.leaf(Shape{2, 1}, bad), std::invalid_argument);
    }
}

TEST_CASE("backward basics") {
    SUBCASE("d(x^2)/dx at 3 is 6") {
        Tape t;
        const double three = 3.0;
        const auto x = t.leaf(Shape{1, 1}, std::span<const double>(&three, 1));
        const auto loss = t.square(x);
        t.backward(loss);
        CHECK(t.grad(x)[0] == doctest::Approx(6.0).epsilon(1e-14));
    }

    SUBCASE("non-scalar loss is rejected") {
        Tape t;
        const std::vector<double> v = {1.0, 2.0};
        const auto x = t.leaf(Shape{2, 1}, v);
        CHECK_THROWS_AS(t.backward(x), std::invalid_argument);
    }

    SUBCASE("gaussian_reparam analytic derivatives") {
        // d/d(mu) = 1, d/d(log_var) = 0.5 * sigma * eps.
        Tape t;
        const double mu = 0.7, lv = -0.4, eps = 1.3;
        const auto mu_id = t.leaf(Shape{1, 1}, std::span<const double>(&mu, 1));
        const auto lv_id = t.leaf(Shape{1, 1}, std::span<const double>(&lv, 1));
        const auto eps_id = t.constant(Shape{1, 1}, std::span<const double>(&eps, 1));
        const auto w = t.gaussian_reparam(mu_id, lv_id, eps_id);
        t.backward(w);
        CHECK(t.grad(mu_id)[0] == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(t.grad(lv_id)[0] ==
              doctest::Approx(0.5 * std::exp(0.5 * lv) * eps).epsilon(1e-12));
    }

    SUBCASE("loss = sum(tanh(Wx)) gradients match finite differences") {
        Stream s(42);
        const int m = 5, n = 4;
        const auto w0 = random_values(s, m * n, 0.7);
        const auto x0 = random_values(s, n, 0.9);
        auto eval = [&](const std::vector<double>& w_flat) {
            Tape t;
            const auto w = t.leaf(Shape{m, n}, w_flat);
            const auto x = t.constant(Shape{n, 1}, x0);
            return t.scalar(t.sum(t.tanh_(t.matmul(w, x))));
        };
        Tape t;
        const auto w = t.leaf(Shape{m, n}, w0);
        const auto x = t.constant(Shape{n, 1}, x0);
        const auto loss = t.sum(t.tanh_(t.matmul(w, x)));
        t.backward(loss);
        const auto got = t.grad(w);
        const auto fd = oracles::finite_difference(eval, w0, 1e-5);
        CHECK(oracles::max_rel_error({got.begin(), got.end()}, fd) < 1e-4);
    }
}

TEST_CASE("every op matches central finite differences on random inputs") {
    Stream s(2024);
    // Scalar loss built as mean(square(op(...))) so every op is exercised
    // inside a longer chain.
    struct Case {
        const char* name;
        int arity;
        std::function<Tape::Id(Tape&, Tape::Id, Tape::Id)> build;
    };
    const std::vector<Case> cases = {
        {"add", 2, [](Tape& t, Tape::Id a, Tape::Id b) { return t.add(a, b); }},
        {"sub", 2, [](Tape& t, Tape::Id a, Tape::Id b) { return t.sub(a, b); }},
        {"mul", 2, [](Tape& t, Tape::Id a, Tape::Id b) { return t.mul(a, b); }},
        {"sigmoid", 1, [](Tape& t, Tape::Id a, Tape::Id) { return t.sigmoid(a); }},
        {"tanh", 1, [](Tape& t, Tape::Id a, Tape::Id) { return t.tanh_(a); }},
        {"exp", 1, [](Tape& t, Tape::Id a, Tape::Id) { return t.exp_(a); }},
        {"square", 1, [](Tape& t, Tape::Id a, Tape::Id) { return t.square(a); }},
        {"softmax_log", 1, [](Tape& t, Tape::Id a, Tape::Id) { return t.softmax_log(a); }},
        {"sum", 1, [](Tape& t, Tape::Id a, Tape::Id) { return t.sum(a); }},
        {"mean", 1, [](Tape& t, Tape::Id a, Tape::Id) { return t.mean(a); }},
    };
    const int n = 6;
    for (const auto& c : cases) {
        CAPTURE(c.name);
        const auto a0 = random_values(s, n, 0.8);
        const auto b0 = random_values(s, n, 0.8);
        auto eval = [&](const std::vector<double>& av) {
            Tape t;
            const auto a = t.leaf(Shape{n, 1}, av);
            const auto b = t.constant(Shape{n, 1}, b0);
            auto mid = c.build(t, a, b);
            if (!t.shape(mid).is_scalar()) mid = t.mean(t.square(mid));
            return t.scalar(mid);
        };
        Tape t;
        const auto a = t.leaf(Shape{n, 1}, a0);
        const auto b = t.constant(Shape{n, 1}, b0);
        auto mid = c.build(t, a, b);
        if (!t.shape(mid).is_scalar()) mid = t.mean(t.square(mid));
        t.backward(mid);
        const auto got = t.grad(a);
        const auto fd = oracles::finite_difference(eval, a0, 1e-5);
        CHECK(oracles::max_rel_error({got.begin(), got.end()}, fd) < 1e-4);
    }

    SUBCASE("log gradient (positive inputs)") {
        std::vector<double> a0(6);
        for (double& v : a0) v = 0.5 + s.uniform01();
        auto eval = [&](const std::vector<double>& av) {
            Tape t;
            const auto a = t.leaf(Shape{6, 1}, av);
            return t.scalar(t.mean(t.log_(a)));
        };
        Tape t;
        const auto a = t.leaf(Shape{6, 1}, a0);
        const auto loss = t.mean(t.log_(a));
        t.backward(loss);
        const auto got = t.grad(a);
        const auto fd = oracles::finite_difference(eval, a0, 1e-6);
        CHECK(oracles::max_rel_error({got.begin(), got.end()}, fd) < 1e-4);
    }

    SUBCASE("matmul gradients, both operands, up to 32 dims") {
        const int m = 8, k = 4, nc = 1;
        const auto w0 = random_values(s, m * k, 0.6);
        const auto x0 = random_values(s, k * nc, 0.6);
        auto eval_w = [&](const std::vector<double>& wv) {
            Tape t;
            const auto w = t.leaf(Shape{m, k}, wv);
            const auto x = t.constant(Shape{k, nc}, x0);
            return t.scalar(t.mean(t.square(t.matmul(w, x))));
        };
        auto eval_x = [&](const std::vector<double>& xv) {
            Tape t;
            const auto w = t.constant(Shape{m, k}, w0);
            const auto x = t.leaf(Shape{k, nc}, xv);
            return t.scalar(t.mean(t.square(t.matmul(w, x))));
        };
        Tape t;
        const auto w = t.leaf(Shape{m, k}, w0);
        const auto x = t.leaf(Shape{k, nc}, x0);
        t.backward(t.mean(t.square(t.matmul(w, x))));
        const auto gw = t.grad(w);
        const auto gx = t.grad(x);
        CHECK(oracles::max_rel_error({gw.begin(), gw.end()},
                                     oracles::finite_difference(eval_w, w0, 1e-5)) < 1e-4);
        CHECK(oracles::max_rel_error({gx.begin(), gx.end()},
                                     oracles::finite_difference(eval_x, x0, 1e-5)) < 1e-4);
    }

    SUBCASE("matrix-matrix matmul gradient") {
        const int m = 3, k = 4, nc = 2;
        const auto w0 = random_values(s, m * k, 0.6);
        const auto x0 = random_values(s, k * nc, 0.6);
        auto eval_x = [&](const std::vector<double>& xv) {
            Tape t;
            const auto w = t.constant(Shape{m, k}, w0);
            const auto x = t.leaf(Shape{k, nc}, xv);
            return t.scalar(t.mean(t.square(t.matmul(w, x))));
        };
        Tape t;
        const auto w = t.leaf(Shape{m, k}, w0);
        const auto x = t.leaf(Shape{k, nc}, x0);
        t.backward(t.mean(t.square(t.matmul(w, x))));
        const auto gx = t.grad(x);
        CHECK(oracles::max_rel_error({gx.begin(), gx.end()},
                                     oracles::finite_difference(eval_x, x0, 1e-5)) < 1e-4);
    }

    SUBCASE("gaussian_reparam gradient vs finite differences") {
        const int n2 = 8;
        const auto mu0 = random_values(s, n2, 0.5);
        const auto lv0 = random_values(s, n2, 0.3);
        const auto eps0 = random_values(s, n2, 1.0);
        auto eval = [&](const std::vector<double>& lv) {
            Tape t;
            const auto mu = t.constant(Shape{n2, 1}, mu0);
            const auto lvi = t.leaf(Shape{n2, 1}, lv);
            const auto eps = t.constant(Shape{n2, 1}, eps0);
            return t.scalar(t.mean(t.square(t.gaussian_reparam(mu, lvi, eps))));
        };
        Tape t;
        const auto mu = t.leaf(Shape{n2, 1}, mu0);
        const auto lvi = t.leaf(Shape{n2, 1}, lv0);
        const auto eps = t.constant(Shape{n2, 1}, eps0);
        t.backward(t.mean(t.square(t.gaussian_reparam(mu, lvi, eps))));
        const auto glv = t.grad(lvi);
        CHECK(oracles::max_rel_error({glv.begin(), glv.end()},
                                     oracles::finite_difference(eval, lv0, 1e-5)) < 1e-4);
    }
}

TEST_CASE("backward is linear in the loss") {
    Stream s(7);
    const int n = 5;
    const auto x0 = random_values(s, n, 0.8);
    const double a = 1.7, b = -0.4;

    auto grads_of = [&](double ca, double cb) {
        Tape t;
        const auto x = t.leaf(Shape{n, 1}, x0);
        const auto l1 = t.sum(t.square(x));
        const auto l2 = t.sum(t.tanh_(x));
        const auto combo =
            t.add(t.mul(t.constant_scalar(ca), l1), t.mul(t.constant_scalar(cb), l2));
        t.backward(combo);
        const auto g = t.grad(x);
        return std::vector<double>(g.begin(), g.end());
    };

    const auto g1 = grads_of(1.0, 0.0);
    const auto g2 = grads_of(0.0, 1.0);
    const auto gc = grads_of(a, b);
    for (int i = 0; i < n; ++i)
        CHECK(gc[static_cast<std::size_t>(i)] ==
              doctest::Approx(a * g1[static_cast<std::size_t>(i)] +
                              b * g2[static_cast<std::size_t>(i)])
                  .epsilon(1e-10));
}

TEST_CASE("identical graphs give bit-identical values and gradients") {
    auto build = [] {
        Stream s(99);
        Tape t;
        std::vector<double> w(12), x(4);
        for (double& v : w) v = s.normal();
        for (double& v : x) v = s.normal();
        const auto wi = t.leaf(Shape{3, 4}, w);
        const auto xi = t.leaf(Shape{4, 1}, x);
        const auto loss = t.sum(t.sigmoid(t.matmul(wi, xi)));
        t.backward(loss);
        std::vector<double> out(t.value(loss).begin(), t.value(loss).end());
        out.insert(out.end(), t.grad(wi).begin(), t.grad(wi).end());
        return out;
    };
    const auto a = build();
    const auto b = build();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("gradient accumulation on shared leaves") {
    // The same leaf used twice collects both contributions.
    Tape t;
    const double x0 = 1.5;
    const auto x = t.leaf(Shape{1, 1}, std::span<const double>(&x0, 1));
    const auto loss = t.add(t.square(x), t.mul(x, t.constant_scalar(3.0)));
    t.backward(loss);
    CHECK(t.grad(x)[0] == doctest::Approx(2.0 * x0 + 3.0).epsilon(1e-14));
}

TEST_CASE("tape reset reuses storage") {
    Tape t;
    const double one = 1.0;
    const auto x = t.leaf(Shape{1, 1}, std::span<const double>(&one, 1));
    t.backward(t.square(x));
    t.reset();
    CHECK(t.size() == 0);
    const auto y = t.leaf(Shape{1, 1}, std::span<const double>(&one, 1));
    t.backward(t.square(y));
    CHECK(t.grad(y)[0] == doctest::Approx(2.0));
}
