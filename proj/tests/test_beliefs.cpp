#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rrl/beliefs.hpp"
#include "rrl/mathx.hpp"

using namespace rrl;

TEST_CASE("kalman_update closed form") {
    SUBCASE("prior (0, var 100), noise var 1, observe 10") {
        KalmanBelief b = KalmanBelief::make(2, 0.0, 100.0, 1.0);
        b = kalman_update(b, 0, 10.0);
        CHECK(b.mu[0] == doctest::Approx(9.90099).epsilon(1e-6));
        CHECK(b.var[0] == doctest::Approx(0.990099).epsilon(1e-6));
        // Unobserved arm untouched.
        CHECK(b.mu[1] == 0.0);
        CHECK(b.var[1] == 100.0);
    }

    SUBCASE("observing the prior mean leaves mu unchanged") {
        KalmanBelief b = KalmanBelief::make(2, 3.5, 25.0, 2.0);
        const KalmanBelief b2 = kalman_update(b, 1, 3.5);
        CHECK(b2.mu[1] == doctest::Approx(3.5).epsilon(1e-15));
        CHECK(b2.var[1] < b.var[1]);
    }

    SUBCASE("grid Bayes oracle agrees over random observation sequences") {
        Stream rng(606);
        for (int rep = 0; rep < 100; ++rep) {
            KalmanBelief b = gaussian2_prior_belief();
            std::vector<double> obs;
            const int n = 1 + rng.uniform_int(10);
            const double truth = rng.normal(0.0, 10.0);
            for (int i = 0; i < n; ++i) {
                const double r = truth + rng.normal();
                obs.push_back(r);
                b = kalman_update(b, 0, r);
            }
            const auto grid = oracles::grid_bayes(0.0, 100.0, 1.0, obs);
            CHECK(std::fabs(b.mu[0] - grid.mean) < 1e-3);
            CHECK(std::fabs(b.var[0] - grid.var) < 1e-3);
        }
    }

    SUBCASE("posterior variance closed form after n observations") {
        KalmanBelief b = gaussian2_prior_belief();
        for (int n = 1; n <= 10; ++n) {
            b = kalman_update(b, 0, 1.23);
            const double expected = 1.0 / (1.0 / 100.0 + n / 1.0);
            CHECK(b.var[0] == doctest::Approx(expected).epsilon(1e-12));
        }
    }

    SUBCASE("invalid arm rejected") {
        const KalmanBelief b = gaussian2_prior_belief();
        CHECK_THROWS_AS(kalman_update(b, 2, 0.0), std::invalid_argument);
    }
}

TEST_CASE("decision_stats") {
    SUBCASE("symmetric belief") {
        const KalmanBelief b = gaussian2_prior_belief();
        const auto s = decision_stats(b);
        CHECK(s.v == 0.0);
        CHECK(s.ru == 0.0);
        CHECK(s.tu == doctest::Approx(std::sqrt(200.0)));
    }

    SUBCASE("3-4-5 uncertainty triangle") {
        KalmanBelief b = KalmanBelief::make(2, 0.0, 100.0, 1.0);
        b.var = {9.0, 16.0};
        const auto s = decision_stats(b);
        CHECK(s.ru == doctest::Approx(-1.0));
        CHECK(s.tu == doctest::Approx(5.0));
    }

    SUBCASE("arm swap negates V and RU, fixes TU") {
        KalmanBelief b = KalmanBelief::make(2, 0.0, 100.0, 1.0);
        b.mu = {2.0, -1.0};
        b.var = {4.0, 9.0};
        KalmanBelief swapped = b;
        std::swap(swapped.mu[0], swapped.mu[1]);
        std::swap(swapped.var[0], swapped.var[1]);
        const auto s1 = decision_stats(b);
        const auto s2 = decision_stats(swapped);
        CHECK(s2.v == doctest::Approx(-s1.v));
        CHECK(s2.ru == doctest::Approx(-s1.ru));
        CHECK(s2.tu == doctest::Approx(s1.tu));
    }
}

TEST_CASE("hybrid_choice_prob") {
    KalmanBelief b = KalmanBelief::make(2, 0.0, 100.0, 1.0);

    SUBCASE("V = 0 with Thompson weights gives a coin flip") {
        CHECK(hybrid_choice_prob({0.0, 0.0, 1.0}, b) == doctest::Approx(0.5));
    }

    SUBCASE("pure value weight at V = 1 gives Phi(1)") {
        b.mu = {1.0, 0.0};
        b.var = {3.0, 7.0};
        CHECK(hybrid_choice_prob({1.0, 0.0, 0.0}, b) ==
              doctest::Approx(0.841345).epsilon(1e-6));
    }

    SUBCASE("Phi(V/TU) equals the Monte-Carlo Thompson probability") {
        Stream rng(321);
        for (int rep = 0; rep < 10; ++rep) {
            KalmanBelief bb = KalmanBelief::make(2, 0.0, 100.0, 1.0);
            bb.mu = {rng.normal(0.0, 5.0), rng.normal(0.0, 5.0)};
            bb.var = {0.5 + 5.0 * rng.uniform01(), 0.5 + 5.0 * rng.uniform01()};
            const double phi = hybrid_choice_prob({0.0, 0.0, 1.0}, bb);
            const double mc = oracles::mc_thompson_prob(bb.mu[0], bb.var[0], bb.mu[1],
                                                        bb.var[1], 1000 + rep, 1000000);
            CHECK(std::fabs(phi - mc) < 0.002);
        }
    }

    SUBCASE("strictly inside (0,1), monotone in V for w=[1,0,0]") {
        double last = 0.0;
        for (int i = 0; i <= 20; ++i) {
            b.mu = {-6.0 + 0.6 * i, 0.0};
            const double p = hybrid_choice_prob({1.0, 0.0, 0.0}, b);
            CHECK(p > 0.0);
            CHECK(p < 1.0);
            if (i > 0) CHECK(p > last);
            last = p;
        }
        // Saturation far in the tails still stays strictly inside (0,1).
        b.mu = {50.0, 0.0};
        CHECK(hybrid_choice_prob({1.0, 0.0, 0.0}, b) < 1.0);
        b.mu = {-50.0, 0.0};
        CHECK(hybrid_choice_prob({1.0, 0.0, 0.0}, b) > 0.0);
    }

    SUBCASE("arm relabeling symmetry for arbitrary weights") {
        Stream rng(11);
        for (int rep = 0; rep < 50; ++rep) {
            KalmanBelief bb = KalmanBelief::make(2, 0.0, 100.0, 1.0);
            bb.mu = {rng.normal(0.0, 5.0), rng.normal(0.0, 5.0)};
            bb.var = {0.5 + 5.0 * rng.uniform01(), 0.5 + 5.0 * rng.uniform01()};
            KalmanBelief swapped = bb;
            std::swap(swapped.mu[0], swapped.mu[1]);
            std::swap(swapped.var[0], swapped.var[1]);
            const std::array<double, 3> w = {rng.normal(), rng.normal(), rng.normal()};
            CHECK(hybrid_choice_prob(w, bb) ==
                  doctest::Approx(1.0 - hybrid_choice_prob(w, swapped)).epsilon(1e-10));
        }
    }
}

TEST_CASE("special_case masks") {
    const WeightMask thompson = special_case(ChoiceModel::Thompson);
    CHECK(thompson.n_free() == 0);
    CHECK(thompson.fixed[2] == 1.0);

    const WeightMask boltzmann = special_case(ChoiceModel::Boltzmann);
    CHECK(boltzmann.n_free() == 1);
    CHECK(boltzmann.free[0]);
    CHECK_FALSE(boltzmann.free[1]);
    CHECK_FALSE(boltzmann.free[2]);

    const WeightMask ucb = special_case(ChoiceModel::Ucb);
    CHECK(ucb.n_free() == 2);

    const WeightMask hybrid = special_case(ChoiceModel::Hybrid);
    CHECK(hybrid.n_free() == 3);

    const WeightMask tf = special_case(ChoiceModel::ThompsonFreeW3);
    CHECK(tf.n_free() == 1);
    CHECK(tf.free[2]);

    CHECK_THROWS_AS(choice_model_from_name("epsilon"), std::invalid_argument);
}

TEST_CASE("normal cdf accuracy") {
    // Phi via erfc against reference values to better than 1e-12.
    CHECK(std::fabs(norm_cdf(0.0) - 0.5) < 1e-15);
    CHECK(std::fabs(norm_cdf(1.0) - 0.841344746068543) < 1e-12);
    CHECK(std::fabs(norm_cdf(-1.0) - 0.158655253931457) < 1e-12);
    CHECK(std::fabs(norm_cdf(3.0) - 0.998650101968370) < 1e-12);
    // Log CDF stays finite and accurate deep in the tail.
    CHECK(norm_logcdf(-40.0) == doctest::Approx(-804.608442013754).epsilon(1e-9));
    CHECK(norm_logcdf(-10.0) == doctest::Approx(std::log(norm_cdf(-10.0))).epsilon(1e-9));
}
