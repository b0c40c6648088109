#pragma once

// Test-only oracles, kept independent of the implementation paths they
// check: central finite differences for gradients, a discretized-grid Bayes
// posterior for the Kalman filter, Monte-Carlo estimates of the exact
// log-uniform KL difference, and a Monte-Carlo Thompson choice probability.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "rrl/rng.hpp"

namespace oracles {

// Central finite differences d f / d x_i with step h.
inline std::vector<double> finite_difference(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    double h = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double fp = f(x);
        x[i] = orig - h;
        const double fm = f(x);
        x[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline double max_rel_error(const std::vector<double>& got, const std::vector<double>& want,
                            double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double denom = std::max(std::fabs(want[i]), floor);
        worst = std::max(worst, std::fabs(got[i] - want[i]) / denom);
    }
    return worst;
}

// Posterior mean/variance of a Gaussian-prior, Gaussian-likelihood arm by
// brute-force discretization; the conjugate closed form never enters.
struct GridPosterior {
    double mean;
    double var;
};

inline GridPosterior grid_bayes(double prior_mean, double prior_var, double noise_var,
                                const std::vector<double>& observations, int n_points = 10000) {
    const double prior_sd = std::sqrt(prior_var);
    const double lo = prior_mean - 8.0 * prior_sd;
    const double hi = prior_mean + 8.0 * prior_sd;
    const double dx = (hi - lo) / (n_points - 1);
    std::vector<double> logp(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        const double omega = lo + i * dx;
        double lp = -0.5 * (omega - prior_mean) * (omega - prior_mean) / prior_var;
        for (double r : observations) lp += -0.5 * (r - omega) * (r - omega) / noise_var;
        logp[static_cast<std::size_t>(i)] = lp;
    }
    double mx = logp[0];
    for (double v : logp) mx = std::max(mx, v);
    double z = 0.0, m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < n_points; ++i) {
        const double omega = lo + i * dx;
        const double w = std::exp(logp[static_cast<std::size_t>(i)] - mx);
        z += w;
        m1 += w * omega;
        m2 += w * omega * omega;
    }
    m1 /= z;
    m2 /= z;
    return {m1, m2 - m1 * m1};
}

// E log|1 + sqrt(alpha) eps| with eps ~ N(0,1), shared draws across alphas
// so differences of exact KL values are low-variance:
//   KL(a1) - KL(a2) = [E log|1+sqrt(a1) e| - 0.5 log a1]
//                   - [E log|1+sqrt(a2) e| - 0.5 log a2].
inline double mc_e_log_abs(double alpha, std::uint64_t seed, long n_samples) {
    rrl::Stream s(seed);
    const double rt = std::sqrt(alpha);
    double acc = 0.0;
    for (long i = 0; i < n_samples; ++i) acc += std::log(std::fabs(1.0 + rt * s.normal()));
    return acc / static_cast<double>(n_samples);
}

inline double mc_exact_kl_difference(double alpha1, double alpha2, std::uint64_t seed,
                                     long n_samples = 10000000) {
    const double t1 = mc_e_log_abs(alpha1, seed, n_samples) - 0.5 * std::log(alpha1);
    const double t2 = mc_e_log_abs(alpha2, seed, n_samples) - 0.5 * std::log(alpha2);
    return t1 - t2;
}

// Monte-Carlo probability that arm 0's posterior draw beats arm 1's.
inline double mc_thompson_prob(double mu0, double var0, double mu1, double var1,
                               std::uint64_t seed, long n_draws = 1000000) {
    rrl::Stream s(seed);
    const double sd0 = std::sqrt(var0);
    const double sd1 = std::sqrt(var1);
    long wins = 0;
    for (long i = 0; i < n_draws; ++i) {
        const double a = mu0 + sd0 * s.normal();
        const double b = mu1 + sd1 * s.normal();
        if (a > b) ++wins;
    }
    return static_cast<double>(wins) / static_cast<double>(n_draws);
}

}  // namespace oracles
