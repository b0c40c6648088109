#include "rrl/bms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rrl/mathx.hpp"

namespace rrl {

namespace {

// Marsaglia-Tsang gamma sampler, shape >= 1.
double gamma_draw(Stream& s, double shape) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double x = s.normal();
        const double t = 1.0 + c * x;
        if (t <= 0.0) continue;
        const double v = t * t * t;
        const double u = s.uniform01();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double logsumexp(std::span<const double> xs) {
    const double mx = *std::max_element(xs.begin(), xs.end());
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - mx);
    return mx + std::log(acc);
}

}  // namespace

BmsResult group_bms_pxp(std::span<const double> log_evidences, int n_subjects, int n_models,
                        const Stream& rng, int n_mc) {
    if (n_models < 2) throw std::invalid_argument("group_bms_pxp: need >= 2 models");
    if (n_subjects < 2) throw std::invalid_argument("group_bms_pxp: need >= 2 subjects");
    if (log_evidences.size() != static_cast<std::size_t>(n_subjects * n_models))
        throw std::invalid_argument("group_bms_pxp: evidence table size mismatch");

    const auto m = static_cast<std::size_t>(n_models);
    auto lev = [&](int i, std::size_t j) {
        return log_evidences[static_cast<std::size_t>(i) * m + j];
    };

    // Variational fixed point for alpha.
    std::vector<double> alpha(m, 1.0);
    std::vector<double> u(static_cast<std::size_t>(n_subjects) * m, 0.0);
    for (int iter = 0; iter < 200; ++iter) {
        const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
        std::vector<double> beta(m, 0.0);
        for (int i = 0; i < n_subjects; ++i) {
            std::vector<double> logu(m);
            for (std::size_t j = 0; j < m; ++j)
                logu[j] = lev(i, j) + digamma(alpha[j]) - digamma(alpha_sum);
            const double lz = logsumexp(logu);
            for (std::size_t j = 0; j < m; ++j) {
                const double uij = std::exp(logu[j] - lz);
                u[static_cast<std::size_t>(i) * m + j] = uij;
                beta[j] += uij;
            }
        }
        double delta = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double next = 1.0 + beta[j];
            delta = std::max(delta, std::fabs(next - alpha[j]));
            alpha[j] = next;
        }
        if (delta < 1e-8) break;
    }

    BmsResult result;
    result.alpha = alpha;
    const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    result.model_freq.resize(m);
    for (std::size_t j = 0; j < m; ++j) result.model_freq[j] = alpha[j] / alpha_sum;

    // Exceedance probabilities by Dirichlet Monte Carlo.
    result.exceedance.assign(m, 0.0);
    Stream mc = rng.fork({0x657863ULL});
    std::vector<double> draw(m);
    for (int it = 0; it < n_mc; ++it) {
        std::size_t best = 0;
        for (std::size_t j = 0; j < m; ++j) {
            draw[j] = gamma_draw(mc, alpha[j]);
            if (draw[j] > draw[best]) best = j;
        }
        result.exceedance[best] += 1.0;
    }
    for (std::size_t j = 0; j < m; ++j) result.exceedance[j] /= n_mc;

    // Bayes omnibus risk: free energy of the random-effects model against
    // the equal-frequency null.
    double f0 = 0.0;
    {
        std::vector<double> tmp(m);
        for (int i = 0; i < n_subjects; ++i) {
            for (std::size_t j = 0; j < m; ++j) tmp[j] = lev(i, j) - std::log(double(m));
            f0 += logsumexp(tmp);
        }
    }
    double f1 = 0.0;
    {
        const double psi_sum = digamma(alpha_sum);
        std::vector<double> elogr(m);
        for (std::size_t j = 0; j < m; ++j) elogr[j] = digamma(alpha[j]) - psi_sum;
        for (int i = 0; i < n_subjects; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                const double uij = u[static_cast<std::size_t>(i) * m + j];
                if (uij > 1e-300) f1 += uij * (lev(i, j) + elogr[j] - std::log(uij));
            }
        // E[log p(r)] - E[log q(r)] with the flat Dirichlet prior.
        f1 += std::lgamma(static_cast<double>(m));
        double logc_alpha = std::lgamma(alpha_sum);
        for (std::size_t j = 0; j < m; ++j) logc_alpha -= std::lgamma(alpha[j]);
        f1 -= logc_alpha;
        for (std::size_t j = 0; j < m; ++j) f1 -= (alpha[j] - 1.0) * elogr[j];
    }
    result.bor = 1.0 / (1.0 + std::exp(f1 - f0));

    result.pxp.resize(m);
    for (std::size_t j = 0; j < m; ++j)
        result.pxp[j] =
            (1.0 - result.bor) * result.exceedance[j] + result.bor / static_cast<double>(m);
    return result;
}

}  // namespace rrl
