#pragma once

#include <array>
#include <span>
#include <vector>

#include "rrl/beliefs.hpp"
#include "rrl/checkpoint.hpp"
#include "rrl/dataset.hpp"
#include "rrl/rng.hpp"

namespace rrl {

// epsilon-greedy error model: mixes a model probability with uniform choice.
double epsilon_greedy_mix(double p, double eps);

// How beliefs are replayed while scoring a two-armed dataset: the prior
// belief and the number of leading trials per game that are forced choices
// (fed through the belief update but excluded from the likelihood).
struct FitContext {
    KalmanBelief prior;
    int skip_trials = 0;

    static FitContext gaussian2();
    static FitContext horizon();
};

struct ProbitFit {
    ChoiceModel model;
    std::array<double, 3> w = {0.0, 0.0, 0.0};
    double loglik = 0.0;
    int n_params = 0;
    double bic = 0.0;
    double aic = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Probit log-likelihood of the observed choices under weights w, with
// beliefs recomputed from each game's own history.
double loglik_probit_model(const std::array<double, 3>& w, std::span<const GameView> games,
                           const FitContext& ctx);

// Newton-Raphson maximum likelihood for a special case of the hybrid model
// (analytic gradient/Hessian, step halving on non-improving steps, damped
// fallback if the Hessian is singular).  Thompson has no free parameters and
// is evaluated directly.
ProbitFit fit_probit_newton(std::span<const GameView> games, ChoiceModel model,
                            const FitContext& ctx);

// ---- RR-RL^2 likelihood -------------------------------------------------

// Per-game, per-scored-trial policy probability of the observed action,
// averaged over S Monte-Carlo weight samples.  Shared by the direct
// likelihood and the grid search so the two agree exactly.
std::vector<std::vector<double>> rr_rl2_mean_policy(const Checkpoint& ckpt,
                                                    std::span<const GameView> games, int s_samples,
                                                    const Stream& rng);

// Monte-Carlo likelihood with the epsilon-greedy error model applied after
// the S-sample averaging.
double loglik_rr_rl2(const Checkpoint& ckpt, double eps, std::span<const GameView> games,
                     int s_samples, const Stream& rng);

struct Rl2Fit {
    int checkpoint_index = 0;
    double eps = 0.0;
    double loglik = 0.0;
    int n_params = 0;  // 2 for a C ladder (eps and C), 1 for a single model
    double bic = 0.0;
    double aic = 0.0;
};

// Exhaustive grid search over the epsilon grid {0.01, ..., 1.00} and the
// trained checkpoint ladder.
Rl2Fit grid_search_rr_rl2(std::span<const Checkpoint> ladder, std::span<const GameView> games,
                          int s_samples, const Stream& rng);

// ---- Model comparison ----------------------------------------------------

double bic(double loglik, int n_params, int n_games, int n_trials);
double bic_total(double loglik, int n_params, std::size_t total_trials);
double aic(double loglik, int n_params);

// Per-subject posterior over models from log evidences (uniform prior),
// computed stably via max subtraction.
std::vector<double> model_posteriors(std::span<const double> log_evidences);

inline constexpr int kEpsGridSize = 100;
inline double eps_grid_value(int i) { return 0.01 * (i + 1); }

}  // namespace rrl
