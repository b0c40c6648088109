#include "rrl/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rrl/mathx.hpp"

namespace rrl {

double epsilon_greedy_mix(double p, double eps) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("epsilon_greedy_mix: p out of [0,1]");
    if (eps < 0.0 || eps > 1.0)
        throw std::invalid_argument("epsilon_greedy_mix: eps out of [0,1]");
    return (1.0 - eps) * p + 0.5 * eps;
}

FitContext FitContext::gaussian2() { return {gaussian2_prior_belief(), 0}; }
FitContext FitContext::horizon() { return {horizon_prior_belief(), kHorizonForcedTrials}; }

namespace {

struct Trial {
    double x[3];  // V, RU, V/TU
    double y;     // +1 if arm 0 chosen, else -1
};

// Replays each game's beliefs and extracts the probit features of every
// scored trial.
std::vector<Trial> extract_trials(std::span<const GameView> games, const FitContext& ctx) {
    std::vector<Trial> out;
    for (const auto& game : games) {
        KalmanBelief belief = ctx.prior;
        for (std::size_t t = 0; t < game.trials; ++t) {
            const auto& row = game[t];
            if (static_cast<int>(t) >= ctx.skip_trials) {
                const DecisionStats s = decision_stats(belief);
                Trial tr;
                tr.x[0] = s.v;
                tr.x[1] = s.ru;
                tr.x[2] = s.v / s.tu;
                tr.y = (row.action == 0) ? 1.0 : -1.0;
                out.push_back(tr);
            }
            belief = kalman_update(belief, row.action, row.reward);
        }
    }
    return out;
}

double masked_loglik(const WeightMask& mask, const double* free_w,
                     std::span<const Trial> trials) {
    const std::array<double, 3> w = mask.expand(free_w);
    double ll = 0.0;
    for (const auto& t : trials) {
        const double z = w[0] * t.x[0] + w[1] * t.x[1] + w[2] * t.x[2];
        ll += norm_logcdf(t.y * z);
    }
    return ll;
}

}  // namespace

double loglik_probit_model(const std::array<double, 3>& w, std::span<const GameView> games,
                           const FitContext& ctx) {
    const auto trials = extract_trials(games, ctx);
    double ll = 0.0;
    for (const auto& t : trials) {
        const double z = w[0] * t.x[0] + w[1] * t.x[1] + w[2] * t.x[2];
        ll += norm_logcdf(t.y * z);
    }
    return ll;
}

ProbitFit fit_probit_newton(std::span<const GameView> games, ChoiceModel model,
                            const FitContext& ctx) {
    const WeightMask mask = special_case(model);
    const int d = mask.n_free();
    const auto trials = extract_trials(games, ctx);

    ProbitFit fit;
    fit.model = model;
    fit.n_params = d;

    std::vector<double> w(static_cast<std::size_t>(d), 0.0);
    double ll = masked_loglik(mask, w.data(), trials);

    if (d == 0) {
        fit.w = mask.fixed;
        fit.loglik = ll;
        fit.bic = bic_total(ll, 0, trials.size());
        fit.aic = aic(ll, 0);
        fit.converged = true;
        return fit;
    }

    // Reduced features: free coordinates plus the fixed-offset contribution.
    std::vector<std::array<double, 3>> xf(trials.size());
    std::vector<double> offset(trials.size(), 0.0);
    for (std::size_t t = 0; t < trials.size(); ++t) {
        int j = 0;
        for (int i = 0; i < 3; ++i) {
            if (mask.free[static_cast<std::size_t>(i)])
                xf[t][static_cast<std::size_t>(j++)] = trials[t].x[i];
            else
                offset[t] += mask.fixed[static_cast<std::size_t>(i)] * trials[t].x[i];
        }
    }

    constexpr int kMaxIter = 100;
    constexpr double kGradTol = 1e-8;
    int iter = 0;
    for (; iter < kMaxIter; ++iter) {
        std::vector<double> grad(static_cast<std::size_t>(d), 0.0);
        std::vector<double> hess(static_cast<std::size_t>(d * d), 0.0);
        for (std::size_t t = 0; t < trials.size(); ++t) {
            double z = offset[t];
            for (int i = 0; i < d; ++i)
                z += w[static_cast<std::size_t>(i)] * xf[t][static_cast<std::size_t>(i)];
            const double u = trials[t].y * z;
            // lambda = phi(u)/Phi(u), computed in log space for stability.
            const double lam = std::exp(-0.5 * u * u - 0.91893853320467274178 -
                                        norm_logcdf(u));
            const double curv = -lam * (lam + u);  // d^2 logPhi / dz^2 (<= 0)
            for (int i = 0; i < d; ++i) {
                grad[static_cast<std::size_t>(i)] +=
                    trials[t].y * lam * xf[t][static_cast<std::size_t>(i)];
                for (int j = 0; j < d; ++j)
                    hess[static_cast<std::size_t>(i * d + j)] +=
                        curv * xf[t][static_cast<std::size_t>(i)] *
                        xf[t][static_cast<std::size_t>(j)];
            }
        }

        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::fabs(g));
        if (gmax < kGradTol) {
            fit.converged = true;
            break;
        }

        std::vector<double> dir;
        bool have_newton = true;
        try {
            std::vector<double> neg_h(hess.size());
            for (std::size_t i = 0; i < hess.size(); ++i) neg_h[i] = -hess[i];
            dir = solve_dense(std::move(neg_h), grad, d);
        } catch (const std::runtime_error&) {
            have_newton = false;
        }
        if (!have_newton) {
            // Damped gradient ascent fallback.
            dir.assign(grad.begin(), grad.end());
            const double norm = std::max(gmax, 1.0);
            for (double& v : dir) v /= norm;
        }

        // Step halving until the likelihood does not decrease.
        double scale = 1.0;
        bool improved = false;
        std::vector<double> w_try(static_cast<std::size_t>(d));
        for (int h = 0; h < 30; ++h) {
            for (int i = 0; i < d; ++i)
                w_try[static_cast<std::size_t>(i)] =
                    w[static_cast<std::size_t>(i)] + scale * dir[static_cast<std::size_t>(i)];
            const double ll_try = masked_loglik(mask, w_try.data(), trials);
            if (std::isfinite(ll_try) && ll_try >= ll) {
                w = w_try;
                ll = ll_try;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if (!improved) break;  // stationary up to line-search resolution
    }

    fit.iterations = iter;
    fit.w = mask.expand(w.data());
    fit.loglik = ll;
    fit.bic = bic_total(ll, d, trials.size());
    fit.aic = aic(ll, d);
    return fit;
}

std::vector<std::vector<double>> rr_rl2_mean_policy(const Checkpoint& ckpt,
                                                    std::span<const GameView> games,
                                                    int s_samples, const Stream& rng) {
    const NetworkShape& net = ckpt.lambda.net;
    const int skip = (ckpt.task == TaskKind::Horizon) ? kHorizonForcedTrials : 0;
    std::vector<std::vector<double>> out(games.size());
    std::vector<double> policy(static_cast<std::size_t>(net.arms));
    for (std::size_t gi = 0; gi < games.size(); ++gi) {
        const GameView& game = games[gi];
        if (static_cast<int>(game.trials) <= skip)
            throw std::invalid_argument("rr_rl2: game shorter than its forced block");
        const bool cue = net.horizon_cue &&
                         (static_cast<int>(game.trials) - skip) > 1;
        auto& acc = out[gi];
        acc.assign(game.trials - static_cast<std::size_t>(skip), 0.0);
        Stream game_rng = rng.fork({static_cast<std::uint64_t>(gi)});
        for (int s = 0; s < s_samples; ++s) {
            Stream w_rng = game_rng.fork({static_cast<std::uint64_t>(s)});
            const SampledWeights w = sample_weights(ckpt.lambda, w_rng);
            auto hidden = init_hidden(net);
            int prev_action = -1;
            double prev_reward_scaled = 0.0;
            for (std::size_t t = 0; t < game.trials; ++t) {
                const auto input = make_input(net, prev_action, prev_reward_scaled, cue);
                forward_step(net, ckpt.lambda, w, input, hidden, policy);
                const auto& row = game[t];
                if (static_cast<int>(t) >= skip)
                    acc[t - static_cast<std::size_t>(skip)] +=
                        policy[static_cast<std::size_t>(row.action)];
                prev_action = row.action;
                prev_reward_scaled = scale_reward(ckpt.reward_scale, row.reward);
            }
        }
        for (double& p : acc) p /= s_samples;
    }
    return out;
}

double loglik_rr_rl2(const Checkpoint& ckpt, double eps, std::span<const GameView> games,
                     int s_samples, const Stream& rng) {
    const auto pibar = rr_rl2_mean_policy(ckpt, games, s_samples, rng);
    double ll = 0.0;
    for (const auto& game : pibar)
        for (double p : game) ll += std::log(epsilon_greedy_mix(p, eps));
    return ll;
}

Rl2Fit grid_search_rr_rl2(std::span<const Checkpoint> ladder, std::span<const GameView> games,
                          int s_samples, const Stream& rng) {
    if (ladder.empty()) throw std::invalid_argument("grid_search_rr_rl2: empty ladder");
    Rl2Fit best;
    best.loglik = -std::numeric_limits<double>::infinity();
    std::size_t total_trials = 0;
    for (std::size_t c = 0; c < ladder.size(); ++c) {
        const Stream ckpt_rng = rng.fork({static_cast<std::uint64_t>(c)});
        const auto pibar = rr_rl2_mean_policy(ladder[c], games, s_samples, ckpt_rng);
        if (c == 0)
            for (const auto& g : pibar) total_trials += g.size();
        for (int ei = 0; ei < kEpsGridSize; ++ei) {
            const double eps = eps_grid_value(ei);
            double ll = 0.0;
            for (const auto& game : pibar)
                for (double p : game) ll += std::log(epsilon_greedy_mix(p, eps));
            if (ll > best.loglik) {
                best.loglik = ll;
                best.eps = eps;
                best.checkpoint_index = static_cast<int>(c);
            }
        }
    }
    best.n_params = (ladder.size() > 1) ? 2 : 1;
    best.bic = bic_total(best.loglik, best.n_params, total_trials);
    best.aic = aic(best.loglik, best.n_params);
    return best;
}

double bic(double loglik, int n_params, int n_games, int n_trials) {
    if (n_games * n_trials <= 0) throw std::invalid_argument("bic: N*H must be > 0");
    return bic_total(loglik, n_params, static_cast<std::size_t>(n_games) *
                                           static_cast<std::size_t>(n_trials));
}

double bic_total(double loglik, int n_params, std::size_t total_trials) {
    return n_params * std::log(static_cast<double>(total_trials)) - 2.0 * loglik;
}

double aic(double loglik, int n_params) { return 2.0 * n_params - 2.0 * loglik; }

std::vector<double> model_posteriors(std::span<const double> log_evidences) {
    if (log_evidences.size() < 2)
        throw std::invalid_argument("model_posteriors: need >= 2 models");
    const double mx = *std::max_element(log_evidences.begin(), log_evidences.end());
    std::vector<double> post(log_evidences.size());
    double z = 0.0;
    for (std::size_t i = 0; i < post.size(); ++i) {
        post[i] = std::exp(log_evidences[i] - mx);
        z += post[i];
    }
    for (double& p : post) p /= z;
    return post;
}

}  // namespace rrl
