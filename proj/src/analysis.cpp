#include "rrl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "rrl/errors.hpp"
#include "rrl/mathx.hpp"

namespace rrl {

ChoiceDataset simulate_dataset(const Checkpoint& ckpt, TaskKind task_kind, int n_subjects,
                               int n_games, const Stream& rng) {
    const NetworkShape& net = ckpt.lambda.net;
    std::vector<ChoiceRow> rows;
    std::vector<double> policy(static_cast<std::size_t>(net.arms));
    for (int subject = 0; subject < n_subjects; ++subject) {
        for (int game = 0; game < n_games; ++game) {
            const auto sid = static_cast<std::uint64_t>(subject);
            const auto gid = static_cast<std::uint64_t>(game);
            Stream task_rng = rng.fork({1, sid, gid});
            Stream w_rng = rng.fork({2, sid, gid});
            Stream a_rng = rng.fork({3, sid, gid});
            Stream env_rng = rng.fork({4, sid, gid});
            const TaskInstance task = sample_task(task_kind, task_rng);
            const SampledWeights w = sample_weights(ckpt.lambda, w_rng);
            auto hidden = init_hidden(net);
            int prev_action = -1;
            double prev_reward_scaled = 0.0;
            const std::string condition =
                (task_kind == TaskKind::Horizon)
                    ? (task.horizon == 6 ? std::string("h6") : std::string("h1"))
                    : std::string();
            for (int t = 0; t < task.total_trials(); ++t) {
                const auto input =
                    make_input(net, prev_action, prev_reward_scaled, task.horizon_cue);
                forward_step(net, ckpt.lambda, w, input, hidden, policy);
                int action;
                if (t < task.forced_trials()) {
                    action = task.forced[static_cast<std::size_t>(t)];
                } else {
                    const double u = a_rng.uniform01();
                    double acc = 0.0;
                    action = task.k - 1;
                    for (int a = 0; a < task.k; ++a) {
                        acc += policy[static_cast<std::size_t>(a)];
                        if (u < acc) { action = a; break; }
                    }
                }
                const double reward = step(task, action, env_rng, t);
                ChoiceRow row;
                row.subject = subject;
                row.game = game;
                row.trial = t;
                row.condition = condition;
                row.action = action;
                row.reward = reward;
                if (task.k == 2) {
                    row.arm0_mean = task.expected_reward(0);
                    row.arm1_mean = task.expected_reward(1);
                }
                rows.push_back(std::move(row));
                prev_action = action;
                prev_reward_scaled = scale_reward(ckpt.reward_scale, reward);
            }
        }
    }
    return ChoiceDataset::from_rows(std::move(rows), net.arms);
}

std::vector<TrajectoryRow> coefficient_trajectory(std::span<const Checkpoint> ladder,
                                                  int n_subjects, int n_games,
                                                  const Stream& rng) {
    std::vector<TrajectoryRow> out;
    for (std::size_t c = 0; c < ladder.size(); ++c) {
        const ChoiceDataset ds = simulate_dataset(
            ladder[c], TaskKind::Gaussian2, n_subjects, n_games,
            rng.fork({static_cast<std::uint64_t>(c)}));
        const ProbitFit fit =
            fit_probit_newton(ds.all_games(), ChoiceModel::Hybrid, FitContext::gaussian2());
        out.push_back({ladder[c].c_nats, ladder[c].achieved_nats, fit.w[0], fit.w[1], fit.w[2]});
    }
    return out;
}

IgtProportions igt_proportions(const Checkpoint& ckpt, int n_episodes, const Stream& rng) {
    if (ckpt.lambda.net.arms != 4)
        throw std::invalid_argument("igt_proportions: needs a four-armed checkpoint");
    const ChoiceDataset ds =
        simulate_dataset(ckpt, TaskKind::IgtCanonical, 1, n_episodes, rng);
    std::size_t low = 0, total = 0;
    for (const auto& row : ds.rows()) {
        if (row.action >= 2) ++low;
        ++total;
    }
    const double p_low = static_cast<double>(low) / static_cast<double>(total);
    return {p_low, 1.0 - p_low};
}

ExplorationRecord classify_exploration(const GameView& game) {
    if (game.trials < static_cast<std::size_t>(kHorizonForcedTrials) + 1)
        throw DataError("classify_exploration: game has no free-choice trial");
    int count[2] = {0, 0};
    double sum[2] = {0.0, 0.0};
    for (int t = 0; t < kHorizonForcedTrials; ++t) {
        const auto& row = game[static_cast<std::size_t>(t)];
        if (row.action < 0 || row.action > 1)
            throw DataError("classify_exploration: malformed forced history");
        count[row.action] += 1;
        sum[row.action] += row.reward;
    }
    if (count[0] == 0 || count[1] == 0)
        throw DataError("classify_exploration: an arm was never forced");

    ExplorationRecord rec;
    rec.horizon = static_cast<int>(game.trials) - kHorizonForcedTrials;
    rec.equal_info = (count[0] == count[1]);
    const int choice = game[static_cast<std::size_t>(kHorizonForcedTrials)].action;
    if (rec.equal_info) {
        const double mean0 = sum[0] / count[0];
        const double mean1 = sum[1] / count[1];
        const double chosen = (choice == 0) ? mean0 : mean1;
        const double other = (choice == 0) ? mean1 : mean0;
        rec.random_choice = chosen < other;  // tie -> not random exploration
    } else {
        rec.directed = count[choice] < count[1 - choice];
    }
    return rec;
}

std::vector<RateRow> exploration_rates(std::span<const ExplorationRecord> records) {
    std::map<std::pair<double, int>, std::array<double, 4>> cells;  // dir_n, dir_k, rnd_n, rnd_k
    for (const auto& r : records) {
        auto& cell = cells[{r.covariate, r.horizon}];
        if (r.directed.has_value()) {
            cell[0] += 1.0;
            cell[1] += *r.directed ? 1.0 : 0.0;
        }
        if (r.random_choice.has_value()) {
            cell[2] += 1.0;
            cell[3] += *r.random_choice ? 1.0 : 0.0;
        }
    }
    std::vector<RateRow> rows;
    for (const auto& [key, cell] : cells) {
        RateRow row;
        row.covariate = key.first;
        row.horizon = key.second;
        row.directed_rate = cell[0] > 0.0 ? cell[1] / cell[0] : 0.0;
        row.random_rate = cell[2] > 0.0 ? cell[3] / cell[2] : 0.0;
        rows.push_back(row);
    }
    return rows;
}

namespace {

RegressionSummary ols_f_tests(std::span<const RateRow> rows, bool directed_outcome) {
    const int n = static_cast<int>(rows.size());
    constexpr int kP = 4;  // intercept, covariate, horizon, interaction
    if (n <= kP) throw std::invalid_argument("horizon_regression: too few rows");

    std::vector<double> xtx(kP * kP, 0.0), xty(kP, 0.0);
    double yty = 0.0;
    for (const auto& row : rows) {
        const double h = (row.horizon == 6) ? 1.0 : 0.0;
        const double x[kP] = {1.0, row.covariate, h, row.covariate * h};
        const double y = directed_outcome ? row.directed_rate : row.random_rate;
        for (int i = 0; i < kP; ++i) {
            xty[static_cast<std::size_t>(i)] += x[i] * y;
            for (int j = 0; j < kP; ++j)
                xtx[static_cast<std::size_t>(i * kP + j)] += x[i] * x[j];
        }
        yty += y * y;
    }

    std::vector<double> beta;
    try {
        beta = solve_dense(xtx, xty, kP);
    } catch (const std::runtime_error&) {
        throw std::invalid_argument("horizon_regression: rank-deficient design");
    }

    double rss = yty;
    for (int i = 0; i < kP; ++i) rss -= beta[static_cast<std::size_t>(i)] * xty[static_cast<std::size_t>(i)];
    rss = std::max(rss, 0.0);
    const int df = n - kP;
    const double sigma2 = rss / df;

    // Diagonal of (X^T X)^-1 via unit solves.
    std::array<double, kP> inv_diag{};
    for (int j = 0; j < kP; ++j) {
        std::vector<double> e(kP, 0.0);
        e[static_cast<std::size_t>(j)] = 1.0;
        const auto col = solve_dense(xtx, e, kP);
        inv_diag[static_cast<std::size_t>(j)] = col[static_cast<std::size_t>(j)];
    }

    auto effect = [&](int j) {
        const double se2 = sigma2 * inv_diag[static_cast<std::size_t>(j)];
        const double f = se2 > 0.0
                             ? beta[static_cast<std::size_t>(j)] * beta[static_cast<std::size_t>(j)] / se2
                             : std::numeric_limits<double>::infinity();
        EffectStat s;
        s.f = f;
        s.p = f_sf(f, 1.0, df);
        s.eta_sq = std::isinf(f) ? 1.0 : f / (f + df);
        return s;
    };

    RegressionSummary summary;
    summary.covariate = effect(1);
    summary.horizon = effect(2);
    summary.interaction = effect(3);
    summary.interaction_sign = (beta[3] >= 0.0) ? 1 : -1;
    summary.df_resid = df;
    return summary;
}

}  // namespace

HorizonRegressionResult horizon_regression_rates(std::span<const RateRow> rows) {
    bool h1 = false, h6 = false;
    std::vector<double> cov_levels;
    for (const auto& r : rows) {
        if (r.horizon == 1) h1 = true;
        if (r.horizon == 6) h6 = true;
        if (std::find(cov_levels.begin(), cov_levels.end(), r.covariate) == cov_levels.end())
            cov_levels.push_back(r.covariate);
    }
    if (!h1 || !h6)
        throw std::invalid_argument("horizon_regression: both horizons must be present");
    if (cov_levels.size() < 3)
        throw std::invalid_argument("horizon_regression: need >= 3 covariate levels");
    return {ols_f_tests(rows, true), ols_f_tests(rows, false)};
}

HorizonRegressionResult horizon_regression(std::span<const ExplorationRecord> records) {
    const auto rows = exploration_rates(records);
    return horizon_regression_rates(rows);
}

PolyCurve poly_regression_summary(std::span<const double> xs, std::span<const double> ys,
                                  int degree, std::span<const double> query) {
    const int n = static_cast<int>(xs.size());
    if (degree < 0) throw std::invalid_argument("poly_regression: degree must be >= 0");
    if (n < degree + 2) throw std::invalid_argument("poly_regression: need >= degree+2 points");
    if (ys.size() != xs.size()) throw std::invalid_argument("poly_regression: size mismatch");

    const double mx = mean_of(xs);
    double sx = sample_sd(xs);
    if (!(sx > 0.0)) throw std::invalid_argument("poly_regression: degenerate design");

    const int p = degree + 1;
    auto features = [&](double x, std::vector<double>& row) {
        const double z = (x - mx) / sx;
        double acc = 1.0;
        for (int j = 0; j < p; ++j) {
            row[static_cast<std::size_t>(j)] = acc;
            acc *= z;
        }
    };

    // Normal-inverse-gamma conjugate posterior with prior N(0, sigma^2 *
    // tau^2 I) on standardized features, tau = 10, and IG(1, 1) on the noise.
    constexpr double kTau2 = 100.0;
    constexpr double kA0 = 1.0, kB0 = 1.0;
    std::vector<double> xtx(static_cast<std::size_t>(p * p), 0.0),
        xty(static_cast<std::size_t>(p), 0.0), row(static_cast<std::size_t>(p));
    double yty = 0.0;
    for (int i = 0; i < n; ++i) {
        features(xs[static_cast<std::size_t>(i)], row);
        const double y = ys[static_cast<std::size_t>(i)];
        for (int a = 0; a < p; ++a) {
            xty[static_cast<std::size_t>(a)] += row[static_cast<std::size_t>(a)] * y;
            for (int b = 0; b < p; ++b)
                xtx[static_cast<std::size_t>(a * p + b)] +=
                    row[static_cast<std::size_t>(a)] * row[static_cast<std::size_t>(b)];
        }
        yty += y * y;
    }
    for (int a = 0; a < p; ++a) xtx[static_cast<std::size_t>(a * p + a)] += 1.0 / kTau2;

    const std::vector<double> beta = solve_dense(xtx, xty, p);
    double fit_term = 0.0;
    for (int a = 0; a < p; ++a)
        fit_term += beta[static_cast<std::size_t>(a)] * xty[static_cast<std::size_t>(a)];
    const double a_n = kA0 + 0.5 * n;
    const double b_n = kB0 + 0.5 * std::max(yty - fit_term, 0.0);
    const double sigma2_mean = b_n / (a_n - 1.0);

    PolyCurve curve;
    curve.coefficients = beta;
    curve.mean.resize(query.size());
    curve.sd_of_mean.resize(query.size());
    for (std::size_t q = 0; q < query.size(); ++q) {
        features(query[q], row);
        double m = 0.0;
        for (int a = 0; a < p; ++a)
            m += beta[static_cast<std::size_t>(a)] * row[static_cast<std::size_t>(a)];
        curve.mean[q] = m;
        // Var(mean) = E[sigma^2] * x^T (X^T X + I/tau^2)^{-1} x.
        std::vector<double> sol = solve_dense(xtx, row, p);
        double quad = 0.0;
        for (int a = 0; a < p; ++a)
            quad += row[static_cast<std::size_t>(a)] * sol[static_cast<std::size_t>(a)];
        curve.sd_of_mean[q] = std::sqrt(std::max(sigma2_mean * quad, 0.0));
    }
    return curve;
}

}  // namespace rrl
