#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rrl/checkpoint.hpp"
#include "rrl/dataset.hpp"
#include "rrl/fitting.hpp"

namespace rrl {

// Rolls out episodes with actions sampled from the policy (fresh weights per
// game) and records them in the canonical dataset layout.  Horizon rows
// carry condition "h1"/"h6" and include the four forced trials.
ChoiceDataset simulate_dataset(const Checkpoint& ckpt, TaskKind task, int n_subjects,
                               int n_games, const Stream& rng);

// Hybrid-model coefficients fitted to data simulated from each checkpoint of
// a ladder, against its achieved description length.
struct TrajectoryRow {
    double c_target;
    double nats;
    double w1, w2, w3;
};
std::vector<TrajectoryRow> coefficient_trajectory(std::span<const Checkpoint> ladder,
                                                  int n_subjects, int n_games,
                                                  const Stream& rng);

// Fraction of choices on the low-risk arms (3 and 4, 1-indexed) versus the
// high-risk arms over canonical-IGT episodes.
struct IgtProportions {
    double p_low;
    double p_high;
};
IgtProportions igt_proportions(const Checkpoint& ckpt, int n_episodes, const Stream& rng);

// First-free-choice classification in the horizon task: directed exploration
// (unequal information: the less-observed arm) or random exploration (equal
// information: the arm with the lower forced-trial sample mean; ties are not
// random exploration).
struct ExplorationRecord {
    bool equal_info = false;
    int horizon = 1;
    std::optional<bool> directed;       // unequal condition only
    std::optional<bool> random_choice;  // equal condition only
    double covariate = 0.0;
};
ExplorationRecord classify_exploration(const GameView& game);

struct EffectStat {
    double f;
    double p;
    double eta_sq;  // partial eta squared
};

struct RegressionSummary {
    EffectStat covariate;
    EffectStat horizon;
    EffectStat interaction;
    int interaction_sign = 0;  // sign of the fitted interaction coefficient
    int df_resid = 0;
};

// One aggregated observation: exploration rates of one model at one horizon.
struct RateRow {
    double covariate;
    int horizon;  // 1 or 6
    double directed_rate;
    double random_rate;
};

// Aggregates records into per-(covariate, horizon) rates.
std::vector<RateRow> exploration_rates(std::span<const ExplorationRecord> records);

// Two OLS models (directed and random exploration rates) on covariate,
// horizon (indicator for the long horizon) and their interaction, with
// per-coefficient F statistics, partial eta^2 and F-distribution p-values.
struct HorizonRegressionResult {
    RegressionSummary directed;
    RegressionSummary random;
};
HorizonRegressionResult horizon_regression(std::span<const ExplorationRecord> records);
HorizonRegressionResult horizon_regression_rates(std::span<const RateRow> rows);

// Conjugate Bayesian polynomial regression for figure smoothing: posterior
// predictive mean and the standard deviation of the mean on a query grid.
struct PolyCurve {
    std::vector<double> mean;
    std::vector<double> sd_of_mean;
    std::vector<double> coefficients;  // on standardized features
};
PolyCurve poly_regression_summary(std::span<const double> xs, std::span<const double> ys,
                                  int degree, std::span<const double> query);

}  // namespace rrl
