#pragma once

#include <array>
#include <string>
#include <vector>

namespace rrl {

// Conjugate-Gaussian posterior over arm means: each arm carries an
// independent normal belief updated by Kalman filtering against a fixed
// observation-noise variance.
struct KalmanBelief {
    std::vector<double> mu;
    std::vector<double> var;
    double noise_var = 1.0;
    double prior_mean = 0.0;
    double prior_var = 100.0;

    static KalmanBelief make(int arms, double prior_mean, double prior_var, double noise_var);
    int arms() const { return static_cast<int>(mu.size()); }
};

// Belief parameters observed in the two-armed analysis task (prior N(0, sd
// 10), reward noise sd 1, read as standard deviations).
KalmanBelief gaussian2_prior_belief();
// Horizon-task analysis prior: mean 50 and, by default, the variance of a
// random arm's mean under the generative design (base in {40,60} gives 100,
// the offset arm adds mean squared gap 304.8; averaged over arms: 252.4).
KalmanBelief horizon_prior_belief(double prior_var = 252.4);

// Posterior update for the observed arm only; other arms are untouched.
KalmanBelief kalman_update(const KalmanBelief& belief, int arm, double reward);

// Decision statistics of a two-armed belief: V = mu0 - mu1,
// RU = sd0 - sd1, TU = sqrt(sd0^2 + sd1^2).
struct DecisionStats {
    double v;
    double ru;
    double tu;
};
DecisionStats decision_stats(const KalmanBelief& belief);

// Hybrid probit choice probability of arm 0:
// Phi(w1*V + w2*RU + w3*V/TU).
double hybrid_choice_prob(const std::array<double, 3>& w, const KalmanBelief& belief);

// Special cases of the hybrid model.
enum class ChoiceModel { Boltzmann, Ucb, Thompson, Hybrid, ThompsonFreeW3 };

const char* choice_model_name(ChoiceModel m);
ChoiceModel choice_model_from_name(const std::string& name);

// Which of (w1, w2, w3) are fitted, and the fixed values of the rest.
// Thompson pins w = [0, 0, 1] (no free parameters); ThompsonFreeW3 is the
// variant with w3 fitted.
struct WeightMask {
    std::array<bool, 3> free;
    std::array<double, 3> fixed;
    int n_free() const { return (free[0] ? 1 : 0) + (free[1] ? 1 : 0) + (free[2] ? 1 : 0); }
    std::array<double, 3> expand(const double* free_values) const;
};
WeightMask special_case(ChoiceModel m);

}  // namespace rrl
