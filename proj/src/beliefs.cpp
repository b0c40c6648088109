#include "rrl/beliefs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rrl/envs.hpp"
#include "rrl/mathx.hpp"

namespace rrl {

KalmanBelief KalmanBelief::make(int arms, double prior_mean, double prior_var,
                                double noise_var) {
    if (arms < 1) throw std::invalid_argument("belief: arms must be >= 1");
    if (prior_var <= 0.0 || noise_var <= 0.0)
        throw std::invalid_argument("belief: variances must be > 0");
    KalmanBelief b;
    b.mu.assign(static_cast<std::size_t>(arms), prior_mean);
    b.var.assign(static_cast<std::size_t>(arms), prior_var);
    b.noise_var = noise_var;
    b.prior_mean = prior_mean;
    b.prior_var = prior_var;
    return b;
}

KalmanBelief gaussian2_prior_belief() {
    return KalmanBelief::make(2, 0.0, kGaussPriorSd * kGaussPriorSd,
                              kGaussRewardSd * kGaussRewardSd);
}

KalmanBelief horizon_prior_belief(double prior_var) {
    return KalmanBelief::make(2, 50.0, prior_var, kHorizonRewardSd * kHorizonRewardSd);
}

KalmanBelief kalman_update(const KalmanBelief& belief, int arm, double reward) {
    if (arm < 0 || arm >= belief.arms())
        throw std::invalid_argument("kalman_update: arm out of range");
    KalmanBelief b = belief;
    const auto a = static_cast<std::size_t>(arm);
    const double gain = b.var[a] / (b.var[a] + b.noise_var);
    b.mu[a] += gain * (reward - b.mu[a]);
    b.var[a] *= (1.0 - gain);
    return b;
}

DecisionStats decision_stats(const KalmanBelief& belief) {
    if (belief.arms() != 2)
        throw std::invalid_argument("decision_stats: two-armed belief required");
    const double sd0 = std::sqrt(belief.var[0]);
    const double sd1 = std::sqrt(belief.var[1]);
    return {belief.mu[0] - belief.mu[1], sd0 - sd1, std::sqrt(belief.var[0] + belief.var[1])};
}

double hybrid_choice_prob(const std::array<double, 3>& w, const KalmanBelief& belief) {
    const DecisionStats s = decision_stats(belief);
    if (s.tu <= 0.0) throw std::invalid_argument("hybrid_choice_prob: TU must be > 0");
    const double p = norm_cdf(w[0] * s.v + w[1] * s.ru + w[2] * s.v / s.tu);
    // Keep the probability strictly inside (0,1): Phi saturates in double
    // arithmetic around |z| > 8 and downstream likelihoods take logs.
    return std::clamp(p, 1e-300, 1.0 - 1e-16);
}

const char* choice_model_name(ChoiceModel m) {
    switch (m) {
        case ChoiceModel::Boltzmann: return "boltzmann";
        case ChoiceModel::Ucb: return "ucb";
        case ChoiceModel::Thompson: return "thompson";
        case ChoiceModel::Hybrid: return "hybrid";
        case ChoiceModel::ThompsonFreeW3: return "thompson_free_w3";
    }
    return "?";
}

ChoiceModel choice_model_from_name(const std::string& name) {
    if (name == "boltzmann") return ChoiceModel::Boltzmann;
    if (name == "ucb") return ChoiceModel::Ucb;
    if (name == "thompson") return ChoiceModel::Thompson;
    if (name == "hybrid") return ChoiceModel::Hybrid;
    if (name == "thompson_free_w3") return ChoiceModel::ThompsonFreeW3;
    throw std::invalid_argument("unknown choice model: " + name);
}

std::array<double, 3> WeightMask::expand(const double* free_values) const {
    std::array<double, 3> w = fixed;
    int j = 0;
    for (int i = 0; i < 3; ++i)
        if (free[static_cast<std::size_t>(i)]) w[static_cast<std::size_t>(i)] = free_values[j++];
    return w;
}

WeightMask special_case(ChoiceModel m) {
    switch (m) {
        case ChoiceModel::Boltzmann: return {{true, false, false}, {0.0, 0.0, 0.0}};
        case ChoiceModel::Ucb: return {{true, true, false}, {0.0, 0.0, 0.0}};
        case ChoiceModel::Thompson: return {{false, false, false}, {0.0, 0.0, 1.0}};
        case ChoiceModel::Hybrid: return {{true, true, true}, {0.0, 0.0, 0.0}};
        case ChoiceModel::ThompsonFreeW3: return {{false, false, true}, {0.0, 0.0, 0.0}};
    }
    throw std::invalid_argument("special_case: unknown model");
}

}  // namespace rrl
