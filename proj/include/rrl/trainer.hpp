#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rrl/agent.hpp"
#include "rrl/envs.hpp"
#include "rrl/rng.hpp"

namespace rrl {

// Affine reward scaling fed to the network: (r - offset) / divisor.
struct RewardScale {
    double offset = 0.0;
    double divisor = 1.0;
};

RewardScale default_reward_scale(TaskKind kind);
double scale_reward(TaskKind kind, double r);
double scale_reward(const RewardScale& s, double r);

double default_discount(TaskKind kind);

// One-step advantage r + gamma * V_next - V_t, with V_next = 0 at the last
// trial of an episode.
double advantage(double r_scaled, double v_t, double v_next, double gamma);

// Episode losses per the meta-learning procedure: L_critic = sum of squared
// advantages, L_actor = -sum of advantage * log pi(a_t), both divided by the
// number of free-choice trials.  `values` has one trailing entry for the
// terminal state (0 by convention).
struct EpisodeLosses {
    double critic;
    double actor;
};
EpisodeLosses episode_losses(std::span<const double> rewards_scaled,
                             std::span<const double> values,
                             std::span<const double> log_pi_chosen, double gamma);

// Dual variable of the description-length constraint, kept positive through
// its log.
struct DualState {
    double log_beta = 0.0;
    double beta() const;
};

// Moves log_beta along the relative constraint violation
// (kl - c) / max(kl, c), scaled by `gain` and clamped to +-20: beta rises
// iff kl > c, falls otherwise, and stays positive by construction.  The
// relative form keeps the controller responsive in both directions even
// though the violation is hugely asymmetric (kl starts ~1e5 above targets as
// small as a few nats).
DualState dual_update(DualState d, double achieved_kl, double c, double gain);

struct TrainConfig {
    TaskKind task = TaskKind::Gaussian2;
    double c_nats = 1024.0;             // description-length target
    double learning_rate = 3e-4;
    double dual_gain = 0.03;
    long n_batches = 50000;             // desk scale; the full-scale run is 1e6
    int batch_size = 32;
    int hidden_dim = 128;
    double discount = -1.0;             // <0: per-task default
    RewardScale reward_scale{0.0, -1.0};  // divisor<0: per-task default
    std::uint64_t seed = 0;
    int stats_every = 250;
    int eval_episodes = 1000;
    int threads = 0;  // 0: hardware concurrency

    void resolve_defaults();
    void validate() const;
};

struct TrainStatsRow {
    long batch;
    double regret;
    double kl_nats;
    double beta;
};

struct TrainResult {
    ParameterEncoding lambda;
    DualState dual;
    std::vector<TrainStatsRow> stats;
    double achieved_kl = 0.0;
    double final_regret = 0.0;      // mean over eval episodes, trained encoding
    double untrained_regret = 0.0;  // same episodes, initial encoding
};

// Runs the meta-learning procedure: per batch, sample (task, weights) pairs,
// roll out episodes, take one Adam step on the mean of
// H^-1 (L_critic + L_actor) + beta * KL, then update the dual variable.
// Throws NumericError on a non-finite loss after invoking `on_diagnostic`
// (if set) with the current encoding.
TrainResult train(const TrainConfig& cfg,
                  const std::function<void(const ParameterEncoding&)>& on_diagnostic = {});

// Mean per-episode regret (best expected arm reward minus mean obtained
// reward over free-choice trials) of an encoding over n fresh episodes.
double evaluate_regret(const ParameterEncoding& enc, TaskKind task, const RewardScale& scale,
                       int n_episodes, Stream root);

}  // namespace rrl
