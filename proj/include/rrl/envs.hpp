#pragma once

#include <string>
#include <vector>

#include "rrl/rng.hpp"

namespace rrl {

enum class TaskKind { Gaussian2, IgtTrain, IgtCanonical, Horizon };

const char* task_kind_name(TaskKind k);
TaskKind task_kind_from_name(const std::string& name);

// Environment constants.
inline constexpr double kGaussPriorSd = 10.0;   // arm-mean prior, two-armed task
inline constexpr double kGaussRewardSd = 1.0;   // observation noise, two-armed task
inline constexpr double kHorizonRewardSd = 8.0; // observation noise, horizon task
inline constexpr double kIgtLossNoiseSd = 10.0; // noise on the IGT loss component
inline constexpr int kHorizonForcedTrials = 4;

// One sampled bandit problem: latent arm parameters, episode schedule and
// reward-generation rule.
struct TaskInstance {
    TaskKind kind = TaskKind::Gaussian2;
    int k = 2;        // arms
    int horizon = 1;  // free-choice trials

    // Gaussian2 / Horizon: latent arm means.
    std::vector<double> arm_mean;

    // IGT training distribution: per-arm positive component, across-trial
    // mean of the negative component, and its occurrence probability.
    std::vector<double> igt_positive;
    std::vector<double> igt_negative_mean;
    std::vector<double> igt_occurrence;

    // IGT canonical task: per-arm scheduled loss for every trial.
    std::vector<std::vector<double>> igt_loss_schedule;

    std::vector<int> forced;  // forced actions (horizon task), else empty
    bool horizon_cue = false;
    double discount = 1.0;

    int forced_trials() const { return static_cast<int>(forced.size()); }
    int total_trials() const { return forced_trials() + horizon; }

    // Expected single-step reward of an arm under the latent parameters.
    double expected_reward(int arm) const;
    double best_expected_reward() const;

    void validate() const;  // throws std::invalid_argument on violation
};

// Task distributions.
TaskInstance sample_gaussian_task(Stream& rng);
TaskInstance sample_igt_training_task(Stream& rng);
TaskInstance igt_canonical_task(Stream& rng);
TaskInstance sample_horizon_task(Stream& rng);

TaskInstance sample_task(TaskKind kind, Stream& rng);

// Draws one reward for `action` at `trial_index` (0-based over the whole
// episode, forced trials included).  Throws on an invalid action or an
// out-of-schedule trial.
double step(const TaskInstance& task, int action, Stream& rng, int trial_index);

}  // namespace rrl
