#include "rrl/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rrl {

const char* task_kind_name(TaskKind k) {
    switch (k) {
        case TaskKind::Gaussian2: return "gaussian2";
        case TaskKind::IgtTrain: return "igt_train";
        case TaskKind::IgtCanonical: return "igt_canonical";
        case TaskKind::Horizon: return "horizon";
    }
    return "?";
}

TaskKind task_kind_from_name(const std::string& name) {
    if (name == "gaussian2") return TaskKind::Gaussian2;
    if (name == "igt_train") return TaskKind::IgtTrain;
    if (name == "igt_canonical") return TaskKind::IgtCanonical;
    if (name == "horizon") return TaskKind::Horizon;
    throw std::invalid_argument("unknown task kind: " + name);
}

double TaskInstance::expected_reward(int arm) const {
    switch (kind) {
        case TaskKind::Gaussian2:
        case TaskKind::Horizon:
            return arm_mean[static_cast<std::size_t>(arm)];
        case TaskKind::IgtTrain:
            return igt_positive[static_cast<std::size_t>(arm)] -
                   igt_negative_mean[static_cast<std::size_t>(arm)];
        case TaskKind::IgtCanonical: {
            const auto& sched = igt_loss_schedule[static_cast<std::size_t>(arm)];
            const double total =
                std::accumulate(sched.begin(), sched.end(), 0.0);
            return igt_positive[static_cast<std::size_t>(arm)] +
                   total / static_cast<double>(sched.size());
        }
    }
    return 0.0;
}

double TaskInstance::best_expected_reward() const {
    double best = expected_reward(0);
    for (int a = 1; a < k; ++a) best = std::max(best, expected_reward(a));
    return best;
}

void TaskInstance::validate() const {
    if (k < 2) throw std::invalid_argument("task: k must be >= 2");
    if (horizon < 1) throw std::invalid_argument("task: horizon must be >= 1");
    if (discount <= 0.0 || discount > 1.0)
        throw std::invalid_argument("task: discount must be in (0,1]");
    for (int a : forced)
        if (a < 0 || a >= k) throw std::invalid_argument("task: forced action out of range");
    for (double p : igt_occurrence)
        if (p < 0.05 || p > 0.95)
            throw std::invalid_argument("task: igt occurrence probability out of [0.05,0.95]");
    switch (kind) {
        case TaskKind::Gaussian2:
        case TaskKind::Horizon:
            if (static_cast<int>(arm_mean.size()) != k)
                throw std::invalid_argument("task: arm_mean size mismatch");
            break;
        case TaskKind::IgtTrain:
            if (static_cast<int>(igt_positive.size()) != k ||
                static_cast<int>(igt_negative_mean.size()) != k ||
                static_cast<int>(igt_occurrence.size()) != k)
                throw std::invalid_argument("task: igt parameter size mismatch");
            break;
        case TaskKind::IgtCanonical:
            if (static_cast<int>(igt_loss_schedule.size()) != k)
                throw std::invalid_argument("task: igt schedule size mismatch");
            for (const auto& sched : igt_loss_schedule)
                if (static_cast<int>(sched.size()) != horizon)
                    throw std::invalid_argument("task: igt schedule length mismatch");
            break;
    }
}

TaskInstance sample_gaussian_task(Stream& rng) {
    TaskInstance t;
    t.kind = TaskKind::Gaussian2;
    t.k = 2;
    t.horizon = 10;
    t.discount = 1.0;
    t.arm_mean = {rng.normal(0.0, kGaussPriorSd), rng.normal(0.0, kGaussPriorSd)};
    return t;
}

TaskInstance sample_igt_training_task(Stream& rng) {
    TaskInstance t;
    t.kind = TaskKind::IgtTrain;
    t.k = 4;
    t.horizon = 100;
    t.discount = 0.9;
    for (int a = 0; a < 4; ++a) {
        t.igt_positive.push_back(rng.uniform(0.0, 150.0));
        t.igt_negative_mean.push_back(rng.uniform(0.0, 150.0));
        t.igt_occurrence.push_back(rng.uniform(0.05, 0.95));
    }
    return t;
}

TaskInstance igt_canonical_task(Stream& rng) {
    // Block templates: per-arm loss multiset over ten trials.
    static const std::vector<std::vector<double>> kBlock = {
        {-150.0, -300.0, -200.0, -250.0, -350.0, 0.0, 0.0, 0.0, 0.0, 0.0},
        {-1250.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
        {-50.0, -50.0, -50.0, -50.0, -50.0, 0.0, 0.0, 0.0, 0.0, 0.0},
        {-250.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    };
    TaskInstance t;
    t.kind = TaskKind::IgtCanonical;
    t.k = 4;
    t.horizon = 100;
    t.discount = 0.9;
    t.igt_positive = {100.0, 100.0, 50.0, 50.0};
    t.igt_loss_schedule.assign(4, {});
    for (int arm = 0; arm < 4; ++arm) {
        auto& sched = t.igt_loss_schedule[static_cast<std::size_t>(arm)];
        sched.reserve(100);
        for (int block = 0; block < 10; ++block) {
            auto losses = kBlock[static_cast<std::size_t>(arm)];
            rng.shuffle(losses.begin(), losses.end());
            sched.insert(sched.end(), losses.begin(), losses.end());
        }
    }
    return t;
}

TaskInstance sample_horizon_task(Stream& rng) {
    static const double kGaps[] = {4.0, 8.0, 12.0, 20.0, 30.0};
    TaskInstance t;
    t.kind = TaskKind::Horizon;
    t.k = 2;
    t.discount = 1.0;
    const double base = (rng.uniform01() < 0.5) ? 40.0 : 60.0;
    const double gap = kGaps[rng.uniform_int(5)];
    const double sign = (rng.uniform01() < 0.5) ? 1.0 : -1.0;
    t.arm_mean = {base, base + sign * gap};
    t.horizon = (rng.uniform01() < 0.5) ? 1 : 6;
    t.horizon_cue = (t.horizon == 6);
    // Information patterns: equal [2,2] with probability 1/2, unequal [1,3]
    // and [3,1] with probability 1/4 each, order shuffled.
    const double u = rng.uniform01();
    int n0 = 2;
    if (u < 0.25) n0 = 1;
    else if (u < 0.5) n0 = 3;
    t.forced.assign(static_cast<std::size_t>(kHorizonForcedTrials), 1);
    for (int i = 0; i < n0; ++i) t.forced[static_cast<std::size_t>(i)] = 0;
    rng.shuffle(t.forced.begin(), t.forced.end());
    return t;
}

TaskInstance sample_task(TaskKind kind, Stream& rng) {
    switch (kind) {
        case TaskKind::Gaussian2: return sample_gaussian_task(rng);
        case TaskKind::IgtTrain: return sample_igt_training_task(rng);
        case TaskKind::IgtCanonical: return igt_canonical_task(rng);
        case TaskKind::Horizon: return sample_horizon_task(rng);
    }
    throw std::invalid_argument("sample_task: bad kind");
}

double step(const TaskInstance& task, int action, Stream& rng, int trial_index) {
    if (action < 0 || action >= task.k)
        throw std::invalid_argument("step: action " + std::to_string(action) +
                                    " out of range for k=" + std::to_string(task.k));
    if (trial_index < 0 || trial_index >= task.total_trials())
        throw std::invalid_argument("step: trial " + std::to_string(trial_index) +
                                    " outside the episode schedule");
    const auto arm = static_cast<std::size_t>(action);
    switch (task.kind) {
        case TaskKind::Gaussian2:
            return rng.normal(task.arm_mean[arm], kGaussRewardSd);
        case TaskKind::Horizon:
            return rng.normal(task.arm_mean[arm], kHorizonRewardSd);
        case TaskKind::IgtTrain: {
            // Net reward: constant positive component minus the sporadic
            // loss.  The per-occurrence loss is mean/probability plus noise,
            // so losses average to the drawn mean across all trials.
            double r = task.igt_positive[arm];
            if (rng.uniform01() < task.igt_occurrence[arm]) {
                const double loss = task.igt_negative_mean[arm] / task.igt_occurrence[arm] +
                                    rng.normal(0.0, kIgtLossNoiseSd);
                r -= loss;
            }
            return r;
        }
        case TaskKind::IgtCanonical:
            return task.igt_positive[arm] +
                   task.igt_loss_schedule[arm][static_cast<std::size_t>(trial_index)];
    }
    throw std::invalid_argument("step: bad task kind");
}

}  // namespace rrl
