#pragma once

#include <cstdint>
#include <string>

#include "rrl/agent.hpp"
#include "rrl/envs.hpp"
#include "rrl/trainer.hpp"

namespace rrl {

// Self-describing persisted model: a JSON header (format version, network
// shape, training configuration, achieved description length, run hash)
// followed by the raw little-endian float64 mu and log_var arrays, so the
// encoding round-trips bit-exactly.
struct Checkpoint {
    int format_version = 1;
    TaskKind task = TaskKind::Gaussian2;
    ParameterEncoding lambda;
    double c_nats = 0.0;
    double learning_rate = 3e-4;
    double dual_gain = 0.03;
    long n_batches = 0;
    int batch_size = 32;
    std::uint64_t seed = 0;
    RewardScale reward_scale;
    double discount = 1.0;
    double achieved_nats = 0.0;
    double final_regret = 0.0;
    double untrained_regret = 0.0;
    std::uint64_t run_hash = 0;
};

Checkpoint make_checkpoint(const TrainConfig& cfg, const TrainResult& result,
                           std::uint64_t run_hash);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace rrl
