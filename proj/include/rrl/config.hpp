#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rrl/envs.hpp"

namespace rrl {

// Run configuration, loaded from a versioned JSON file.  Command-line flags
// (--seed, --output, --checkpoint, --dataset, --threads) override the
// corresponding fields.
struct RunConfig {
    int version = 1;
    std::uint64_t seed = 1;
    int threads = 0;

    struct Task {
        TaskKind kind = TaskKind::Gaussian2;
    } task;

    struct Train {
        std::vector<double> c_ladder = {4.0, 64.0, 1024.0};
        double learning_rate = 3e-4;
        double dual_gain = 0.03;
        long n_batches = 50000;
        int batch_size = 32;
        int hidden_dim = 128;
        int stats_every = 250;
        int eval_episodes = 1000;
    } train;

    struct Fit {
        std::vector<std::string> models = {"hybrid", "boltzmann", "ucb", "thompson",
                                           "rl2", "rr-rl2"};
        int mc_samples = 10;
        bool thompson_free_w3 = false;
    } fit;

    struct Analysis {
        int n_subjects = 10;
        int n_games = 20;
        int igt_episodes = 500;
        int poly_degree = 2;
    } analysis;

    struct Io {
        std::string output_dir = "out";
        std::vector<std::string> checkpoints;
        std::string dataset;
        std::string rl2_checkpoint;
    } io;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

// Existence of referenced paths, positivity of ladder values, known model
// names.  Throws ConfigError.
void validate_config(const RunConfig& cfg);

// Stamp embedded in every artifact: FNV-1a of the canonical serialization.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace rrl
