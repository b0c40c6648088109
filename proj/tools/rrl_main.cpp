#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rrl/config.hpp"
#include "rrl/errors.hpp"
#include "rrl/runner.hpp"

namespace {

struct CliArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string output;
    std::vector<std::string> checkpoints;
    std::string dataset;
    int threads = 0;
};

void add_common_flags(CLI::App* cmd, CliArgs& args) {
    cmd->add_option("--config", args.config_path, "Run configuration file (JSON)");
    cmd->add_option("--seed", args.seed, "Seed override")->each([&args](const std::string&) {
        args.seed_set = true;
    });
    cmd->add_option("--output", args.output, "Output directory override");
    cmd->add_option("--checkpoint", args.checkpoints, "Checkpoint path (repeatable)");
    cmd->add_option("--dataset", args.dataset, "Choice dataset CSV");
    cmd->add_option("--threads", args.threads, "Worker threads (0 = all cores)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Meta-learned resource-rational bandit agents: train, simulate, fit, compare"};
    app.require_subcommand(1);

    CliArgs args;
    static const char* kCommands[] = {"train",       "simulate",        "fit",         "compare",
                                      "analyze-igt", "analyze-horizon", "export-plots"};
    static const char* kDescriptions[] = {
        "Train a description-length ladder of agents",
        "Simulate choice datasets from checkpoints",
        "Fit choice models to a dataset",
        "Full Bayesian model comparison incl. PXP",
        "Low-/high-risk choice proportions on the canonical IGT",
        "Exploration classification and regression on the horizon task",
        "Figure-ready coefficient trajectories and embedding vectors",
    };
    for (std::size_t i = 0; i < std::size(kCommands); ++i)
        add_common_flags(app.add_subcommand(kCommands[i], kDescriptions[i]), args);

    CLI11_PARSE(app, argc, argv);

    rrl::RunConfig cfg;
    try {
        if (!args.config_path.empty()) cfg = rrl::load_config(args.config_path);
    } catch (const rrl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    if (args.seed_set) cfg.seed = args.seed;
    if (!args.output.empty()) cfg.io.output_dir = args.output;
    if (!args.checkpoints.empty()) cfg.io.checkpoints = args.checkpoints;
    if (!args.dataset.empty()) cfg.io.dataset = args.dataset;
    if (args.threads > 0) cfg.threads = args.threads;

    const std::string command = app.get_subcommands().front()->get_name();
    return rrl::run_command(command, cfg);
}
