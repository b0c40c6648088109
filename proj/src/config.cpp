#include "rrl/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rrl/errors.hpp"

namespace rrl {

namespace {

using nlohmann::json;

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value for '" + std::string(key) + "': " + e.what());
    }
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: parse error: ") + e.what());
    }
    RunConfig cfg;
    read_field(j, "version", cfg.version);
    if (cfg.version != 1)
        throw ConfigError("config: unsupported schema version " + std::to_string(cfg.version));
    read_field(j, "seed", cfg.seed);
    read_field(j, "threads", cfg.threads);
    if (j.contains("task")) {
        std::string kind = task_kind_name(cfg.task.kind);
        read_field(j.at("task"), "kind", kind);
        try {
            cfg.task.kind = task_kind_from_name(kind);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        read_field(t, "c_ladder", cfg.train.c_ladder);
        read_field(t, "learning_rate", cfg.train.learning_rate);
        read_field(t, "dual_gain", cfg.train.dual_gain);
        read_field(t, "n_batches", cfg.train.n_batches);
        read_field(t, "batch_size", cfg.train.batch_size);
        read_field(t, "hidden_dim", cfg.train.hidden_dim);
        read_field(t, "stats_every", cfg.train.stats_every);
        read_field(t, "eval_episodes", cfg.train.eval_episodes);
    }
    if (j.contains("fit")) {
        const auto& f = j.at("fit");
        read_field(f, "models", cfg.fit.models);
        read_field(f, "mc_samples", cfg.fit.mc_samples);
        read_field(f, "thompson_free_w3", cfg.fit.thompson_free_w3);
    }
    if (j.contains("analysis")) {
        const auto& a = j.at("analysis");
        read_field(a, "n_subjects", cfg.analysis.n_subjects);
        read_field(a, "n_games", cfg.analysis.n_games);
        read_field(a, "igt_episodes", cfg.analysis.igt_episodes);
        read_field(a, "poly_degree", cfg.analysis.poly_degree);
    }
    if (j.contains("io")) {
        const auto& io = j.at("io");
        read_field(io, "output_dir", cfg.io.output_dir);
        read_field(io, "checkpoints", cfg.io.checkpoints);
        read_field(io, "dataset", cfg.io.dataset);
        read_field(io, "rl2_checkpoint", cfg.io.rl2_checkpoint);
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
    json j;
    j["version"] = cfg.version;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["task"] = {{"kind", task_kind_name(cfg.task.kind)}};
    j["train"] = {{"c_ladder", cfg.train.c_ladder},
                  {"learning_rate", cfg.train.learning_rate},
                  {"dual_gain", cfg.train.dual_gain},
                  {"n_batches", cfg.train.n_batches},
                  {"batch_size", cfg.train.batch_size},
                  {"hidden_dim", cfg.train.hidden_dim},
                  {"stats_every", cfg.train.stats_every},
                  {"eval_episodes", cfg.train.eval_episodes}};
    j["fit"] = {{"models", cfg.fit.models},
                {"mc_samples", cfg.fit.mc_samples},
                {"thompson_free_w3", cfg.fit.thompson_free_w3}};
    j["analysis"] = {{"n_subjects", cfg.analysis.n_subjects},
                     {"n_games", cfg.analysis.n_games},
                     {"igt_episodes", cfg.analysis.igt_episodes},
                     {"poly_degree", cfg.analysis.poly_degree}};
    j["io"] = {{"output_dir", cfg.io.output_dir},
               {"checkpoints", cfg.io.checkpoints},
               {"dataset", cfg.io.dataset},
               {"rl2_checkpoint", cfg.io.rl2_checkpoint}};
    return j.dump(2);
}

void validate_config(const RunConfig& cfg) {
    if (cfg.train.c_ladder.empty()) throw ConfigError("config: empty C ladder");
    for (double c : cfg.train.c_ladder)
        if (!(c > 0.0)) throw ConfigError("config: ladder values must be positive");
    if (cfg.train.batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
    if (cfg.train.n_batches < 1) throw ConfigError("config: n_batches must be >= 1");
    if (cfg.fit.mc_samples < 1) throw ConfigError("config: mc_samples must be >= 1");
    static const char* kKnown[] = {"hybrid", "boltzmann",        "ucb",   "thompson",
                                   "rl2",    "thompson_free_w3", "rr-rl2"};
    for (const auto& m : cfg.fit.models) {
        bool ok = false;
        for (const char* k : kKnown) ok = ok || (m == k);
        if (!ok) throw ConfigError("config: unknown fit model '" + m + "'");
    }
    for (const auto& p : cfg.io.checkpoints)
        if (!std::filesystem::exists(p))
            throw ConfigError("config: checkpoint path not found: " + p);
    if (!cfg.io.dataset.empty() && !std::filesystem::exists(cfg.io.dataset))
        throw ConfigError("config: dataset path not found: " + cfg.io.dataset);
    if (!cfg.io.rl2_checkpoint.empty() && !std::filesystem::exists(cfg.io.rl2_checkpoint))
        throw ConfigError("config: rl2 checkpoint path not found: " + cfg.io.rl2_checkpoint);
}

std::uint64_t config_hash(const RunConfig& cfg) {
    // Hash the semantic content only: io paths (where artifacts land, which
    // inputs are mounted) must not change the stamp of an otherwise
    // identical run.
    RunConfig semantic = cfg;
    semantic.io = {};
    semantic.threads = 0;
    const std::string s = serialize_config(semantic);
    return fnv1a({reinterpret_cast<const unsigned char*>(s.data()), s.size()});
}

}  // namespace rrl
