#include "rrl/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "rrl/errors.hpp"

namespace rrl {

namespace {

constexpr char kMagic[8] = {'R', 'R', 'L', 'C', 'K', 'P', 'T', '1'};

void write_u64(std::ofstream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::ifstream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void write_doubles(std::ofstream& out, const std::vector<double>& xs) {
    for (double x : xs) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, 8);
        write_u64(out, bits);
    }
}

void read_doubles(std::ifstream& in, std::vector<double>& xs) {
    for (double& x : xs) {
        const std::uint64_t bits = read_u64(in);
        std::memcpy(&x, &bits, 8);
    }
}

}  // namespace

Checkpoint make_checkpoint(const TrainConfig& cfg, const TrainResult& result,
                           std::uint64_t run_hash) {
    Checkpoint c;
    c.task = cfg.task;
    c.lambda = result.lambda;
    c.c_nats = cfg.c_nats;
    c.learning_rate = cfg.learning_rate;
    c.dual_gain = cfg.dual_gain;
    c.n_batches = cfg.n_batches;
    c.batch_size = cfg.batch_size;
    c.seed = cfg.seed;
    c.reward_scale = cfg.reward_scale;
    c.discount = cfg.discount;
    c.achieved_nats = result.achieved_kl;
    c.final_regret = result.final_regret;
    c.untrained_regret = result.untrained_regret;
    c.run_hash = run_hash;
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    nlohmann::json header;
    header["format_version"] = ckpt.format_version;
    header["task"] = task_kind_name(ckpt.task);
    header["shape"] = {{"arms", ckpt.lambda.net.arms},
                       {"hidden_dim", ckpt.lambda.net.hidden_dim},
                       {"horizon_cue", ckpt.lambda.net.horizon_cue}};
    header["n_weights"] = ckpt.lambda.n_weights();
    header["train"] = {{"c_nats", ckpt.c_nats},
                       {"learning_rate", ckpt.learning_rate},
                       {"dual_gain", ckpt.dual_gain},
                       {"n_batches", ckpt.n_batches},
                       {"batch_size", ckpt.batch_size},
                       {"seed", ckpt.seed},
                       {"reward_offset", ckpt.reward_scale.offset},
                       {"reward_divisor", ckpt.reward_scale.divisor},
                       {"discount", ckpt.discount}};
    header["achieved_nats"] = ckpt.achieved_nats;
    header["final_regret"] = ckpt.final_regret;
    header["untrained_regret"] = ckpt.untrained_regret;
    header["run_hash"] = ckpt.run_hash;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("checkpoint: cannot open " + path + " for writing");
    out.write(kMagic, 8);
    const std::string hs = header.dump();
    write_u64(out, hs.size());
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    write_doubles(out, ckpt.lambda.mu);
    write_doubles(out, ckpt.lambda.log_var);
    if (!out) throw DataError("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw DataError("checkpoint: bad magic in " + path);
    const std::uint64_t hlen = read_u64(in);
    if (!in || hlen > (1u << 20)) throw DataError("checkpoint: bad header length in " + path);
    std::string hs(hlen, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(hlen));
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint: bad header json in " + path + ": " + e.what());
    }

    Checkpoint c;
    try {
        c.format_version = header.at("format_version").get<int>();
        if (c.format_version != 1)
            throw DataError("checkpoint: unsupported format version " +
                            std::to_string(c.format_version));
        c.task = task_kind_from_name(header.at("task").get<std::string>());
        NetworkShape net;
        net.arms = header.at("shape").at("arms").get<int>();
        net.hidden_dim = header.at("shape").at("hidden_dim").get<int>();
        net.horizon_cue = header.at("shape").at("horizon_cue").get<bool>();
        c.lambda = make_encoding(net);
        const auto n = header.at("n_weights").get<std::size_t>();
        if (n != c.lambda.n_weights())
            throw DataError("checkpoint: weight count " + std::to_string(n) +
                            " inconsistent with shape (expected " +
                            std::to_string(c.lambda.n_weights()) + ")");
        const auto& t = header.at("train");
        c.c_nats = t.at("c_nats").get<double>();
        c.learning_rate = t.at("learning_rate").get<double>();
        c.dual_gain = t.value("dual_gain", 0.03);
        c.n_batches = t.at("n_batches").get<long>();
        c.batch_size = t.at("batch_size").get<int>();
        c.seed = t.at("seed").get<std::uint64_t>();
        c.reward_scale.offset = t.at("reward_offset").get<double>();
        c.reward_scale.divisor = t.at("reward_divisor").get<double>();
        c.discount = t.at("discount").get<double>();
        c.achieved_nats = header.at("achieved_nats").get<double>();
        c.final_regret = header.value("final_regret", 0.0);
        c.untrained_regret = header.value("untrained_regret", 0.0);
        c.run_hash = header.at("run_hash").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint: malformed header in " + path + ": " + e.what());
    }

    read_doubles(in, c.lambda.mu);
    read_doubles(in, c.lambda.log_var);
    if (!in) throw DataError("checkpoint: truncated payload in " + path);
    c.lambda.validate();
    return c;
}

}  // namespace rrl
