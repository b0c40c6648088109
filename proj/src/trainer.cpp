#include "rrl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "rrl/errors.hpp"
#include "rrl/tape.hpp"

namespace rrl {

RewardScale default_reward_scale(TaskKind kind) {
    switch (kind) {
        case TaskKind::Gaussian2: return {0.0, 30.0};
        case TaskKind::Horizon: return {50.0, 50.0};
        case TaskKind::IgtTrain:
        case TaskKind::IgtCanonical: return {0.0, 500.0};
    }
    return {0.0, 1.0};
}

double scale_reward(const RewardScale& s, double r) { return (r - s.offset) / s.divisor; }

double scale_reward(TaskKind kind, double r) {
    return scale_reward(default_reward_scale(kind), r);
}

double default_discount(TaskKind kind) {
    return (kind == TaskKind::IgtTrain || kind == TaskKind::IgtCanonical) ? 0.9 : 1.0;
}

double advantage(double r_scaled, double v_t, double v_next, double gamma) {
    return r_scaled + gamma * v_next - v_t;
}

EpisodeLosses episode_losses(std::span<const double> rewards_scaled,
                             std::span<const double> values,
                             std::span<const double> log_pi_chosen, double gamma) {
    const std::size_t h = rewards_scaled.size();
    if (values.size() != h + 1 || log_pi_chosen.size() != h)
        throw std::invalid_argument("episode_losses: length mismatch");
    double critic = 0.0;
    double actor = 0.0;
    for (std::size_t t = 0; t < h; ++t) {
        const double adv = advantage(rewards_scaled[t], values[t], values[t + 1], gamma);
        critic += adv * adv;
        actor -= adv * log_pi_chosen[t];
    }
    const double inv_h = 1.0 / static_cast<double>(h);
    return {critic * inv_h, actor * inv_h};
}

double DualState::beta() const { return std::exp(log_beta); }

DualState dual_update(DualState d, double achieved_kl, double c, double gain) {
    const double denom = std::max({achieved_kl, c, 1e-12});
    d.log_beta += gain * (achieved_kl - c) / denom;
    d.log_beta = std::clamp(d.log_beta, -20.0, 20.0);
    return d;
}

void TrainConfig::resolve_defaults() {
    if (discount < 0.0) discount = default_discount(task);
    if (reward_scale.divisor < 0.0) reward_scale = default_reward_scale(task);
    if (threads <= 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, batch_size);
}

void TrainConfig::validate() const {
    if (c_nats <= 0.0) throw ConfigError("train: C must be > 0");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (n_batches < 1) throw ConfigError("train: n_batches must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("train: learning_rate must be > 0");
    if (reward_scale.divisor == 0.0) throw ConfigError("train: reward divisor must be nonzero");
    if (hidden_dim < 1) throw ConfigError("train: hidden_dim must be >= 1");
}

namespace {

// Runs fn(lo, hi) over [0, total) split across n_threads.  Each range is
// disjoint, so the work is deterministic as long as fn touches only its
// slice (plus per-index state).
template <typename Fn>
void parallel_ranges(int n_threads, std::size_t total, Fn&& fn) {
    if (n_threads <= 1 || total < 2) {
        fn(std::size_t{0}, total);
        return;
    }
    const std::size_t chunk = (total + static_cast<std::size_t>(n_threads) - 1) /
                              static_cast<std::size_t>(n_threads);
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) {
        const std::size_t lo = chunk * static_cast<std::size_t>(t);
        if (lo >= total) break;
        const std::size_t hi = std::min(total, lo + chunk);
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    fn(std::size_t{0}, std::min(total, chunk));
    for (auto& th : pool) th.join();
}

NetworkShape shape_for(const TrainConfig& cfg) {
    NetworkShape net;
    net.hidden_dim = cfg.hidden_dim;
    switch (cfg.task) {
        case TaskKind::Gaussian2: net.arms = 2; break;
        case TaskKind::Horizon: net.arms = 2; net.horizon_cue = true; break;
        case TaskKind::IgtTrain:
        case TaskKind::IgtCanonical: net.arms = 4; break;
    }
    return net;
}

int sample_from_log_policy(std::span<const double> log_policy, Stream& rng) {
    const double u = rng.uniform01();
    double acc = 0.0;
    const int k = static_cast<int>(log_policy.size());
    for (int a = 0; a < k; ++a) {
        acc += std::exp(log_policy[static_cast<std::size_t>(a)]);
        if (u < acc) return a;
    }
    return k - 1;
}

struct EpisodeOutcome {
    double loss = 0.0;
    double regret = 0.0;
};

// Builds the episode graph, rolls the policy out, assembles the losses on
// the tape and writes d(loss)/d(Lambda) into the flat gradient buffers.
EpisodeOutcome run_training_episode(const TrainConfig& cfg, const ParameterEncoding& enc,
                                    std::span<const double> sigma, const Stream& root,
                                    long batch, int episode, Tape& tape,
                                    std::vector<double>& eps_scratch,
                                    std::span<double> grad_mu, std::span<double> grad_lv) {
    Stream task_rng = fork(root, Purpose::TaskSample, static_cast<std::uint64_t>(batch),
                           static_cast<std::uint64_t>(episode));
    Stream w_rng = fork(root, Purpose::WeightSample, static_cast<std::uint64_t>(batch),
                        static_cast<std::uint64_t>(episode));
    Stream a_rng = fork(root, Purpose::ActionSample, static_cast<std::uint64_t>(batch),
                        static_cast<std::uint64_t>(episode));
    Stream env_rng = fork(root, Purpose::RewardNoise, static_cast<std::uint64_t>(batch),
                          static_cast<std::uint64_t>(episode));

    const TaskInstance task = sample_task(cfg.task, task_rng);
    const double gamma = cfg.discount;

    eps_scratch.resize(enc.n_weights());
    fill_normal(w_rng, eps_scratch);

    tape.reset();
    EpisodeGraph graph(tape, enc, eps_scratch, sigma);

    const int total = task.total_trials();
    const int free_trials = task.horizon;
    std::vector<Tape::Id> value_ids;
    std::vector<Tape::Id> log_policy_ids;
    std::vector<int> actions;
    std::vector<double> rewards_scaled;
    value_ids.reserve(static_cast<std::size_t>(free_trials));
    log_policy_ids.reserve(static_cast<std::size_t>(free_trials));

    Tape::Id hidden = -1;
    int prev_action = -1;
    double prev_reward_scaled = 0.0;
    double reward_sum = 0.0;
    for (int t = 0; t < total; ++t) {
        const auto input = make_input(enc.net, prev_action, prev_reward_scaled, task.horizon_cue);
        const auto out = graph.step(input, hidden);
        hidden = out.hidden;
        const bool forced = t < task.forced_trials();
        int action;
        if (forced) {
            action = task.forced[static_cast<std::size_t>(t)];
        } else {
            action = sample_from_log_policy(tape.value(out.log_policy), a_rng);
        }
        const double reward = step(task, action, env_rng, t);
        const double rs = scale_reward(cfg.reward_scale, reward);
        if (!forced) {
            value_ids.push_back(out.value);
            log_policy_ids.push_back(out.log_policy);
            actions.push_back(action);
            rewards_scaled.push_back(rs);
            reward_sum += reward;
        }
        prev_action = action;
        prev_reward_scaled = rs;
    }

    // Forced-choice trials shape the hidden state but are excluded from the
    // losses; sums below run over free-choice trials only.
    Tape::Id critic = -1;
    Tape::Id actor = -1;
    std::vector<double> onehot(static_cast<std::size_t>(task.k));
    for (int i = 0; i < free_trials; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const Tape::Id v_t = value_ids[ui];
        Tape::Id target;
        double v_next_val = 0.0;
        if (i + 1 < free_trials) {
            v_next_val = tape.scalar(value_ids[ui + 1]);
            target = tape.add(tape.constant_scalar(rewards_scaled[ui]),
                              tape.mul(tape.constant_scalar(gamma), value_ids[ui + 1]));
        } else {
            target = tape.constant_scalar(rewards_scaled[ui]);
        }
        const Tape::Id sq = tape.square(tape.sub(target, v_t));
        critic = (critic < 0) ? sq : tape.add(critic, sq);

        // The advantage enters the actor loss as a constant (no gradient).
        const double adv =
            advantage(rewards_scaled[ui], tape.scalar(v_t), v_next_val, gamma);
        std::fill(onehot.begin(), onehot.end(), 0.0);
        onehot[static_cast<std::size_t>(actions[ui])] = 1.0;
        const Tape::Id picked = tape.sum(
            tape.mul(log_policy_ids[ui], tape.constant(Shape{task.k, 1}, onehot)));
        const Tape::Id term = tape.mul(tape.constant_scalar(-adv), picked);
        actor = (actor < 0) ? term : tape.add(actor, term);
    }
    const Tape::Id loss = tape.mul(tape.constant_scalar(1.0 / free_trials),
                                   tape.add(critic, actor));

    EpisodeOutcome out;
    out.loss = tape.scalar(loss);
    out.regret = task.best_expected_reward() - reward_sum / free_trials;
    if (std::isfinite(out.loss)) {
        tape.backward(loss);
        graph.collect_grads(grad_mu, grad_lv);
    }
    return out;
}

}  // namespace

double evaluate_regret(const ParameterEncoding& enc, TaskKind task_kind,
                       const RewardScale& scale, int n_episodes, Stream root) {
    double total_regret = 0.0;
    for (int e = 0; e < n_episodes; ++e) {
        Stream task_rng = root.fork({1, static_cast<std::uint64_t>(e)});
        Stream w_rng = root.fork({2, static_cast<std::uint64_t>(e)});
        Stream a_rng = root.fork({3, static_cast<std::uint64_t>(e)});
        Stream env_rng = root.fork({4, static_cast<std::uint64_t>(e)});
        const TaskInstance task = sample_task(task_kind, task_rng);
        const SampledWeights w = sample_weights(enc, w_rng);
        auto hidden = init_hidden(enc.net);
        std::vector<double> policy(static_cast<std::size_t>(task.k));
        int prev_action = -1;
        double prev_reward_scaled = 0.0;
        double reward_sum = 0.0;
        for (int t = 0; t < task.total_trials(); ++t) {
            const auto input =
                make_input(enc.net, prev_action, prev_reward_scaled, task.horizon_cue);
            forward_step(enc.net, enc, w, input, hidden, policy);
            int action;
            if (t < task.forced_trials()) {
                action = task.forced[static_cast<std::size_t>(t)];
            } else {
                const double u = a_rng.uniform01();
                double acc = 0.0;
                action = task.k - 1;
                for (int a = 0; a < task.k; ++a) {
                    acc += policy[static_cast<std::size_t>(a)];
                    if (u < acc) { action = a; break; }
                }
            }
            const double reward = step(task, action, env_rng, t);
            if (t >= task.forced_trials()) reward_sum += reward;
            prev_action = action;
            prev_reward_scaled = scale_reward(scale, reward);
        }
        total_regret += task.best_expected_reward() - reward_sum / task.horizon;
    }
    return total_regret / n_episodes;
}

TrainResult train(const TrainConfig& cfg_in,
                  const std::function<void(const ParameterEncoding&)>& on_diagnostic) {
    TrainConfig cfg = cfg_in;
    cfg.resolve_defaults();
    cfg.validate();

    const Stream root(cfg.seed);
    Stream init_rng = root.fork({static_cast<std::uint64_t>(Purpose::WeightSample), 0xffffffffULL});
    ParameterEncoding enc = init_encoding(shape_for(cfg), init_rng);
    const std::size_t n = enc.n_weights();

    TrainResult result;
    result.untrained_regret = evaluate_regret(enc, cfg.task, cfg.reward_scale,
                                              cfg.eval_episodes, fork(root, Purpose::Eval));

    // Adam state over (mu, log_var).
    std::vector<double> m_mu(n, 0.0), v_mu(n, 0.0), m_lv(n, 0.0), v_lv(n, 0.0);
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;

    DualState dual;
    const int batch = cfg.batch_size;
    std::vector<std::vector<double>> ep_grad_mu(static_cast<std::size_t>(batch)),
        ep_grad_lv(static_cast<std::size_t>(batch));
    for (auto& g : ep_grad_mu) g.assign(n, 0.0);
    for (auto& g : ep_grad_lv) g.assign(n, 0.0);
    std::vector<EpisodeOutcome> outcomes(static_cast<std::size_t>(batch));
    std::vector<double> sigma(n), grad_mu(n), grad_lv(n);
    std::vector<Tape> tapes(static_cast<std::size_t>(cfg.threads));
    std::vector<std::vector<double>> eps_scratch(static_cast<std::size_t>(cfg.threads));

    double pow_b1 = 1.0, pow_b2 = 1.0;
    for (long b = 0; b < cfg.n_batches; ++b) {
        parallel_ranges(cfg.threads, static_cast<std::size_t>(n), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) sigma[i] = std::exp(0.5 * enc.log_var[i]);
        });

        // Roll out the batch; worker t owns episodes t, t+T, ...
        {
            std::vector<std::thread> pool;
            auto work = [&](int worker) {
                for (int e = worker; e < batch; e += cfg.threads) {
                    outcomes[static_cast<std::size_t>(e)] = run_training_episode(
                        cfg, enc, sigma, root, b, e, tapes[static_cast<std::size_t>(worker)],
                        eps_scratch[static_cast<std::size_t>(worker)],
                        ep_grad_mu[static_cast<std::size_t>(e)],
                        ep_grad_lv[static_cast<std::size_t>(e)]);
                }
            };
            for (int t = 1; t < cfg.threads; ++t) pool.emplace_back(work, t);
            work(0);
            for (auto& th : pool) th.join();
        }

        double batch_loss = 0.0;
        double batch_regret = 0.0;
        for (const auto& o : outcomes) {
            batch_loss += o.loss;
            batch_regret += o.regret;
        }
        batch_loss /= batch;
        batch_regret /= batch;

        if (!std::isfinite(batch_loss)) {
            result.lambda = enc;
            if (on_diagnostic) on_diagnostic(enc);
            throw NumericError("train: non-finite loss at batch " + std::to_string(b));
        }

        const double beta = dual.beta();
        const double inv_batch = 1.0 / batch;
        pow_b1 *= kBeta1;
        pow_b2 *= kBeta2;
        const double corr1 = 1.0 / (1.0 - pow_b1);
        const double corr2 = 1.0 / (1.0 - pow_b2);
        // One fused pass over the slots: average the episode gradients, add
        // the beta-weighted KL gradient (evaluated at the pre-update
        // encoding) and take the Adam step.  The KL value is reduced over
        // fixed 4096-slot blocks so the result is independent of the thread
        // partition.
        constexpr std::size_t kKlBlock = 4096;
        std::vector<double> kl_block((n + kKlBlock - 1) / kKlBlock, 0.0);
        parallel_ranges(cfg.threads, kl_block.size(), [&](std::size_t blo, std::size_t bhi) {
            for (std::size_t blk = blo; blk < bhi; ++blk) {
                const std::size_t lo = blk * kKlBlock;
                const std::size_t hi = std::min(n, lo + kKlBlock);
                for (std::size_t i = lo; i < hi; ++i) {
                    double gm = 0.0, gl = 0.0;
                    for (int e = 0; e < batch; ++e) {
                        gm += ep_grad_mu[static_cast<std::size_t>(e)][i];
                        gl += ep_grad_lv[static_cast<std::size_t>(e)][i];
                    }
                    grad_mu[i] = gm * inv_batch;
                    grad_lv[i] = gl * inv_batch;
                }
                kl_block[blk] =
                    description_length_grad_range(enc, beta, grad_mu, grad_lv, lo, hi);
                for (std::size_t i = lo; i < hi; ++i) {
                    m_mu[i] = kBeta1 * m_mu[i] + (1.0 - kBeta1) * grad_mu[i];
                    v_mu[i] = kBeta2 * v_mu[i] + (1.0 - kBeta2) * grad_mu[i] * grad_mu[i];
                    enc.mu[i] -= cfg.learning_rate * (m_mu[i] * corr1) /
                                 (std::sqrt(v_mu[i] * corr2) + kAdamEps);
                    m_lv[i] = kBeta1 * m_lv[i] + (1.0 - kBeta1) * grad_lv[i];
                    v_lv[i] = kBeta2 * v_lv[i] + (1.0 - kBeta2) * grad_lv[i] * grad_lv[i];
                    enc.log_var[i] -= cfg.learning_rate * (m_lv[i] * corr1) /
                                      (std::sqrt(v_lv[i] * corr2) + kAdamEps);
                }
            }
        });
        double kl = 0.0;
        for (double part : kl_block) kl += part;

        dual = dual_update(dual, kl, cfg.c_nats, cfg.dual_gain);

        if ((b + 1) % cfg.stats_every == 0 || b + 1 == cfg.n_batches) {
            result.stats.push_back({b + 1, batch_regret, kl, beta});
        }
    }

    result.lambda = std::move(enc);
    result.dual = dual;
    result.achieved_kl = description_length(result.lambda);
    result.final_regret = evaluate_regret(result.lambda, cfg.task, cfg.reward_scale,
                                          cfg.eval_episodes, fork(root, Purpose::Eval, 1));
    return result;
}

}  // namespace rrl
