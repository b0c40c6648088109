#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "rrl/array.hpp"
#include "rrl/rng.hpp"
#include "rrl/tape.hpp"

namespace rrl {

// Recurrent policy sizes.  The input is the previous action (one-hot over k
// arms), the previous scaled reward, and optionally a binary horizon cue.
struct NetworkShape {
    int arms = 2;
    int hidden_dim = 128;
    bool horizon_cue = false;

    int input_dim() const { return arms + 1 + (horizon_cue ? 1 : 0); }
    bool operator==(const NetworkShape&) const = default;
};

// Parameter groups of the GRU core and the two linear heads.
//
// GRU convention (fixed for this project): single bias per gate, reset gate
// applied to the recurrent product,
//   z = sigmoid(Wz x + Uz h + bz)
//   r = sigmoid(Wr x + Ur h + br)
//   n = tanh(Wn x + r . (Un h) + bn)
//   h' = (1 - z) . n + z . h
enum ParamGroup : int {
    kWz, kWr, kWn,      // hidden x input
    kUz, kUr, kUn,      // hidden x hidden
    kBz, kBr, kBn,      // hidden
    kPolicyW, kPolicyB, // arms x hidden, arms
    kValueW, kValueB,   // 1 x hidden, 1
    kNumParamGroups,
};

const char* param_group_name(int g);

// Per-weight Gaussian encoding of the network parameters: a mean and a
// log-variance for every weight and bias, stored flat with one (offset,
// shape) record per group.
struct ParameterEncoding {
    NetworkShape net;
    std::array<Shape, kNumParamGroups> group_shape;
    std::array<std::size_t, kNumParamGroups> group_offset;
    std::vector<double> mu;
    std::vector<double> log_var;

    std::size_t n_weights() const { return mu.size(); }

    std::span<double> mu_of(int g) {
        return {mu.data() + group_offset[static_cast<std::size_t>(g)],
                static_cast<std::size_t>(group_shape[static_cast<std::size_t>(g)].size())};
    }
    std::span<const double> mu_of(int g) const {
        return {mu.data() + group_offset[static_cast<std::size_t>(g)],
                static_cast<std::size_t>(group_shape[static_cast<std::size_t>(g)].size())};
    }
    std::span<double> log_var_of(int g) {
        return {log_var.data() + group_offset[static_cast<std::size_t>(g)],
                static_cast<std::size_t>(group_shape[static_cast<std::size_t>(g)].size())};
    }
    std::span<const double> log_var_of(int g) const {
        return {log_var.data() + group_offset[static_cast<std::size_t>(g)],
                static_cast<std::size_t>(group_shape[static_cast<std::size_t>(g)].size())};
    }

    void validate() const;
};

// Mean initialization is uniform fan-in scaling; log-variances start at
// log(alpha0 * mu^2) so every weight begins with alpha ~ alpha0.
ParameterEncoding init_encoding(const NetworkShape& net, Stream& rng, double alpha0 = 0.1);

// Layout-only construction (zeros), for loading checkpoints.
ParameterEncoding make_encoding(const NetworkShape& net);

// One draw W = mu + sigma * eps per weight slot.
struct SampledWeights {
    std::vector<double> w;  // flat, same layout as the encoding
    std::span<const double> of(const ParameterEncoding& enc, int g) const {
        return {w.data() + enc.group_offset[static_cast<std::size_t>(g)],
                static_cast<std::size_t>(
                    enc.group_shape[static_cast<std::size_t>(g)].size())};
    }
};

SampledWeights sample_weights(const ParameterEncoding& enc, Stream& rng);

std::vector<double> init_hidden(const NetworkShape& net);

// Builds the network input for one time-step.  prev_action < 0 encodes "no
// previous action" (the initial step); the one-hot block is then all zeros.
std::vector<double> make_input(const NetworkShape& net, int prev_action,
                               double prev_reward_scaled, bool cue);

// Plain (gradient-free) forward step used by simulation and fitting.
// policy receives softmax probabilities; returns the value estimate.
double forward_step(const NetworkShape& net, const ParameterEncoding& enc,
                    const SampledWeights& w, std::span<const double> input,
                    std::vector<double>& hidden, std::span<double> policy);

// ---- Description length -------------------------------------------------
//
// KL[q(W|Lambda) || p(W)] for the log-uniform (variational dropout) prior,
// using the closed-form approximation of Molchanov et al. as a function of
// alpha = sigma^2 / mu^2, shifted so the per-weight value tends to 0 as
// alpha -> inf and clamped at 0.  alpha is clamped to [1e-8, 1e8]; mu = 0 is
// treated as alpha = +inf (zero contribution).

double kl_per_weight(double alpha);
double description_length(const ParameterEncoding& enc);

// Accumulates scale * d(KL)/d(mu,log_var) into the flat gradient buffers.
void add_description_length_grad(const ParameterEncoding& enc, double scale,
                                 std::span<double> grad_mu, std::span<double> grad_log_var);

// Fused value + gradient over a slot range [lo, hi); returns the KL sum of
// the range.  Lets the training loop compute both in one parallel pass.
double description_length_grad_range(const ParameterEncoding& enc, double scale,
                                     std::span<double> grad_mu, std::span<double> grad_log_var,
                                     std::size_t lo, std::size_t hi);

// ---- Tape-backed episode graph ------------------------------------------

// Unrolls GRU steps of one episode on the tape.  The sampled weights
// W = mu + sigma * eps are the tape leaves; the reparametrization chain rule
// into (mu, log_var) is applied when the gradients are collected, so the
// per-episode graph never has to copy the full encoding.
class EpisodeGraph {
public:
    // sigma, when provided, must equal exp(0.5 * log_var) for the current
    // encoding (a per-batch memoization; the graph semantics are unchanged).
    EpisodeGraph(Tape& tape, const ParameterEncoding& enc, std::span<const double> eps,
                 std::span<const double> sigma = {});

    struct StepOut {
        Tape::Id hidden;
        Tape::Id log_policy;  // vector of log-probabilities
        Tape::Id value;       // scalar
    };

    // Feeds one input; hidden = -1 starts from the all-zeros state.
    StepOut step(std::span<const double> input, Tape::Id hidden);

    // Writes d(loss)/d(mu, log_var) into flat buffers (after backward()):
    // d/d(mu) = dW, d/d(log_var) = dW * 0.5 * sigma * eps = dW * 0.5 * (W - mu).
    void collect_grads(std::span<double> grad_mu, std::span<double> grad_log_var) const;

private:
    Tape& tape_;
    const ParameterEncoding& enc_;
    std::array<Tape::Id, kNumParamGroups> w_ids_;
    Tape::Id zero_hidden_;
    Tape::Id ones_hidden_;
};

}  // namespace rrl
