#include "rrl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rrl {

namespace {

// Molchanov et al. closed-form constants for the variational-dropout KL,
// validated against a Monte-Carlo oracle of the exact log-uniform KL in the
// test suite rather than asserted.
constexpr double kKl1 = 0.63576;
constexpr double kKl2 = 1.87320;
constexpr double kKl3 = 1.48695;
constexpr double kAlphaMin = 1e-8;
constexpr double kAlphaMax = 1e8;

std::array<Shape, kNumParamGroups> group_shapes(const NetworkShape& net) {
    const int h = net.hidden_dim;
    const int in = net.input_dim();
    const int k = net.arms;
    return {
        Shape{h, in}, Shape{h, in}, Shape{h, in},  // Wz Wr Wn
        Shape{h, h},  Shape{h, h},  Shape{h, h},   // Uz Ur Un
        Shape{h, 1},  Shape{h, 1},  Shape{h, 1},   // bz br bn
        Shape{k, h},  Shape{k, 1},                 // policy head
        Shape{1, h},  Shape{1, 1},                 // value head
    };
}

int fan_in_of(int g, const NetworkShape& net) {
    switch (g) {
        case kWz: case kWr: case kWn:
            return net.input_dim();
        default:
            return net.hidden_dim;
    }
}

}  // namespace

const char* param_group_name(int g) {
    static const char* kNames[kNumParamGroups] = {
        "gru.w_z", "gru.w_r", "gru.w_n", "gru.u_z", "gru.u_r", "gru.u_n",
        "gru.b_z", "gru.b_r", "gru.b_n", "policy.w", "policy.b", "value.w", "value.b",
    };
    return kNames[g];
}

void ParameterEncoding::validate() const {
    if (mu.size() != log_var.size())
        throw std::invalid_argument("encoding: mu/log_var size mismatch");
    std::size_t total = 0;
    for (int g = 0; g < kNumParamGroups; ++g) {
        if (group_offset[static_cast<std::size_t>(g)] != total)
            throw std::invalid_argument("encoding: bad group layout");
        total += static_cast<std::size_t>(group_shape[static_cast<std::size_t>(g)].size());
    }
    if (total != mu.size()) throw std::invalid_argument("encoding: size/layout mismatch");
    if (!all_finite(mu) || !all_finite(log_var))
        throw std::invalid_argument("encoding: non-finite parameter");
}

ParameterEncoding make_encoding(const NetworkShape& net) {
    ParameterEncoding enc;
    enc.net = net;
    enc.group_shape = group_shapes(net);
    std::size_t total = 0;
    for (int g = 0; g < kNumParamGroups; ++g) {
        enc.group_offset[static_cast<std::size_t>(g)] = total;
        total += static_cast<std::size_t>(enc.group_shape[static_cast<std::size_t>(g)].size());
    }
    enc.mu.assign(total, 0.0);
    enc.log_var.assign(total, 0.0);
    return enc;
}

ParameterEncoding init_encoding(const NetworkShape& net, Stream& rng, double alpha0) {
    ParameterEncoding enc = make_encoding(net);
    for (int g = 0; g < kNumParamGroups; ++g) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in_of(g, net)));
        auto mu = enc.mu_of(g);
        auto lv = enc.log_var_of(g);
        for (std::size_t i = 0; i < mu.size(); ++i) {
            mu[i] = rng.uniform(-bound, bound);
            lv[i] = std::log(alpha0 * std::max(mu[i] * mu[i], 1e-12));
        }
    }
    return enc;
}

SampledWeights sample_weights(const ParameterEncoding& enc, Stream& rng) {
    SampledWeights s;
    s.w.resize(enc.n_weights());
    fill_normal(rng, s.w);
    for (std::size_t i = 0; i < s.w.size(); ++i)
        s.w[i] = enc.mu[i] + std::exp(0.5 * enc.log_var[i]) * s.w[i];
    return s;
}

std::vector<double> init_hidden(const NetworkShape& net) {
    return std::vector<double>(static_cast<std::size_t>(net.hidden_dim), 0.0);
}

std::vector<double> make_input(const NetworkShape& net, int prev_action,
                               double prev_reward_scaled, bool cue) {
    std::vector<double> x(static_cast<std::size_t>(net.input_dim()), 0.0);
    if (prev_action >= net.arms)
        throw std::invalid_argument("make_input: action out of range");
    if (!std::isfinite(prev_reward_scaled))
        throw std::invalid_argument("make_input: non-finite reward");
    if (prev_action >= 0) x[static_cast<std::size_t>(prev_action)] = 1.0;
    x[static_cast<std::size_t>(net.arms)] = prev_reward_scaled;
    if (net.horizon_cue) x[static_cast<std::size_t>(net.arms) + 1] = cue ? 1.0 : 0.0;
    return x;
}

namespace {

inline void matvec(std::span<const double> w, std::span<const double> x, int rows, int cols,
                   double* out, bool accumulate) {
    for (int i = 0; i < rows; ++i) {
        const double acc = dotp(w.data() + static_cast<std::size_t>(i) * cols, x.data(), cols);
        if (accumulate)
            out[i] += acc;
        else
            out[i] = acc;
    }
}

}  // namespace

double forward_step(const NetworkShape& net, const ParameterEncoding& enc,
                    const SampledWeights& w, std::span<const double> input,
                    std::vector<double>& hidden, std::span<double> policy) {
    const int h = net.hidden_dim;
    const int in = net.input_dim();
    const int k = net.arms;
    if (static_cast<int>(input.size()) != in)
        throw std::invalid_argument("forward_step: bad input size");
    if (static_cast<int>(hidden.size()) != h)
        throw std::invalid_argument("forward_step: bad hidden size");
    if (static_cast<int>(policy.size()) != k)
        throw std::invalid_argument("forward_step: bad policy size");
    if (!all_finite(input)) throw std::invalid_argument("forward_step: non-finite input");

    std::vector<double> z(static_cast<std::size_t>(h)), r(static_cast<std::size_t>(h)),
        n(static_cast<std::size_t>(h)), tmp(static_cast<std::size_t>(h));

    matvec(w.of(enc, kWz), input, h, in, z.data(), false);
    matvec(w.of(enc, kUz), hidden, h, h, z.data(), true);
    matvec(w.of(enc, kWr), input, h, in, r.data(), false);
    matvec(w.of(enc, kUr), hidden, h, h, r.data(), true);
    const auto bz = w.of(enc, kBz);
    const auto br = w.of(enc, kBr);
    for (int i = 0; i < h; ++i) {
        z[static_cast<std::size_t>(i)] =
            1.0 / (1.0 + std::exp(-(z[static_cast<std::size_t>(i)] + bz[static_cast<std::size_t>(i)])));
        r[static_cast<std::size_t>(i)] =
            1.0 / (1.0 + std::exp(-(r[static_cast<std::size_t>(i)] + br[static_cast<std::size_t>(i)])));
    }
    matvec(w.of(enc, kWn), input, h, in, n.data(), false);
    matvec(w.of(enc, kUn), hidden, h, h, tmp.data(), false);
    const auto bn = w.of(enc, kBn);
    for (int i = 0; i < h; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        n[ui] = std::tanh(n[ui] + r[ui] * tmp[ui] + bn[ui]);
        hidden[ui] = (1.0 - z[ui]) * n[ui] + z[ui] * hidden[ui];
    }

    std::vector<double> logits(static_cast<std::size_t>(k));
    matvec(w.of(enc, kPolicyW), hidden, k, h, logits.data(), false);
    const auto bp = w.of(enc, kPolicyB);
    double mx = -1e300;
    for (int i = 0; i < k; ++i) {
        logits[static_cast<std::size_t>(i)] += bp[static_cast<std::size_t>(i)];
        mx = std::max(mx, logits[static_cast<std::size_t>(i)]);
    }
    double zsum = 0.0;
    for (int i = 0; i < k; ++i) {
        policy[static_cast<std::size_t>(i)] = std::exp(logits[static_cast<std::size_t>(i)] - mx);
        zsum += policy[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < k; ++i) policy[static_cast<std::size_t>(i)] /= zsum;

    double value = w.of(enc, kValueB)[0];
    const auto wv = w.of(enc, kValueW);
    for (int i = 0; i < h; ++i)
        value += wv[static_cast<std::size_t>(i)] * hidden[static_cast<std::size_t>(i)];
    return value;
}

double kl_per_weight(double alpha) {
    const double a = std::clamp(alpha, kAlphaMin, kAlphaMax);
    const double s = 1.0 / (1.0 + std::exp(-(kKl2 + kKl3 * std::log(a))));
    const double kl = kKl1 * (1.0 - s) + 0.5 * std::log1p(1.0 / a);
    return std::max(kl, 0.0);
}

double description_length(const ParameterEncoding& enc) {
    double total = 0.0;
    for (std::size_t i = 0; i < enc.mu.size(); ++i) {
        const double m2 = enc.mu[i] * enc.mu[i];
        if (m2 == 0.0) continue;  // alpha -> inf, zero contribution
        total += kl_per_weight(std::exp(enc.log_var[i]) / m2);
    }
    return total;
}

void add_description_length_grad(const ParameterEncoding& enc, double scale,
                                 std::span<double> grad_mu, std::span<double> grad_log_var) {
    description_length_grad_range(enc, scale, grad_mu, grad_log_var, 0, enc.mu.size());
}

double description_length_grad_range(const ParameterEncoding& enc, double scale,
                                     std::span<double> grad_mu, std::span<double> grad_log_var,
                                     std::size_t lo, std::size_t hi) {
    // d(KL)/d(log alpha) with alpha = exp(log_var)/mu^2, so
    // d/d(log_var) = g and d/d(mu) = -2 g / mu.  Outside the alpha clamp the
    // gradient is zero; mu = 0 contributes nothing.
    double total = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        const double m = enc.mu[i];
        const double m2 = m * m;
        if (m2 == 0.0) continue;
        const double alpha = std::exp(enc.log_var[i]) / m2;
        total += kl_per_weight(alpha);
        if (alpha <= kAlphaMin || alpha >= kAlphaMax) continue;
        const double s = 1.0 / (1.0 + std::exp(-(kKl2 + kKl3 * std::log(alpha))));
        const double g = -kKl1 * kKl3 * s * (1.0 - s) - 0.5 / (1.0 + alpha);
        grad_log_var[i] += scale * g;
        grad_mu[i] += scale * (-2.0 * g / m);
    }
    return total;
}

EpisodeGraph::EpisodeGraph(Tape& tape, const ParameterEncoding& enc,
                           std::span<const double> eps, std::span<const double> sigma)
    : tape_(tape), enc_(enc) {
    if (eps.size() != enc.n_weights())
        throw std::invalid_argument("EpisodeGraph: eps size mismatch");
    std::vector<double> w;
    for (int g = 0; g < kNumParamGroups; ++g) {
        const Shape s = enc.group_shape[static_cast<std::size_t>(g)];
        const std::size_t off = enc.group_offset[static_cast<std::size_t>(g)];
        const std::size_t n = static_cast<std::size_t>(s.size());
        w.resize(n);
        const double* mu = enc.mu.data() + off;
        const double* lv = enc.log_var.data() + off;
        const double* e = eps.data() + off;
        if (sigma.empty()) {
            for (std::size_t i = 0; i < n; ++i) w[i] = mu[i] + std::exp(0.5 * lv[i]) * e[i];
        } else {
            const double* sg = sigma.data() + off;
            for (std::size_t i = 0; i < n; ++i) w[i] = mu[i] + sg[i] * e[i];
        }
        w_ids_[static_cast<std::size_t>(g)] = tape.leaf(s, w);
    }
    const std::vector<double> zeros(static_cast<std::size_t>(enc.net.hidden_dim), 0.0);
    const std::vector<double> ones(static_cast<std::size_t>(enc.net.hidden_dim), 1.0);
    zero_hidden_ = tape.constant(Shape{enc.net.hidden_dim, 1}, zeros);
    ones_hidden_ = tape.constant(Shape{enc.net.hidden_dim, 1}, ones);
}

EpisodeGraph::StepOut EpisodeGraph::step(std::span<const double> input, Tape::Id hidden) {
    if (hidden < 0) hidden = zero_hidden_;
    Tape& t = tape_;
    const Tape::Id x = t.constant(Shape{enc_.net.input_dim(), 1}, input);

    auto w = [this](int g) { return w_ids_[static_cast<std::size_t>(g)]; };
    const Tape::Id z =
        t.sigmoid(t.add(t.add(t.matmul(w(kWz), x), t.matmul(w(kUz), hidden)), w(kBz)));
    const Tape::Id r =
        t.sigmoid(t.add(t.add(t.matmul(w(kWr), x), t.matmul(w(kUr), hidden)), w(kBr)));
    const Tape::Id n = t.tanh_(
        t.add(t.add(t.matmul(w(kWn), x), t.mul(r, t.matmul(w(kUn), hidden))), w(kBn)));
    const Tape::Id h_new =
        t.add(t.mul(t.sub(ones_hidden_, z), n), t.mul(z, hidden));

    const Tape::Id logits = t.add(t.matmul(w(kPolicyW), h_new), w(kPolicyB));
    const Tape::Id log_policy = t.softmax_log(logits);
    const Tape::Id value = t.add(t.matmul(w(kValueW), h_new), w(kValueB));
    return {h_new, log_policy, value};
}

void EpisodeGraph::collect_grads(std::span<double> grad_mu,
                                 std::span<double> grad_log_var) const {
    for (int g = 0; g < kNumParamGroups; ++g) {
        const std::size_t off = enc_.group_offset[static_cast<std::size_t>(g)];
        const auto gw = tape_.grad(w_ids_[static_cast<std::size_t>(g)]);
        const auto wv = tape_.value(w_ids_[static_cast<std::size_t>(g)]);
        const double* mu = enc_.mu.data() + off;
        for (std::size_t i = 0; i < gw.size(); ++i) {
            grad_mu[off + i] = gw[i];
            grad_log_var[off + i] = gw[i] * 0.5 * (wv[i] - mu[i]);
        }
    }
}

}  // namespace rrl
