#include "rrl/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rrl {

void Tape::Arena::grow(std::size_t need) {
    std::size_t cap = cap_ ? cap_ * 2 : 4096;
    while (cap < need) cap *= 2;
    std::unique_ptr<double[]> next(new double[cap]);
    std::copy(data_.get(), data_.get() + size_, next.get());
    data_ = std::move(next);
    cap_ = cap;
}

Tape::Id Tape::push(Op op, Shape shape, Id p0, Id p1, Id p2) {
    Node n;
    n.op = op;
    n.shape = shape;
    n.p0 = p0;
    n.p1 = p1;
    n.p2 = p2;
    n.off = values_.size();
    n.needs_grad = false;
    auto needs = [this](Id p) {
        return p >= 0 && nodes_[static_cast<std::size_t>(p)].needs_grad;
    };
    if (op != Op::Leaf) n.needs_grad = needs(p0) || needs(p1) || needs(p2);
    values_.alloc(static_cast<std::size_t>(shape.size()));
    nodes_.push_back(n);
    return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::leaf(Shape shape, std::span<const double> values) {
    if (static_cast<int>(values.size()) != shape.size())
        throw std::invalid_argument("tape leaf: " + std::to_string(values.size()) +
                                    " values for shape " + shape.str());
    if (!all_finite(values)) throw std::invalid_argument("tape leaf: non-finite value");
    Id id = push(Op::Leaf, shape, -1);
    nodes_.back().needs_grad = true;
    std::copy(values.begin(), values.end(), val_ptr(id));
    return id;
}

Tape::Id Tape::constant(Shape shape, std::span<const double> values) {
    if (static_cast<int>(values.size()) != shape.size())
        throw std::invalid_argument("tape constant: " + std::to_string(values.size()) +
                                    " values for shape " + shape.str());
    if (!all_finite(values)) throw std::invalid_argument("tape constant: non-finite value");
    Id id = push(Op::Leaf, shape, -1);
    std::copy(values.begin(), values.end(), val_ptr(id));
    return id;
}

Tape::Id Tape::constant_scalar(double value) {
    return constant(Shape{1, 1}, std::span<const double>(&value, 1));
}

void Tape::check_same_shape(const char* op, Id a, Id b) const {
    if (shape(a) != shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape(a).str() +
                                    " vs " + shape(b).str());
}

Tape::Id Tape::add(Id a, Id b) {
    check_same_shape("add", a, b);
    Id id = push(Op::Add, shape(a), a, b);
    const double* x = val_ptr(a);
    const double* y = val_ptr(b);
    double* o = val_ptr(id);
    for (int i = 0; i < shape(id).size(); ++i) o[i] = x[i] + y[i];
    return id;
}

Tape::Id Tape::sub(Id a, Id b) {
    check_same_shape("sub", a, b);
    Id id = push(Op::Sub, shape(a), a, b);
    const double* x = val_ptr(a);
    const double* y = val_ptr(b);
    double* o = val_ptr(id);
    for (int i = 0; i < shape(id).size(); ++i) o[i] = x[i] - y[i];
    return id;
}

Tape::Id Tape::mul(Id a, Id b) {
    check_same_shape("mul", a, b);
    Id id = push(Op::Mul, shape(a), a, b);
    const double* x = val_ptr(a);
    const double* y = val_ptr(b);
    double* o = val_ptr(id);
    for (int i = 0; i < shape(id).size(); ++i) o[i] = x[i] * y[i];
    return id;
}

Tape::Id Tape::matmul(Id a, Id b) {
    const Shape sa = shape(a);
    const Shape sb = shape(b);
    if (sa.cols != sb.rows)
        throw std::invalid_argument("matmul: shape mismatch " + sa.str() + " x " + sb.str());
    Id id = push(Op::MatMul, Shape{sa.rows, sb.cols}, a, b);
    const double* x = val_ptr(a);
    const double* y = val_ptr(b);
    double* o = val_ptr(id);
    const int m = sa.rows, k = sa.cols, n = sb.cols;
    if (n == 1) {
        for (int i = 0; i < m; ++i)
            o[i] = dotp(x + static_cast<std::size_t>(i) * k, y, k);
    } else {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int l = 0; l < k; ++l) acc += x[i * k + l] * y[l * n + j];
                o[i * n + j] = acc;
            }
    }
    return id;
}

Tape::Id Tape::sigmoid(Id a) {
    Id id = push(Op::Sigmoid, shape(a), a);
    const double* x = val_ptr(a);
    double* o = val_ptr(id);
    for (int i = 0; i < shape(id).size(); ++i) o[i] = 1.0 / (1.0 + std::exp(-x[i]));
    return id;
}

Tape::Id Tape::tanh_(Id a) {
    Id id = push(Op::Tanh, shape(a), a);
    const double* x = val_ptr(a);
    double* o = val_ptr(id);
    for (int i = 0; i < shape(id).size(); ++i) o[i] = std::tanh(x[i]);
    return id;
}

Tape::Id Tape::exp_(Id a) {
    Id id = push(Op::Exp, shape(a), a);
    const double* x = val_ptr(a);
    double* o = val_ptr(id);
    for (int i = 0; i < shape(id).size(); ++i) o[i] = std::exp(x[i]);
    return id;
}

Tape::Id Tape::log_(Id a) {
    Id id = push(Op::Log, shape(a), a);
    const double* x = val_ptr(a);
    double* o = val_ptr(id);
    for (int i = 0; i < shape(id).size(); ++i) o[i] = std::log(x[i]);
    return id;
}

Tape::Id Tape::softmax_log(Id a) {
    if (shape(a).cols != 1)
        throw std::invalid_argument("softmax_log: expects a vector, got " + shape(a).str());
    Id id = push(Op::SoftmaxLog, shape(a), a);
    const double* x = val_ptr(a);
    double* o = val_ptr(id);
    const int n = shape(id).size();
    double mx = x[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    double z = 0.0;
    for (int i = 0; i < n; ++i) z += std::exp(x[i] - mx);
    const double lz = mx + std::log(z);
    for (int i = 0; i < n; ++i) o[i] = x[i] - lz;
    return id;
}

Tape::Id Tape::sum(Id a) {
    Id id = push(Op::Sum, Shape{1, 1}, a);
    const double* x = val_ptr(a);
    double acc = 0.0;
    for (int i = 0; i < shape(a).size(); ++i) acc += x[i];
    *val_ptr(id) = acc;
    return id;
}

Tape::Id Tape::mean(Id a) {
    Id id = push(Op::Mean, Shape{1, 1}, a);
    const double* x = val_ptr(a);
    double acc = 0.0;
    const int n = shape(a).size();
    for (int i = 0; i < n; ++i) acc += x[i];
    *val_ptr(id) = acc / n;
    return id;
}

Tape::Id Tape::square(Id a) {
    Id id = push(Op::Square, shape(a), a);
    const double* x = val_ptr(a);
    double* o = val_ptr(id);
    for (int i = 0; i < shape(id).size(); ++i) o[i] = x[i] * x[i];
    return id;
}

Tape::Id Tape::gaussian_reparam(Id mu, Id log_var, Id eps) {
    check_same_shape("gaussian_reparam", mu, log_var);
    check_same_shape("gaussian_reparam", mu, eps);
    Id id = push(Op::GaussianReparam, shape(mu), mu, log_var, eps);
    const double* m = val_ptr(mu);
    const double* lv = val_ptr(log_var);
    const double* e = val_ptr(eps);
    double* o = val_ptr(id);
    for (int i = 0; i < shape(id).size(); ++i) o[i] = m[i] + std::exp(0.5 * lv[i]) * e[i];
    return id;
}

Tape::Id Tape::gaussian_reparam(Id mu, Id log_var, Id eps, std::span<const double> sigma) {
    check_same_shape("gaussian_reparam", mu, log_var);
    check_same_shape("gaussian_reparam", mu, eps);
    if (static_cast<int>(sigma.size()) != shape(mu).size())
        throw std::invalid_argument("gaussian_reparam: sigma size mismatch");
    Id id = push(Op::GaussianReparam, shape(mu), mu, log_var, eps);
    const double* m = val_ptr(mu);
    const double* e = val_ptr(eps);
    double* o = val_ptr(id);
    for (int i = 0; i < shape(id).size(); ++i) o[i] = m[i] + sigma[i] * e[i];
    return id;
}

void Tape::backward(Id loss) {
    if (loss < 0 || static_cast<std::size_t>(loss) >= nodes_.size())
        throw std::invalid_argument("backward: unknown node");
    if (!shape(loss).is_scalar())
        throw std::invalid_argument("backward: loss must be scalar, got " + shape(loss).str());
    grads_.assign(values_.size(), 0.0);
    grads_[nodes_[static_cast<std::size_t>(loss)].off] = 1.0;

    for (Id id = loss; id >= 0; --id) {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.needs_grad || n.op == Op::Leaf) continue;
        const double* g = grads_.data() + n.off;
        const double* o = values_.data() + n.off;
        const int sz = n.shape.size();
        auto wants = [this](Id p) { return nodes_[static_cast<std::size_t>(p)].needs_grad; };
        switch (n.op) {
            case Op::Add: {
                if (wants(n.p0)) {
                    double* ga = grad_ptr(n.p0);
                    for (int i = 0; i < sz; ++i) ga[i] += g[i];
                }
                if (wants(n.p1)) {
                    double* gb = grad_ptr(n.p1);
                    for (int i = 0; i < sz; ++i) gb[i] += g[i];
                }
                break;
            }
            case Op::Sub: {
                if (wants(n.p0)) {
                    double* ga = grad_ptr(n.p0);
                    for (int i = 0; i < sz; ++i) ga[i] += g[i];
                }
                if (wants(n.p1)) {
                    double* gb = grad_ptr(n.p1);
                    for (int i = 0; i < sz; ++i) gb[i] -= g[i];
                }
                break;
            }
            case Op::Mul: {
                const double* a = val_ptr(n.p0);
                const double* b = val_ptr(n.p1);
                if (wants(n.p0)) {
                    double* ga = grad_ptr(n.p0);
                    for (int i = 0; i < sz; ++i) ga[i] += g[i] * b[i];
                }
                if (wants(n.p1)) {
                    double* gb = grad_ptr(n.p1);
                    for (int i = 0; i < sz; ++i) gb[i] += g[i] * a[i];
                }
                break;
            }
            case Op::MatMul: {
                const Shape sa = nodes_[static_cast<std::size_t>(n.p0)].shape;
                const Shape sb = nodes_[static_cast<std::size_t>(n.p1)].shape;
                const int m = sa.rows, k = sa.cols, nc = sb.cols;
                const double* a = val_ptr(n.p0);
                const double* b = val_ptr(n.p1);
                if (nc == 1) {
                    // dA += g * b^T (outer), db += A^T g
                    if (wants(n.p0)) {
                        double* ga = grad_ptr(n.p0);
                        for (int i = 0; i < m; ++i) {
                            const double gi = g[i];
                            double* row = ga + static_cast<std::size_t>(i) * k;
                            for (int j = 0; j < k; ++j) row[j] += gi * b[j];
                        }
                    }
                    if (wants(n.p1)) {
                        double* gb = grad_ptr(n.p1);
                        for (int i = 0; i < m; ++i) {
                            const double gi = g[i];
                            const double* row = a + static_cast<std::size_t>(i) * k;
                            for (int j = 0; j < k; ++j) gb[j] += gi * row[j];
                        }
                    }
                } else {
                    if (wants(n.p0)) {
                        double* ga = grad_ptr(n.p0);
                        for (int i = 0; i < m; ++i)
                            for (int l = 0; l < k; ++l) {
                                double acc = 0.0;
                                for (int j = 0; j < nc; ++j) acc += g[i * nc + j] * b[l * nc + j];
                                ga[i * k + l] += acc;
                            }
                    }
                    if (wants(n.p1)) {
                        double* gb = grad_ptr(n.p1);
                        for (int l = 0; l < k; ++l)
                            for (int j = 0; j < nc; ++j) {
                                double acc = 0.0;
                                for (int i = 0; i < m; ++i) acc += a[i * k + l] * g[i * nc + j];
                                gb[l * nc + j] += acc;
                            }
                    }
                }
                break;
            }
            case Op::Sigmoid: {
                double* ga = grad_ptr(n.p0);
                for (int i = 0; i < sz; ++i) ga[i] += g[i] * o[i] * (1.0 - o[i]);
                break;
            }
            case Op::Tanh: {
                double* ga = grad_ptr(n.p0);
                for (int i = 0; i < sz; ++i) ga[i] += g[i] * (1.0 - o[i] * o[i]);
                break;
            }
            case Op::Exp: {
                double* ga = grad_ptr(n.p0);
                for (int i = 0; i < sz; ++i) ga[i] += g[i] * o[i];
                break;
            }
            case Op::Log: {
                const double* a = val_ptr(n.p0);
                double* ga = grad_ptr(n.p0);
                for (int i = 0; i < sz; ++i) ga[i] += g[i] / a[i];
                break;
            }
            case Op::SoftmaxLog: {
                // o = x - logsumexp(x); dx = g - softmax(x) * sum(g)
                double* ga = grad_ptr(n.p0);
                double gs = 0.0;
                for (int i = 0; i < sz; ++i) gs += g[i];
                for (int i = 0; i < sz; ++i) ga[i] += g[i] - std::exp(o[i]) * gs;
                break;
            }
            case Op::Sum: {
                double* ga = grad_ptr(n.p0);
                const int psz = nodes_[static_cast<std::size_t>(n.p0)].shape.size();
                for (int i = 0; i < psz; ++i) ga[i] += g[0];
                break;
            }
            case Op::Mean: {
                double* ga = grad_ptr(n.p0);
                const int psz = nodes_[static_cast<std::size_t>(n.p0)].shape.size();
                const double gi = g[0] / psz;
                for (int i = 0; i < psz; ++i) ga[i] += gi;
                break;
            }
            case Op::Square: {
                const double* a = val_ptr(n.p0);
                double* ga = grad_ptr(n.p0);
                for (int i = 0; i < sz; ++i) ga[i] += 2.0 * g[i] * a[i];
                break;
            }
            case Op::GaussianReparam: {
                // d(w)/d(log_var) = 0.5 * sigma * eps = 0.5 * (w - mu).
                const double* m = val_ptr(n.p0);
                if (wants(n.p0)) {
                    double* gm = grad_ptr(n.p0);
                    for (int i = 0; i < sz; ++i) gm[i] += g[i];
                }
                if (wants(n.p1)) {
                    double* gv = grad_ptr(n.p1);
                    for (int i = 0; i < sz; ++i) gv[i] += g[i] * 0.5 * (o[i] - m[i]);
                }
                break;
            }
            case Op::Leaf:
                break;
        }
    }
}

std::span<const double> Tape::value(Id id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return {values_.data() + n.off, static_cast<std::size_t>(n.shape.size())};
}

std::span<const double> Tape::grad(Id id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return {grads_.data() + n.off, static_cast<std::size_t>(n.shape.size())};
}

void Tape::reset() {
    nodes_.clear();
    values_.clear();
    grads_.clear();
}

}  // namespace rrl
