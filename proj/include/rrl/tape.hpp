#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "rrl/array.hpp"

namespace rrl {

// Reverse-mode automatic differentiation over dense real arrays.
//
// A Tape is a dynamic computation graph rebuilt per episode: nodes are
// appended in evaluation order, backward() walks them in reverse and
// accumulates adjoints with += so leaves shared across time-steps (recurrent
// weights) collect the full gradient.  reset() clears the graph but keeps the
// allocated arenas, so one tape can be reused across many episodes without
// touching the allocator.
//
// Single-threaded per tape; independent tapes share no state.
class Tape {
public:
    using Id = std::int32_t;

    enum class Op : std::uint8_t {
        Leaf,
        Add,
        Sub,
        Mul,
        MatMul,
        Sigmoid,
        Tanh,
        Exp,
        Log,
        SoftmaxLog,
        Sum,
        Mean,
        Square,
        GaussianReparam,
    };

    // Differentiable leaf (a parameter); values must be finite.
    Id leaf(Shape shape, std::span<const double> values);
    // Non-differentiable leaf (an input); no gradient is propagated into it.
    Id constant(Shape shape, std::span<const double> values);
    Id constant_scalar(double value);

    Id add(Id a, Id b);
    Id sub(Id a, Id b);
    Id mul(Id a, Id b);  // elementwise
    Id matmul(Id a, Id b);
    Id sigmoid(Id a);
    Id tanh_(Id a);
    Id exp_(Id a);
    Id log_(Id a);
    Id softmax_log(Id a);  // vector -> vector of log-probabilities
    Id sum(Id a);          // -> scalar
    Id mean(Id a);         // -> scalar
    Id square(Id a);
    // w = mu + exp(0.5*log_var) * eps, with eps held fixed (a constant id).
    Id gaussian_reparam(Id mu, Id log_var, Id eps);
    // Same node with the caller supplying sigma = exp(0.5*log_var), already
    // computed once for the current log_var values (per-batch memoization).
    Id gaussian_reparam(Id mu, Id log_var, Id eps, std::span<const double> sigma);

    // Seeds d(loss)/d(loss) = 1 and accumulates adjoints into every node that
    // depends on a differentiable leaf.  loss must be scalar.
    void backward(Id loss);

    std::span<const double> value(Id id) const;
    std::span<const double> grad(Id id) const;  // valid after backward()
    Shape shape(Id id) const { return nodes_[static_cast<std::size_t>(id)].shape; }
    double scalar(Id id) const { return value(id)[0]; }

    std::size_t size() const { return nodes_.size(); }
    void reset();

private:
    struct Node {
        Op op;
        bool needs_grad;
        Shape shape;
        Id p0 = -1, p1 = -1, p2 = -1;
        std::size_t off;  // offset into the value/grad arenas
    };

    // Append-only double arena without value-initialization on growth; every
    // slot is written right after allocation, and reset() keeps capacity.
    class Arena {
    public:
        double* alloc(std::size_t n) {
            if (size_ + n > cap_) grow(size_ + n);
            double* p = data_.get() + size_;
            size_ += n;
            return p;
        }
        double* data() { return data_.get(); }
        const double* data() const { return data_.get(); }
        std::size_t size() const { return size_; }
        void clear() { size_ = 0; }

    private:
        void grow(std::size_t need);
        std::unique_ptr<double[]> data_;
        std::size_t size_ = 0;
        std::size_t cap_ = 0;
    };

    Id push(Op op, Shape shape, Id p0, Id p1 = -1, Id p2 = -1);
    double* val_ptr(Id id) { return values_.data() + nodes_[static_cast<std::size_t>(id)].off; }
    const double* val_ptr(Id id) const {
        return values_.data() + nodes_[static_cast<std::size_t>(id)].off;
    }
    double* grad_ptr(Id id) { return grads_.data() + nodes_[static_cast<std::size_t>(id)].off; }
    void check_same_shape(const char* op, Id a, Id b) const;

    std::vector<Node> nodes_;
    Arena values_;
    std::vector<double> grads_;
};

}  // namespace rrl
