#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rrl {

// Dense row-major array of rank <= 2.  Vectors are (n, 1), scalars (1, 1).
struct Shape {
    int rows = 1;
    int cols = 1;

    int size() const { return rows * cols; }
    bool is_scalar() const { return rows == 1 && cols == 1; }
    bool operator==(const Shape&) const = default;

    std::string str() const {
        return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
    }
};

struct Array {
    Shape shape;
    std::vector<double> v;

    Array() = default;
    explicit Array(Shape s, double fill = 0.0) : shape(s), v(static_cast<std::size_t>(s.size()), fill) {}
    Array(Shape s, std::span<const double> values) : shape(s), v(values.begin(), values.end()) {
        if (static_cast<int>(v.size()) != s.size())
            throw std::invalid_argument("Array: " + std::to_string(v.size()) +
                                        " values for shape " + s.str());
    }

    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
    int size() const { return shape.size(); }
};

inline bool all_finite(std::span<const double> xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return false;
    return true;
}

// Dot product with eight independent accumulators.  The fixed reassociation
// order keeps results bit-reproducible while breaking the FMA latency chain
// that serializes the naive loop.
inline double dotp(const double* a, const double* b, int n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, s5 = 0, s6 = 0, s7 = 0;
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
        s4 += a[i + 4] * b[i + 4];
        s5 += a[i + 5] * b[i + 5];
        s6 += a[i + 6] * b[i + 6];
        s7 += a[i + 7] * b[i + 7];
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return (((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7))) + tail;
}

}  // namespace rrl
