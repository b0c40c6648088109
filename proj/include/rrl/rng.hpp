#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>

namespace rrl {

// Counter-based pseudo-random stream: the i-th output is a pure function of
// (key, i), so independent streams can be forked by key derivation and
// consumed from parallel workers without shared state.  The output function
// is the splitmix64 finalizer over key + i*golden_gamma.
namespace rngdetail {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
    return mix64(h ^ (v + kGamma + (h << 6) + (h >> 2)));
}

}  // namespace rngdetail

// Inverse of the standard normal CDF (Wichura's PPND16), |error| ~ 1e-15.
// Valid for p in (0,1).
double inverse_normal_cdf(double p);

class Stream {
public:
    Stream() = default;
    explicit Stream(std::uint64_t key) : key_(rngdetail::mix64(key ^ 0x5851f42d4c957f2dULL)) {}

    // Derives an independent stream keyed by this stream's key and a path of
    // ids (purpose tag, batch index, episode index, ...).  Does not consume
    // state from the parent.
    Stream fork(std::initializer_list<std::uint64_t> path) const {
        std::uint64_t h = key_;
        for (std::uint64_t v : path) h = rngdetail::combine(h, v);
        Stream s;
        s.key_ = h;
        return s;
    }

    std::uint64_t next_u64() { return rngdetail::mix64(key_ + (++ctr_) * rngdetail::kGamma); }

    // Uniform on the open interval (0,1).
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n).
    int uniform_int(int n) { return static_cast<int>(uniform01() * n); }

    double normal() { return inverse_normal_cdf(uniform01()); }
    double normal(double mean, double sd) { return mean + sd * normal(); }

    template <typename It>
    void shuffle(It first, It last) {
        auto n = last - first;
        for (auto i = n - 1; i > 0; --i) {
            auto j = uniform_int(static_cast<int>(i + 1));
            std::swap(first[i], first[j]);
        }
    }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return ctr_; }
    void advance(std::uint64_t n) { ctr_ += n; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t ctr_ = 0;
};

// Stream purposes, used as the first fork id so that e.g. task sampling and
// weight sampling never draw from the same sequence.
enum class Purpose : std::uint64_t {
    TaskSample = 1,
    WeightSample = 2,
    ActionSample = 3,
    RewardNoise = 4,
    FitMc = 5,
    Eval = 6,
    Simulate = 7,
    Bms = 8,
};

inline Stream fork(const Stream& root, Purpose p, std::uint64_t a = 0, std::uint64_t b = 0) {
    return root.fork({static_cast<std::uint64_t>(p), a, b});
}

// Fills `out` with standard normal draws (same sequence as repeated
// normal() calls).
void fill_normal(Stream& s, std::span<double> out);

// Order-independent content hash for artifact stamping (FNV-1a over bytes).
std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a_str(const char* s, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace rrl
