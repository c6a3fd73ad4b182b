#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace acol {

// Deterministic random stream. Built on std::mt19937_64 (whose output sequence
// is fixed by the standard) with hand-rolled distributions, because the
// std::*_distribution classes are implementation-defined and would break the
// bit-reproducibility contract. Streams are derived from (seed, tag, index) so
// independent consumers never share state.
class RngStream {
public:
    explicit RngStream(uint64_t seed) : engine_(seed) {}

    static uint64_t mix(uint64_t seed, uint64_t tag, uint64_t index = 0) {
        uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1) + 0xbf58476d1ce4e5b9ULL * (index + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static RngStream derive(uint64_t seed, uint64_t tag, uint64_t index = 0) {
        return RngStream(mix(seed, tag, index));
    }

    uint64_t next_u64() { return engine_(); }

    /// Uniform in [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    int64_t uniform_int(int64_t n) {
        return static_cast<int64_t>(static_cast<uint64_t>(
            (static_cast<__uint128_t>(next_u64()) * static_cast<__uint128_t>(n)) >> 64));
    }

    /// Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

    template <typename V>
    void shuffle(std::vector<V>& v) {
        for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
            int64_t j = uniform_int(i + 1);
            std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
        }
    }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// Stream tags, one per independent consumer of randomness.
namespace rng_tag {
constexpr uint64_t dataset_train = 1;
constexpr uint64_t dataset_test = 2;
constexpr uint64_t weight_init = 3;
constexpr uint64_t shuffle = 4;
constexpr uint64_t gradcheck = 5;
constexpr uint64_t equivalence = 6;
constexpr uint64_t oracle = 7;
}  // namespace rng_tag

}  // namespace acol
