#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string_view>

namespace geoqrypt {

namespace detail {

// splitmix64 finalizer; full-avalanche mix of a 64-bit word.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace detail

// Deterministic PRNG (splitmix64 stream). Every stochastic routine in this
// library takes one of these explicitly; a single 64-bit seed pins down all
// outputs. Substreams are derived by hashing, not by advancing the parent,
// so derivation order never shifts results and per-index substreams make
// parallel loops schedule-independent.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), state_(detail::mix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0,1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer on [0, n). n == 0 is a caller bug; returns 0.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) return 0;
        // Rejection sampling kills the modulo bias; at most a few retries.
        std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller. Two uniforms per call, no cached spare,
    // so the draw count per call is fixed.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Circularly symmetric complex normal with E[|z|^2] = 1.
    std::complex<double> complex_normal() {
        constexpr double half = 0.70710678118654752440;
        return {half * normal(), half * normal()};
    }

    // Independent stream named after a module or phase.
    Rng substream(std::string_view name) const {
        return Rng(detail::mix64(seed_ ^ detail::fnv1a(name)));
    }

    // Independent stream for trial/grid index i; safe to hand out across threads.
    Rng substream(std::uint64_t index) const {
        return Rng(detail::mix64(seed_ ^ detail::mix64(index + 0x51'7C'C1'B7'27'22'0A'95ULL)));
    }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

} // namespace geoqrypt
