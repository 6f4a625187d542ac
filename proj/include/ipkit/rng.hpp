#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "ipkit/errors.hpp"

namespace ipkit {

/// Deterministic random source. std::mt19937_64 is fully specified by the
/// standard, and the variate mappings below avoid the distribution classes,
/// whose output is implementation-defined. Same seed, same sequence, on any
/// toolchain.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    /// Uniform integer in [lo, hi], rejection sampled (no modulo bias).
    std::uint64_t integer(std::uint64_t lo, std::uint64_t hi) {
        if (hi < lo) throw parameter_error("Rng::integer: hi < lo");
        const std::uint64_t span = hi - lo + 1;
        if (span == 0) return gen_(); // full 64-bit range
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t x = gen_();
        while (x >= limit) x = gen_();
        return lo + x % span;
    }

    /// Gaussian variate via Box-Muller. Draws two uniforms per call; no
    /// cached spare, so interleaved consumers stay reproducible.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

private:
    std::mt19937_64 gen_;
};

} // namespace ipkit
