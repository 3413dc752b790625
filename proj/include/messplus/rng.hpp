#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace messplus {

/// SplitMix64: 64-bit state, one multiply-xorshift output per draw.
///
/// Distributions are implemented here rather than through <random> so that
/// sampled streams are identical across standard library implementations.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1) with 53 bits of precision.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Uniform integer in [lo, hi].
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) noexcept {
        const std::uint64_t span = hi - lo + 1;
        if (span == 0) {
            return next();
        }
        // Lemire's multiply-shift; bias is < 2^-64 * span, irrelevant here.
        const auto wide = static_cast<unsigned __int128>(next()) * span;
        return lo + static_cast<std::uint64_t>(wide >> 64);
    }

    /// Standard normal via Box-Muller (cosine branch only, no caching, so
    /// every call consumes exactly two uniforms).
    double normal() noexcept {
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Independent child stream; advances this generator by one draw.
    SplitMix64 split() noexcept { return SplitMix64(next() ^ 0x6a09e667f3bcc909ULL); }

    std::uint64_t state() const noexcept { return state_; }

private:
    std::uint64_t state_;
};

}  // namespace messplus
