#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>

namespace ctxrace {

// std::mt19937_64 is fully specified by the standard, unlike the std
// distributions, so every draw below is built directly on raw engine output to
// keep episodes bit-identical across standard libraries.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ splitmix64(b + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0, 1) with 53 bits of resolution. One engine draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Fills `out` with N(0, sigma^2) samples using the Box-Muller transform.
/// Consumes exactly 2 * ceil(out.size() / 2) engine draws.
inline void fill_gaussian(Rng& rng, std::span<double> out, double sigma) {
    for (std::size_t i = 0; i < out.size(); i += 2) {
        const double u1 = 1.0 - uniform01(rng);  // (0, 1]
        const double u2 = uniform01(rng);
        const double r = std::sqrt(-2.0 * std::log(u1)) * sigma;
        const double theta = 2.0 * std::numbers::pi * u2;
        out[i] = r * std::cos(theta);
        if (i + 1 < out.size()) out[i + 1] = r * std::sin(theta);
    }
}

}  // namespace ctxrace
