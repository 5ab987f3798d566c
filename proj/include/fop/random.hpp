#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace fop {

// All randomness flows through this engine with the helpers below.
// std::*_distribution is implementation-defined, so results would not be
// reproducible across standard libraries; these helpers are.
using Rng = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). Rejection sampling keeps the draw unbiased.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: empty range");
    const std::uint64_t bound = n;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw = rng();
    while (draw >= limit) draw = rng();
    return static_cast<std::size_t>(draw % bound);
}

// Index draw proportional to non-negative weights (not necessarily
// normalized). Walks the running sum against one uniform variate.
inline std::size_t categorical(Rng& rng, std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("categorical: negative weight");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("categorical: zero total weight");
    const double target = uniform01(rng) * total;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        cumulative += weights[i];
        if (target < cumulative) return i;
    }
    for (std::size_t i = weights.size(); i-- > 0;) {
        if (weights[i] > 0.0) return i;
    }
    return weights.size() - 1;
}

// Independent child stream; used to give each candidate generation its own
// rng so candidates can run concurrently yet reproducibly.
inline Rng spawn_child(Rng& rng) { return Rng(rng()); }

}  // namespace fop

