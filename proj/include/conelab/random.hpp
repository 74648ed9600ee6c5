#pragma once

#include "conelab/core.hpp"

#include <cstdint>
#include <random>

namespace conelab {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; derives independent per-task seeds from (seed, stream).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) { return Rng(mix_seed(seed, stream)); }

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline Vec gaussian_vec(int n, Rng& rng)
{
    std::normal_distribution<double> normal;
    Vec v(n);
    for (int i = 0; i < n; ++i)
        v[i] = normal(rng);
    return v;
}

inline Vec random_unit(int n, Rng& rng)
{
    for (;;) {
        Vec v = gaussian_vec(n, rng);
        double norm = v.norm();
        if (norm > 1e-9)
            return v / norm;
    }
}

// Uniform point in the closed ball B(center, radius).
inline Vec random_in_ball(const Vec& center, double radius, Rng& rng)
{
    const int n = static_cast<int>(center.size());
    Vec dir = random_unit(n, rng);
    double rho = radius * std::pow(uniform01(rng), 1.0 / n);
    return center + rho * dir;
}

} // namespace conelab
