#pragma once

// Independent reference computations for the test suites. Nothing here
// calls into the library's measure or density code.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

inline double binary_entropy(double q)
{
    return -(q * std::log2(q) + (1.0 - q) * std::log2(1.0 - q));
}

// Length of [c - r, c + r] ∩ [0, 1).
inline double unit_interval_overlap(double c, double r)
{
    return std::max(0.0, std::min(1.0, c + r) - std::max(0.0, c - r));
}

// Fraction of the disc B(0, 1) outside the open cone {y·e > a|y|},
// estimated by rejection sampling.
inline double disc_outside_cone_fraction(double a, int samples, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int in_disc = 0;
    int outside = 0;
    while (in_disc < samples) {
        const double x = u(rng);
        const double y = u(rng);
        const double norm = std::hypot(x, y);
        if (norm > 1.0)
            continue;
        ++in_disc;
        if (!(x > a * norm))
            ++outside;
    }
    return static_cast<double>(outside) / in_disc;
}

// max over unit v in the line at angle a of its distance to the line at angle b,
// by dense sampling of the unit circle.
inline double line_distance_by_sampling(double a, double b, int samples = 20000)
{
    double best = 0.0;
    for (int s = 0; s < samples; ++s) {
        const double phi = a + (s % 2 == 0 ? 0.0 : std::numbers::pi);
        const double vx = std::cos(phi);
        const double vy = std::sin(phi);
        const double wx = std::cos(b);
        const double wy = std::sin(b);
        const double dot = vx * wx + vy * wy;
        best = std::max(best, std::hypot(vx - dot * wx, vy - dot * wy));
    }
    return best;
}

// 1 / R_n where R_0 = 1 and R_n = R_{n-1} / (2 n^2).
inline boost::multiprecision::cpp_int inverse_rotating_radius(int n)
{
    boost::multiprecision::cpp_int v = 1;
    for (int j = 1; j <= n; ++j)
        v *= 2 * j * j;
    return v;
}

// Smallest N with (1 - a)^N < 1/2, by direct repeated multiplication.
inline long long halving_steps(double a)
{
    long double p = 1.0L;
    long long n = 0;
    while (p >= 0.5L) {
        p *= 1.0L - a;
        ++n;
    }
    return n;
}

// Weight rule of the strip/block measure at parameter i, before normalisation.
inline double block_weight(int i, int h)
{
    return std::pow(2.0 * i, -std::abs(h - i * i + 0.5));
}

} // namespace oracle
