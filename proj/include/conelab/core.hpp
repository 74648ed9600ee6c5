#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace conelab {

// Ambient dimensions are small; fixed max sizes keep vectors off the heap.
inline constexpr int kMaxDimension = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDimension, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDimension, kMaxDimension>;

struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct UnsupportedOperation : std::logic_error {
    using std::logic_error::logic_error;
};

// A stated hypothesis of an operation does not hold for the given input.
struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConstructionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when a requested computation would exceed a node or memory guard.
struct ResourceGuardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require_dimension(const Vec& a, const Vec& b, const char* what)
{
    if (a.size() != b.size())
        throw ArgumentError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()) + ")");
}

inline Vec make_vec(std::initializer_list<double> values)
{
    Vec v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values)
        v[i++] = x;
    return v;
}

// Angle between unit vectors, stable near 0 and pi.
inline double unit_angle(const Vec& u, const Vec& w)
{
    return 2.0 * std::atan2((u - w).norm(), (u + w).norm());
}

} // namespace conelab
