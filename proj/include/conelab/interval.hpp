#pragma once

#include "conelab/core.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>

namespace conelab {

namespace detail {

struct IntervalAudit {
    std::atomic<std::uint64_t> created{0};
    std::atomic<std::uint64_t> inverted{0};
};

inline IntervalAudit& interval_audit_state()
{
    static IntervalAudit audit;
    return audit;
}

} // namespace detail

struct IntervalAuditSnapshot {
    std::uint64_t created = 0;
    std::uint64_t inverted = 0;
};

// Process-wide count of measure intervals produced and of those with lo > hi.
inline IntervalAuditSnapshot interval_audit()
{
    auto& a = detail::interval_audit_state();
    return {a.created.load(), a.inverted.load()};
}

// Certified enclosure [lo, hi] of a measure (or measure ratio) value.
struct MeasureInterval {
    double lo = 0.0;
    double hi = 1.0;
    int depth_used = 0;

    MeasureInterval() = default;

    MeasureInterval(double l, double h, int depth = 0) : lo(l), hi(h), depth_used(depth)
    {
        auto& a = detail::interval_audit_state();
        a.created.fetch_add(1, std::memory_order_relaxed);
        if (!(lo <= hi))
            a.inverted.fetch_add(1, std::memory_order_relaxed);
    }

    double width() const noexcept { return hi - lo; }
    double mid() const noexcept { return 0.5 * (lo + hi); }
    bool contains(double v, double slack = 0.0) const noexcept { return lo - slack <= v && v <= hi + slack; }

    // True when this interval lies inside `outer` (up to `slack`).
    bool nested_in(const MeasureInterval& outer, double slack = 1e-12) const noexcept
    {
        return lo >= outer.lo - slack && hi <= outer.hi + slack;
    }
};

// Enclosure of num/den for non-negative num <= den. A denominator interval
// touching zero yields hi = 1, since the numerator region lies in the ball.
inline MeasureInterval ratio_interval(const MeasureInterval& num, const MeasureInterval& den)
{
    if (!(den.hi > 0.0))
        throw DomainError("ratio_interval: denominator measure is zero");
    const double lo = std::clamp(num.lo / den.hi, 0.0, 1.0);
    double hi = den.lo > 0.0 ? std::min(1.0, num.hi / den.lo) : 1.0;
    hi = std::max(hi, lo);
    return MeasureInterval(lo, hi, std::max(num.depth_used, den.depth_used));
}

// Enclosure of min(a, b).
inline MeasureInterval min_interval(const MeasureInterval& a, const MeasureInterval& b)
{
    return MeasureInterval(std::min(a.lo, b.lo), std::min(a.hi, b.hi), std::max(a.depth_used, b.depth_used));
}

} // namespace conelab
