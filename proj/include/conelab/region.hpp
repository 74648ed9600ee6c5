#pragma once

// Node regions (boxes and balls) and query regions of the form
//   base ∩ X(x, V, a) ∩ X+(x, theta, a) \ H(x, theta', a')
// where the base is a closed ball centred at the cone apex x (or a box
// when no cone part is present), together with the conservative
// inside / outside / undecided classification used by measure queries.

#include "conelab/core.hpp"
#include "conelab/geometry.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <variant>

namespace conelab {

// Axis-aligned box. Cube-tree cells are half-open [lo, hi) in every
// coordinate; other boxes are closed.
struct Box {
    Vec lo;
    Vec hi;
    bool half_open = true;

    Vec center() const { return 0.5 * (lo + hi); }
    double half_diagonal() const { return 0.5 * (hi - lo).norm(); }
    double diameter() const { return (hi - lo).norm(); }

    bool contains(const Vec& y) const
    {
        for (Eigen::Index i = 0; i < lo.size(); ++i) {
            if (y[i] < lo[i])
                return false;
            if (half_open ? y[i] >= hi[i] : y[i] > hi[i])
                return false;
        }
        return true;
    }

    // Euclidean distance from y to the closure of the box.
    double distance_to(const Vec& y) const
    {
        double s = 0.0;
        for (Eigen::Index i = 0; i < lo.size(); ++i) {
            const double d = y[i] < lo[i] ? lo[i] - y[i] : (y[i] > hi[i] ? y[i] - hi[i] : 0.0);
            s += d * d;
        }
        return std::sqrt(s);
    }

    double farthest_sq(const Vec& y) const
    {
        double s = 0.0;
        for (Eigen::Index i = 0; i < lo.size(); ++i) {
            const double d = std::max(std::abs(y[i] - lo[i]), std::abs(hi[i] - y[i]));
            s += d * d;
        }
        return s;
    }
};

// Closed ball; radius 0 denotes a single point (an atom).
struct Ball {
    Vec center;
    double radius = 0.0;

    double diameter() const { return 2.0 * radius; }
    bool contains(const Vec& y) const { return (y - center).norm() <= radius; }
};

using Region = std::variant<Box, Ball>;

inline Vec region_center(const Region& r)
{
    return std::visit([](const auto& g) -> Vec {
        if constexpr (std::is_same_v<std::decay_t<decltype(g)>, Box>)
            return g.center();
        else
            return g.center;
    }, r);
}

inline double region_diameter(const Region& r)
{
    return std::visit([](const auto& g) { return g.diameter(); }, r);
}

inline int region_dimension(const Region& r)
{
    return static_cast<int>(region_center(r).size());
}

inline bool region_contains(const Region& r, const Vec& y)
{
    return std::visit([&](const auto& g) { return g.contains(y); }, r);
}

struct PlaneConePart {
    Subspace plane;
    double alpha = 1.0;
};

struct DirectionConePart {
    UnitVector axis;
    double alpha = 0.0;
};

struct RegionQuery {
    std::variant<Ball, Box> base;
    std::optional<PlaneConePart> plane_cone;          // ∩ X(x, V, alpha)
    std::optional<DirectionConePart> one_sided_cone;  // ∩ X+(x, theta, alpha)
    std::optional<DirectionConePart> excluded_half;   // \ H(x, theta, alpha)

    static RegionQuery ball(const Point& x, double r)
    {
        if (!(r > 0.0))
            throw ArgumentError("RegionQuery: radius must be positive");
        return RegionQuery{Ball{x, r}, std::nullopt, std::nullopt, std::nullopt};
    }

    static RegionQuery box(const Box& b) { return RegionQuery{b, std::nullopt, std::nullopt, std::nullopt}; }

    RegionQuery& with_plane_cone(const Subspace& v, double alpha)
    {
        if (!(alpha > 0.0 && alpha <= 1.0))
            throw ArgumentError("RegionQuery: plane-cone alpha must lie in (0, 1]");
        plane_cone = PlaneConePart{v, alpha};
        return *this;
    }

    RegionQuery& with_one_sided_cone(const UnitVector& theta, double alpha)
    {
        if (!(alpha > 0.0 && alpha <= 1.0))
            throw ArgumentError("RegionQuery: one-sided cone alpha must lie in (0, 1]");
        one_sided_cone = DirectionConePart{theta, alpha};
        return *this;
    }

    RegionQuery& without_halfspace(const UnitVector& theta, double alpha)
    {
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw ArgumentError("RegionQuery: half-space alpha must lie in [0, 1]");
        excluded_half = DirectionConePart{theta, alpha};
        return *this;
    }

    bool has_cones() const { return plane_cone || one_sided_cone || excluded_half; }

    const Ball* base_ball() const { return std::get_if<Ball>(&base); }
    const Box* base_box() const { return std::get_if<Box>(&base); }

    int dimension() const
    {
        if (const Ball* b = base_ball())
            return static_cast<int>(b->center.size());
        return static_cast<int>(std::get<Box>(base).lo.size());
    }

    // Exact pointwise membership using the cone predicates.
    bool contains(const Point& y) const
    {
        if (const Ball* b = base_ball()) {
            if (!b->contains(y))
                return false;
            const Point& x = b->center;
            if (plane_cone && !in_plane_cone(x, plane_cone->plane, plane_cone->alpha, y))
                return false;
            if (one_sided_cone && !in_one_sided_cone(x, one_sided_cone->axis, one_sided_cone->alpha, y))
                return false;
            if (excluded_half && in_almost_halfspace(x, excluded_half->axis, excluded_half->alpha, y))
                return false;
            return true;
        }
        return std::get<Box>(base).contains(y);
    }
};

enum class Relation { inside, outside, undecided };

namespace detail {

// Angular slack added on both sides of every cone test.
inline constexpr double kAngleMargin = 1e-12;

inline Relation interval_relation(double a, double b, bool node_open, double lo, double hi, bool query_open)
{
    const bool inside = a >= lo && (b < hi || (b == hi && (!query_open || node_open)));
    if (inside)
        return Relation::inside;
    const bool outside = b < lo || (b == lo && node_open) || a > hi || (a == hi && query_open);
    return outside ? Relation::outside : Relation::undecided;
}

} // namespace detail

// Pre-processed query used by the traversal.
class CompiledQuery {
public:
    explicit CompiledQuery(const RegionQuery& q) : query_(q)
    {
        if (q.has_cones() && !q.base_ball())
            throw ArgumentError("RegionQuery: cone parts require a ball base centred at the apex");
        const int n = q.dimension();
        if (q.plane_cone) {
            if (q.plane_cone->plane.ambient() != n)
                throw ArgumentError("RegionQuery: plane dimension mismatch");
            plane_threshold_ = std::asin(q.plane_cone->alpha);
        }
        if (q.one_sided_cone) {
            if (q.one_sided_cone->axis.dimension() != n)
                throw ArgumentError("RegionQuery: cone axis dimension mismatch");
            one_sided_threshold_ = std::asin(q.one_sided_cone->alpha);
        }
        if (q.excluded_half) {
            if (q.excluded_half->axis.dimension() != n)
                throw ArgumentError("RegionQuery: half-space axis dimension mismatch");
            half_threshold_ = std::acos(q.excluded_half->alpha);
        }
        if (const Ball* b = q.base_ball())
            r_sq_ = b->radius * b->radius;
    }

    const RegionQuery& query() const { return query_; }

    Relation classify(const Region& region) const
    {
        const Relation base = classify_base(region);
        if (base == Relation::outside || !query_.has_cones())
            return base;
        bool all_inside = base == Relation::inside;

        const Vec& apex = query_.base_ball()->center;
        Vec c;
        double rho;
        if (const Box* b = std::get_if<Box>(&region)) {
            c = b->center();
            rho = b->half_diagonal();
        } else {
            const Ball& ball = std::get<Ball>(region);
            c = ball.center;
            rho = ball.radius;
        }
        const Vec offset = c - apex;
        const double d = offset.norm();

        if (rho == 0.0 && d == 0.0) {
            // The region is the apex itself: outside every open cone.
            if (query_.plane_cone || query_.one_sided_cone)
                return Relation::outside;
            return all_inside ? Relation::inside : Relation::undecided;
        }
        if (!(d > rho))
            return Relation::undecided;

        const Vec u = offset / d;
        const double delta = std::asin(std::min(1.0, rho / d)) + detail::kAngleMargin;

        auto cap_relation = [&](double angle, double threshold) {
            if (angle + delta < threshold)
                return Relation::inside;
            if (angle - delta >= threshold)
                return Relation::outside;
            return Relation::undecided;
        };

        if (query_.plane_cone) {
            const Subspace& v = query_.plane_cone->plane;
            if (!v.is_whole_space()) {
                const Vec p = v.project(u);
                const double angle = std::atan2((u - p).norm(), p.norm());
                const Relation rel = cap_relation(angle, plane_threshold_);
                if (rel == Relation::outside)
                    return Relation::outside;
                all_inside = all_inside && rel == Relation::inside;
            }
        }
        if (query_.one_sided_cone) {
            const double angle = unit_angle(u, query_.one_sided_cone->axis.coords());
            const Relation rel = cap_relation(angle, one_sided_threshold_);
            if (rel == Relation::outside)
                return Relation::outside;
            all_inside = all_inside && rel == Relation::inside;
        }
        if (query_.excluded_half) {
            const double angle = unit_angle(u, query_.excluded_half->axis.coords());
            const Relation rel = cap_relation(angle, half_threshold_);
            if (rel == Relation::inside)
                return Relation::outside;
            all_inside = all_inside && rel == Relation::outside;
        }
        return all_inside ? Relation::inside : Relation::undecided;
    }

private:
    Relation classify_base(const Region& region) const
    {
        if (const Ball* q = query_.base_ball()) {
            const Vec& x = q->center;
            if (const Box* b = std::get_if<Box>(&region)) {
                if (b->farthest_sq(x) <= r_sq_)
                    return Relation::inside;
                if (b->distance_to(x) > q->radius)
                    return Relation::outside;
                return Relation::undecided;
            }
            const Ball& ball = std::get<Ball>(region);
            const double d = (ball.center - x).norm();
            if (ball.radius == 0.0 ? (ball.center - x).squaredNorm() <= r_sq_ : d + ball.radius <= q->radius)
                return Relation::inside;
            if (d - ball.radius > q->radius)
                return Relation::outside;
            return Relation::undecided;
        }
        const Box& qb = std::get<Box>(query_.base);
        if (const Box* b = std::get_if<Box>(&region)) {
            bool all_inside = true;
            for (Eigen::Index i = 0; i < qb.lo.size(); ++i) {
                const Relation rel =
                    detail::interval_relation(b->lo[i], b->hi[i], b->half_open, qb.lo[i], qb.hi[i], qb.half_open);
                if (rel == Relation::outside)
                    return Relation::outside;
                all_inside = all_inside && rel == Relation::inside;
            }
            return all_inside ? Relation::inside : Relation::undecided;
        }
        const Ball& ball = std::get<Ball>(region);
        bool all_inside = true;
        for (Eigen::Index i = 0; i < qb.lo.size(); ++i) {
            const Relation rel = detail::interval_relation(ball.center[i] - ball.radius, ball.center[i] + ball.radius,
                                                           false, qb.lo[i], qb.hi[i], qb.half_open);
            if (rel == Relation::outside)
                return Relation::outside;
            all_inside = all_inside && rel == Relation::inside;
        }
        if (all_inside)
            return Relation::inside;
        return qb.distance_to(ball.center) > ball.radius ? Relation::outside : Relation::undecided;
    }

    RegionQuery query_;
    double r_sq_ = 0.0;
    double plane_threshold_ = 0.0;
    double one_sided_threshold_ = 0.0;
    double half_threshold_ = 0.0;
};

} // namespace conelab
