#pragma once

// Point configurations: opposite one-sided cone triples in finite sets,
// and the separation constant that lets such triples pass from points to
// balls.

#include "conelab/core.hpp"
#include "conelab/geometry.hpp"
#include "conelab/random.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

namespace conelab {

struct ConeTriple {
    std::size_t apex = 0;      // x0
    std::size_t forward = 0;   // x1 in X+(x0, theta, alpha)
    std::size_t backward = 0;  // x2 in X+(x0, -theta, alpha)
    UnitVector theta;
    bool from_net = false;     // witness came from the fallback direction net
};

inline bool is_cone_triple(const std::vector<Point>& pts, const ConeTriple& t, double alpha)
{
    return in_one_sided_cone(pts[t.apex], t.theta, alpha, pts[t.forward]) &&
           in_one_sided_cone(pts[t.apex], -t.theta, alpha, pts[t.backward]);
}

// Searches ordered triples (x0; x1, x2). The bisector of (x1 - x0) and
// (x0 - x2) is tried first; it minimises the larger of the two cone
// angles, so a triple exists for (x0; x1, x2) iff it works up to
// rounding. A direction net is the fallback when `net` is given.
inline std::optional<ConeTriple> find_cone_triple(const std::vector<Point>& pts, double alpha,
                                                  const DirectionNet* net = nullptr)
{
    if (pts.size() < 3)
        throw ArgumentError("find_cone_triple: need at least 3 points");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ArgumentError("find_cone_triple: alpha must lie in (0, 1]");
    const int n = static_cast<int>(pts[0].size());
    for (const Point& p : pts)
        require_dimension(pts[0], p, "find_cone_triple");
    const std::size_t q = pts.size();
    for (std::size_t a = 0; a < q; ++a) {
        for (std::size_t f = 0; f < q; ++f) {
            if (f == a)
                continue;
            const Vec d1 = pts[f] - pts[a];
            const double n1 = d1.norm();
            if (n1 == 0.0)
                continue;
            for (std::size_t b = 0; b < q; ++b) {
                if (b == a || b == f)
                    continue;
                const Vec d2 = pts[b] - pts[a];
                const double n2 = d2.norm();
                if (n2 == 0.0)
                    continue;
                const Vec bis = d1 / n1 - d2 / n2;
                if (bis.norm() > 1e-300) {
                    ConeTriple t{a, f, b, UnitVector::normalized(bis), false};
                    if (is_cone_triple(pts, t, alpha))
                        return t;
                }
                if (net) {
                    if (net->directions.front().dimension() != n)
                        throw ArgumentError("find_cone_triple: net dimension mismatch");
                    for (const UnitVector& th : net->directions) {
                        ConeTriple t{a, f, b, th, true};
                        if (is_cone_triple(pts, t, alpha))
                            return t;
                    }
                }
            }
        }
    }
    return std::nullopt;
}

// Random and clustered candidate sets of `size` points; returns the first
// set without a cone triple (evidence that q(n, alpha) > size).
inline std::optional<std::vector<Point>> search_counterexample_set(int n, double alpha, int size, int trials,
                                                                   std::uint64_t seed)
{
    if (size < 3)
        throw ArgumentError("search_counterexample_set: size must be at least 3");
    if (n < 1 || n > kMaxDimension)
        throw ArgumentError("search_counterexample_set: dimension out of range");
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(trial));
        std::vector<Point> pts;
        pts.reserve(size);
        if (trial % 2 == 0 || n == 1) {
            for (int i = 0; i < size; ++i) {
                Vec p(n);
                for (int d = 0; d < n; ++d)
                    p[d] = uniform01(rng);
                pts.push_back(p);
            }
        } else {
            // Points spread on a sphere: every chord direction stays far
            // from its opposite at each vertex.
            const Vec centre = Vec::Zero(n);
            for (int i = 0; i < size; ++i)
                pts.push_back(centre + random_unit(n, rng));
        }
        if (!find_cone_triple(pts, alpha))
            return pts;
    }
    return std::nullopt;
}

struct SeparationConstant {
    double alpha = 0.0;
    double epsilon = 0.0;
    double t = 0.0;
    double beta0 = 0.0;  // (1 - alpha^2)^{1/2}
    bool angle_ok = false;        // (1 - (alpha/t)^2)^{1/2} >= 1 - epsilon
    bool positivity_ok = false;   // (1 - epsilon) t - 1 > 0
    bool combined_ok = false;     // (1-eps)/(1+1/t) - 1/(t+1) > beta0
    bool all_ok() const { return angle_ok && positivity_ok && combined_ok; }
};

inline SeparationConstant check_separation(double alpha, double t)
{
    SeparationConstant s;
    s.alpha = alpha;
    s.beta0 = std::sqrt((1.0 - alpha) * (1.0 + alpha));
    s.epsilon = (1.0 - s.beta0) / 2.0;
    s.t = t;
    const double ratio = alpha / t;
    s.angle_ok = std::sqrt((1.0 - ratio) * (1.0 + ratio)) >= 1.0 - s.epsilon;
    s.positivity_ok = (1.0 - s.epsilon) * t - 1.0 > 0.0;
    s.combined_ok = (1.0 - s.epsilon) / (1.0 + 1.0 / t) - 1.0 / (t + 1.0) > s.beta0;
    return s;
}

// Smallest admissible t (each constraint solved in closed form) plus a
// 1e-6 nudge for strictness.
inline SeparationConstant compute_t(double alpha)
{
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw DomainError("compute_t: alpha must lie in (0, 1]");
    const double beta0 = std::sqrt((1.0 - alpha) * (1.0 + alpha));
    if (!(beta0 < 1.0))
        throw DomainError("compute_t: alpha too small, t is unbounded");
    const double eps = (1.0 - beta0) / 2.0;
    const double t_combined = 2.0 * (1.0 + beta0) / (1.0 - beta0);
    const double one_minus = 1.0 - eps;
    const double t_angle = alpha / std::sqrt(1.0 - one_minus * one_minus);
    const double t_positive = 1.0 / one_minus;
    double t = std::max({t_combined, t_angle, t_positive, 1.0}) + 1e-6;
    SeparationConstant s = check_separation(alpha, t);
    for (int guard = 0; !s.all_ok() && guard < 64; ++guard) {
        t += 1e-6 * std::max(1.0, t);
        s = check_separation(alpha, t);
    }
    if (!s.all_ok())
        throw DomainError("compute_t: could not satisfy the separation constraints");
    return s;
}

struct InclusionCheck {
    std::size_t samples = 0;
    std::size_t violations = 0;
    bool holds() const { return violations == 0; }
};

// Samples x in B(x0, rx) and y in B(y0, ry) and counts y outside
// X+(x, theta, alpha). Requires B(x0, t rx) and B(y0, t ry) disjoint and
// y0 in X+(x0, theta, alpha / t).
inline InclusionCheck separated_inclusion_counts(const Point& x0, double rx, const Point& y0, double ry,
                                                 const UnitVector& theta, double alpha, double t, int samples,
                                                 std::uint64_t seed)
{
    require_dimension(x0, y0, "check_separated_inclusion");
    if (!(rx > 0.0 && ry > 0.0))
        throw ArgumentError("check_separated_inclusion: radii must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0) || !(t >= 1.0))
        throw ArgumentError("check_separated_inclusion: need alpha in (0,1] and t >= 1");
    if (!((y0 - x0).norm() > t * (rx + ry)))
        throw PreconditionError("check_separated_inclusion: B(x0, t*rx) and B(y0, t*ry) are not disjoint");
    if (!in_one_sided_cone(x0, theta, alpha / t, y0))
        throw PreconditionError("check_separated_inclusion: y0 is not in X+(x0, theta, alpha/t)");
    Rng rng = make_rng(seed);
    InclusionCheck out;
    for (int s = 0; s < samples; ++s) {
        const Vec x = random_in_ball(x0, rx, rng);
        const Vec y = random_in_ball(y0, ry, rng);
        ++out.samples;
        if (!in_one_sided_cone(x, theta, alpha, y))
            ++out.violations;
    }
    return out;
}

inline bool check_separated_inclusion(const Point& x0, double rx, const Point& y0, double ry, const UnitVector& theta,
                                      double alpha, double t, int samples, std::uint64_t seed)
{
    return separated_inclusion_counts(x0, rx, y0, ry, theta, alpha, t, samples, seed).holds();
}

// Random configuration satisfying the hypotheses above with separation
// factor t (slightly above the minimum), in dimension n.
struct SeparatedConfig {
    Point x0;
    double rx = 0.0;
    Point y0;
    double ry = 0.0;
    UnitVector theta;
};

inline SeparatedConfig random_separated_config(int n, double alpha, double t, Rng& rng)
{
    SeparatedConfig c{Point(), 0.0, Point(), 0.0, UnitVector(random_unit(n, rng))};
    c.rx = 0.1 + uniform01(rng);
    c.ry = 0.1 + uniform01(rng);
    c.x0 = gaussian_vec(n, rng);
    // Direction within angle asin(alpha/t) of theta, strictly inside.
    const double max_angle = std::asin(alpha / t) * 0.999;
    Vec dir = c.theta.coords();
    if (n > 1) {
        Vec perp = gaussian_vec(n, rng);
        perp -= perp.dot(dir) * dir;
        if (perp.norm() > 1e-12) {
            perp.normalize();
            const double ang = max_angle * uniform01(rng);
            dir = std::cos(ang) * dir + std::sin(ang) * perp;
        }
    }
    const double dist = t * (c.rx + c.ry) * (1.0 + 1e-3 + uniform01(rng));
    c.y0 = c.x0 + dist * dir;
    return c;
}

} // namespace conelab
