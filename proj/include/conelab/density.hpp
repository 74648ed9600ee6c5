#pragma once

// Conical density ratios, profiles over dyadic scales, the two-sided
// one-sided-cone explorer, the ball-collection checker, the constant
// chain, and the six-interval scan on the line.

#include "conelab/configurations.hpp"
#include "conelab/core.hpp"
#include "conelab/geometry.hpp"
#include "conelab/homogeneity.hpp"
#include "conelab/interval.hpp"
#include "conelab/measure.hpp"
#include "conelab/region.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace conelab {

namespace detail {

inline void require_ratio_args(const MeasureTree& tree, const Point& x, double r, double alpha, const char* what)
{
    if (x.size() != tree.dimension())
        throw ArgumentError(std::string(what) + ": point dimension does not match the tree");
    if (!(r > 0.0))
        throw ArgumentError(std::string(what) + ": radius must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ArgumentError(std::string(what) + ": alpha must lie in (0, 1]");
}

inline RegionQuery cone_query(const Point& x, double r, const Subspace& v, double plane_alpha, const UnitVector& theta,
                              double half_alpha)
{
    RegionQuery q = RegionQuery::ball(x, r);
    if (!v.is_whole_space())
        q.with_plane_cone(v, plane_alpha);
    q.without_halfspace(theta, half_alpha);
    return q;
}

} // namespace detail

// mu(X(x,r,V,alpha) \ H(x,theta,alpha)) / mu(B(x,r)). `depth` counts
// levels below the scale of r.
inline MeasureInterval conical_ratio(const MeasureTree& tree, const Point& x, double r, const Subspace& v,
                                     const UnitVector& theta, double alpha, int depth)
{
    detail::require_ratio_args(tree, x, r, alpha, "conical_ratio");
    const int budget = budget_for(tree, r, depth);
    const MeasureInterval den = region_measure(tree, RegionQuery::ball(x, r), budget);
    const MeasureInterval num = region_measure(tree, detail::cone_query(x, r, v, alpha, theta, alpha), budget);
    return ratio_interval(num, den);
}

struct DeficiencyReport {
    MeasureInterval certified;  // net minimum at alpha/2: lower bound for the infimum over all directions
    MeasureInterval estimate;   // net minimum at alpha
    std::size_t certified_direction = 0;
    std::size_t estimate_direction = 0;
};

// mu(B(x,r) \ H(x,theta,alpha)) / mu(B(x,r)) minimised over the net.
inline DeficiencyReport halfspace_deficiency(const MeasureTree& tree, const Point& x, double r, double alpha,
                                             const DirectionNet& net, int depth)
{
    detail::require_ratio_args(tree, x, r, alpha, "halfspace_deficiency");
    if (net.directions.empty() || net.directions.front().dimension() != tree.dimension())
        throw ArgumentError("halfspace_deficiency: direction net does not match the tree dimension");
    const int budget = budget_for(tree, r, depth);
    const MeasureInterval den = region_measure(tree, RegionQuery::ball(x, r), budget);
    if (!(den.hi > 0.0))
        throw DomainError("halfspace_deficiency: mu(B(x,r)) is zero");
    DeficiencyReport rep;
    bool first = true;
    for (std::size_t i = 0; i < net.directions.size(); ++i) {
        const UnitVector& th = net.directions[i];
        const MeasureInterval half = ratio_interval(
            region_measure(tree, RegionQuery::ball(x, r).without_halfspace(th, alpha / 2.0), budget), den);
        const MeasureInterval full =
            ratio_interval(region_measure(tree, RegionQuery::ball(x, r).without_halfspace(th, alpha), budget), den);
        if (first || half.lo < rep.certified.lo)
            rep.certified_direction = i;
        if (first || full.lo < rep.estimate.lo)
            rep.estimate_direction = i;
        rep.certified = first ? half : min_interval(rep.certified, half);
        rep.estimate = first ? full : min_interval(rep.estimate, full);
        first = false;
    }
    return rep;
}

struct ConeMinimum {
    MeasureInterval ratio;
    std::size_t plane = 0;
    std::size_t direction = 0;
};

// Minimum over (V_j, theta_i) of the ratio with both cones at alpha/2,
// a lower bound for the infimum over all V and theta at alpha.
inline ConeMinimum worst_cone_cell(const MeasureTree& tree, const Point& x, double r, double alpha,
                                   const DirectionNet& dir_net, const SubspaceNet& sub_net, int depth)
{
    detail::require_ratio_args(tree, x, r, alpha, "worst_cone_ratio");
    if (dir_net.directions.empty() || sub_net.planes.empty())
        throw ArgumentError("worst_cone_ratio: empty net");
    if (dir_net.directions.front().dimension() != tree.dimension() || sub_net.planes.front().ambient() != tree.dimension())
        throw ArgumentError("worst_cone_ratio: net dimension does not match the tree");
    const int budget = budget_for(tree, r, depth);
    const MeasureInterval den = region_measure(tree, RegionQuery::ball(x, r), budget);
    if (!(den.hi > 0.0))
        throw DomainError("worst_cone_ratio: mu(B(x,r)) is zero");
    ConeMinimum best;
    bool first = true;
    const double half = alpha / 2.0;
    for (std::size_t j = 0; j < sub_net.planes.size(); ++j) {
        for (std::size_t i = 0; i < dir_net.directions.size(); ++i) {
            const MeasureInterval num = region_measure(
                tree, detail::cone_query(x, r, sub_net.planes[j], half, dir_net.directions[i], half), budget);
            const MeasureInterval cell = ratio_interval(num, den);
            if (first || cell.lo < best.ratio.lo) {
                best.plane = j;
                best.direction = i;
            }
            best.ratio = first ? cell : min_interval(best.ratio, cell);
            first = false;
        }
    }
    return best;
}

inline MeasureInterval worst_cone_ratio(const MeasureTree& tree, const Point& x, double r, double alpha,
                                        const DirectionNet& dir_net, const SubspaceNet& sub_net, int depth)
{
    return worst_cone_cell(tree, x, r, alpha, dir_net, sub_net, depth).ratio;
}

struct DensityProfile {
    Point x;
    double alpha = 0.0;
    double c = 0.0;
    std::vector<double> radii;
    std::vector<MeasureInterval> ratios;
    std::vector<double> running_sup;  // running supremum of ratio lower bounds

    // (1/l) #{j <= l : ratio_j.lo > c}
    double frequency(double threshold, std::size_t l) const
    {
        l = std::min(l, ratios.size());
        if (l == 0)
            return 0.0;
        std::size_t hits = 0;
        for (std::size_t j = 0; j < l; ++j)
            if (ratios[j].lo > threshold)
                ++hits;
        return static_cast<double>(hits) / static_cast<double>(l);
    }
    double frequency() const { return frequency(c, ratios.size()); }

    // First scale index (1-based) whose lower bound exceeds exp(log_c), or 0.
    std::size_t first_exceedance_log(double log_c) const
    {
        for (std::size_t j = 0; j < ratios.size(); ++j)
            if (ratios[j].lo > 0.0 && std::log(ratios[j].lo) > log_c)
                return j + 1;
        return 0;
    }
};

inline DensityProfile density_profile(const MeasureTree& tree, const Point& x, double alpha, double r0, int levels,
                                      const DirectionNet& dir_net, const SubspaceNet& sub_net, double c, int depth)
{
    if (levels < 1)
        throw ArgumentError("density_profile: levels must be positive");
    if (!(r0 > 0.0))
        throw ArgumentError("density_profile: r0 must be positive");
    DensityProfile prof;
    prof.x = x;
    prof.alpha = alpha;
    prof.c = c;
    double sup = 0.0;
    for (int j = 1; j <= levels; ++j) {
        const double r = std::ldexp(r0, -j);
        const MeasureInterval ratio = worst_cone_ratio(tree, x, r, alpha, dir_net, sub_net, depth);
        sup = std::max(sup, ratio.lo);
        prof.radii.push_back(r);
        prof.ratios.push_back(ratio);
        prof.running_sup.push_back(sup);
    }
    return prof;
}

struct TwoSidedResult {
    UnitVector direction;
    MeasureInterval ratio;  // min(mu(X+(x,r,z,alpha)), mu(X+(x,r,-z,alpha))) / mu(B(x,r))
};

// Best in-plane direction for the two-sided one-sided-cone quantity.
inline TwoSidedResult two_sided_min_ratio(const MeasureTree& tree, const Point& x, double r, const Subspace& v,
                                          double alpha, const std::vector<UnitVector>& dirs, int depth)
{
    detail::require_ratio_args(tree, x, r, alpha, "two_sided_min_ratio");
    if (dirs.empty())
        throw ArgumentError("two_sided_min_ratio: empty direction list");
    for (const UnitVector& d : dirs)
        if (d.dimension() != tree.dimension() || v.distance_to(d.coords()) > 1e-10)
            throw ArgumentError("two_sided_min_ratio: direction does not lie in V");
    const int budget = budget_for(tree, r, depth);
    const MeasureInterval den = region_measure(tree, RegionQuery::ball(x, r), budget);
    if (!(den.hi > 0.0))
        throw DomainError("two_sided_min_ratio: mu(B(x,r)) is zero");
    std::optional<TwoSidedResult> best;
    for (const UnitVector& d : dirs) {
        const MeasureInterval plus = region_measure(tree, RegionQuery::ball(x, r).with_one_sided_cone(d, alpha), budget);
        const MeasureInterval minus =
            region_measure(tree, RegionQuery::ball(x, r).with_one_sided_cone(-d, alpha), budget);
        const MeasureInterval ratio = ratio_interval(min_interval(plus, minus), den);
        if (!best || ratio.lo > best->ratio.lo || (ratio.lo == best->ratio.lo && ratio.hi > best->ratio.hi))
            best = TwoSidedResult{d, ratio};
    }
    return *best;
}

// Evenly spaced unit directions of V (a half-circle suffices for the
// symmetric quantity, but both signs are returned).
inline std::vector<UnitVector> in_plane_directions(const Subspace& v, int count)
{
    if (count < 1)
        throw ArgumentError("in_plane_directions: count must be positive");
    std::vector<UnitVector> out;
    const Mat& f = v.frame();
    if (f.cols() == 1) {
        out.emplace_back(UnitVector::normalized(f.col(0)));
        out.emplace_back(UnitVector::normalized(-f.col(0)));
        return out;
    }
    Rng rng = make_rng(0x7a, static_cast<std::uint64_t>(count));
    for (int i = 0; i < count; ++i) {
        Vec w(f.cols());
        if (f.cols() == 2) {
            const double a = 2.0 * std::numbers::pi * i / count;
            w << std::cos(a), std::sin(a);
        } else {
            w = random_unit(static_cast<int>(f.cols()), rng);
        }
        out.emplace_back(UnitVector::normalized(f * w));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Constant chain

struct ConstantsReport {
    int n = 0;
    int m = 0;
    double s = 0.0;
    double alpha = 0.0;
    SeparationConstant separation;  // t(alpha / 2)
    double t = 0.0;
    int q = 0;
    bool q_verified = false;
    std::size_t k_dir = 0;
    std::size_t k_sub = 0;
    double unit_ball_volume = 0.0;
    double m_lower = 0.0;  // vol(n)(4t+2)^n n^{n/2} 8^m K q
    boost::multiprecision::cpp_int big_m;
    double tau = 0.0;
    boost::multiprecision::cpp_int k;
    double log_k = 0.0;
    double log_c1 = 0.0;
    double c1 = 0.0;
    double eta = 0.0;
    double dimension_at_eta = 0.0;
    double dimension_margin = 0.0;  // s minus the bound, formed without cancellation
    double p = 0.0;
    double log_c2 = 0.0;  // c2 = k^{-2n/(1-p')} with p' = 1 - p/2
    double log_c = 0.0;   // c = c1 c2, usually far below the double range
    double c_deficiency = 0.0;

    struct Checks {
        bool dims = false;
        bool separation = false;
        bool m_bound = false;
        bool k_bound = false;
        bool eta_range = false;
        bool dimension = false;
        bool p_range = false;
        bool c_deficiency = false;
    } checks;

    double c() const { return std::exp(log_c); }
    double log10_c() const { return log_c / std::numbers::ln10; }
    bool all_ok() const
    {
        return checks.dims && checks.separation && checks.m_bound && checks.k_bound && checks.eta_range &&
               checks.dimension && checks.p_range && checks.c_deficiency;
    }
};

inline double unit_ball_volume(int n) { return std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0); }

namespace detail {

// Dimension bound with i = k^n - M k^m written so that the large
// cancellation k^n - i = M k^m is never formed.
inline long double chain_dimension_bound(long double log_k, int n, int m, long double big_m, long double eta)
{
    const long double kn = std::exp(n * log_k);
    const long double rest_count = big_m * std::exp(m * log_k);  // M k^m
    const long double i = kn - rest_count;
    const long double ie = i * eta;
    const long double rest = 1.0L - ie;
    const long double tail = rest > 0.0L ? rest * std::log(rest / rest_count) : 0.0L;
    return -(ie * std::log(eta) + tail) / log_k;
}

} // namespace detail

// q defaults to 3 when n - m = 1 (three points on a line always contain a
// triple); otherwise `q_override` is used and marked unverified.
inline ConstantsReport constants_chain(int n, int m, double s, double alpha, std::optional<int> q_override = std::nullopt,
                                       std::uint64_t seed = 0, int net_streak = 10000)
{
    using boost::multiprecision::cpp_int;
    if (n < 1 || n > kMaxDimension)
        throw DomainError("constants_chain: n out of range");
    if (m < 0 || m >= n)
        throw DomainError("constants_chain: m must lie in [0, n-1]");
    if (!(s > m && s <= n))
        throw DomainError("constants_chain: need m < s <= n");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw DomainError("constants_chain: alpha must lie in (0, 1]");
    ConstantsReport rep;
    rep.n = n;
    rep.m = m;
    rep.s = s;
    rep.alpha = alpha;
    rep.separation = compute_t(alpha / 2.0);
    rep.t = rep.separation.t;
    if (q_override) {
        if (*q_override < 3)
            throw DomainError("constants_chain: q must be at least 3");
        rep.q = *q_override;
        rep.q_verified = (n - m == 1 && *q_override >= 3);
    } else if (n - m == 1) {
        rep.q = 3;
        rep.q_verified = true;
    } else {
        rep.q = 3;
        rep.q_verified = false;
    }
    rep.k_dir = build_direction_net(n, alpha, seed, net_streak).size();
    rep.k_sub = build_subspace_net(n, m, alpha, seed, net_streak).size();
    rep.unit_ball_volume = unit_ball_volume(n);
    const long double m_lower = static_cast<long double>(rep.unit_ball_volume) * std::pow(4.0L * rep.t + 2.0L, n) *
                                std::pow(static_cast<long double>(n), n / 2.0L) * std::pow(8.0L, m) *
                                static_cast<long double>(rep.k_sub) * rep.q;
    rep.m_lower = static_cast<double>(m_lower);
    rep.big_m = cpp_int(std::ceil(m_lower));
    const long double big_m = static_cast<long double>(rep.big_m);
    rep.tau = 6.0 * std::sqrt(static_cast<double>(n));

    // Smallest integer k > max(M^{1/(s-m)}, 3), in extended precision so
    // that k - root is resolved even for k far beyond 2^64.
    using Wide = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<200>>;
    const Wide wide_root = boost::multiprecision::pow(Wide(rep.big_m), Wide(1) / (Wide(s) - m));
    if (wide_root > Wide("1e150"))
        throw DomainError("constants_chain: k exceeds the supported range");
    const Wide wide_k = wide_root < 3 ? Wide(4) : Wide(boost::multiprecision::floor(wide_root) + 1);
    rep.k = cpp_int(wide_k);
    const long double root = static_cast<long double>(wide_root);
    const long double k_minus_root = static_cast<long double>(wide_k - wide_root);
    const long double kk = static_cast<long double>(rep.k);
    const long double log_k = std::log(kk);
    rep.log_k = static_cast<double>(log_k);

    // Slack of the dimension bound at eta = 0, (s - m) - log M / log k,
    // formed as (s - m) log(k / root) / log k to avoid cancellation.
    const long double slack0 = (s - m) * std::log1p(k_minus_root / root) / log_k;
    const long double log_rest = std::log(big_m) + m * log_k;  // log(M k^m)
    // Growth of the bound from eta = 0 to eta, also cancellation free.
    auto excess_at = [&](long double log_eta) {
        const long double kn = std::exp(n * log_k);
        const long double i = kn - std::exp(log_rest);
        const long double ie = i * std::exp(log_eta);
        return (-ie * (log_eta + log_rest) - (1.0L - ie) * std::log1p(-ie)) / log_k;
    };

    const long double spread = std::pow(3.0L * std::sqrt(static_cast<long double>(n)) * rep.tau + 2.0L, n);
    const long double log_eta_max = -n * log_k;
    // The excess is increasing in eta on (0, k^-n): bisection in log eta.
    long double lo = log_eta_max - 4000.0L;
    long double hi = log_eta_max;
    if (excess_at(hi) < slack0) {
        lo = hi - 1e-9L;
    } else {
        for (int it = 0; it < 300; ++it) {
            const long double mid = 0.5L * (lo + hi);
            if (excess_at(mid) < slack0)
                lo = mid;
            else
                hi = mid;
        }
    }
    // Largest admissible c1, shrunk by 1%; shrink further until re-verified.
    long double log_c1 = lo - std::log(3.0L * spread) + std::log(0.99L);
    auto margin_at = [&](long double lc1) { return slack0 - excess_at(std::log(3.0L * spread) + lc1); };
    for (int guard = 0; guard < 200 && !(margin_at(log_c1) > 0.0L); ++guard)
        log_c1 += std::log(0.5L);
    rep.log_c1 = static_cast<double>(log_c1);
    rep.c1 = static_cast<double>(std::exp(log_c1));
    const long double log_eta = std::log(3.0L * spread) + log_c1;
    const long double eta = std::exp(log_eta);
    rep.eta = static_cast<double>(eta);
    const long double margin = margin_at(log_c1);
    rep.dimension_margin = static_cast<double>(margin);
    rep.dimension_at_eta = static_cast<double>(s - margin);
    const long double p = std::exp(log_c1) * spread;
    rep.p = static_cast<double>(p);
    // doubling constant k^{-2n/(1-p')} at p' = 1 - p/2
    rep.log_c2 = static_cast<double>(-2.0L * n / (p / 2.0L) * log_k);
    rep.log_c = rep.log_c1 + rep.log_c2;
    rep.c_deficiency = 1.0 / (9.0 * std::pow(3.0, 2 * n) * static_cast<double>(rep.k_dir));

    // Re-verification.
    auto& ck = rep.checks;
    ck.dims = m < s && s <= n;
    ck.separation = rep.separation.all_ok() && rep.t >= 1.0;
    ck.m_bound = static_cast<long double>(rep.big_m) >= m_lower;
    ck.k_bound = rep.k > 3 && k_minus_root > 0.0L && slack0 > 0.0L;
    ck.eta_range = eta > 0.0L && log_eta < log_eta_max;
    ck.dimension = margin > 0.0L;
    ck.p_range = p > 0.0L && p < 1.0L && std::isfinite(rep.log_c2);
    ck.c_deficiency = rep.c_deficiency > 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Ball collections

struct BallCollectionParams {
    double t = 1.0;
    int q = 3;
    std::size_t k = 1;       // number of net planes K
    double log_c = 0.0;      // log of the mass constant c

    static BallCollectionParams from(const ConstantsReport& rep)
    {
        return BallCollectionParams{rep.t, rep.q, rep.k_sub, rep.log_c};
    }
};

struct PlaneEvidence {
    std::size_t max_hits = 0;  // most balls met by one translate of the plane
};

struct BallCollectionReport {
    bool disjoint_ok = false;    // {2tB} pairwise disjoint
    bool mass_ok = false;        // mu(B).lo > c mu(B(x,3r)).hi for every ball
    bool transversal_ok = false; // pigeonhole forces q balls on a translate of every net plane
    bool inside_ok = false;      // every ball lies in B(x, r)
    std::size_t count = 0;
    std::size_t covering_count = 0;  // balls of the smallest radius covering proj_{V^perp} B(x,r)
    std::size_t required_subcollection = 0;
    std::vector<PlaneEvidence> planes;
    double min_log_mass_ratio = 0.0;
    bool all_ok() const { return disjoint_ok && mass_ok && transversal_ok && inside_ok; }
};

inline BallCollectionReport check_ball_collection(const MeasureTree& tree, const Point& x, double r,
                                                  const BallCollectionParams& params,
                                                  const std::vector<std::pair<Point, double>>& balls,
                                                  const SubspaceNet& sub_net, int depth)
{
    if (!(r > 0.0))
        throw ArgumentError("check_ball_collection: radius must be positive");
    if (sub_net.planes.empty())
        throw ArgumentError("check_ball_collection: empty subspace net");
    BallCollectionReport rep;
    rep.count = balls.size();
    if (balls.empty())
        return rep;

    rep.inside_ok = true;
    double rho = std::numeric_limits<double>::infinity();
    for (const auto& [c, rb] : balls) {
        require_dimension(x, c, "check_ball_collection");
        if (!(rb > 0.0))
            throw ArgumentError("check_ball_collection: ball radii must be positive");
        if ((c - x).norm() + rb > r * (1.0 + 1e-12))
            rep.inside_ok = false;
        rho = std::min(rho, rb);
    }

    rep.disjoint_ok = true;
    for (std::size_t a = 0; a < balls.size() && rep.disjoint_ok; ++a)
        for (std::size_t b = a + 1; b < balls.size(); ++b)
            if (!((balls[a].first - balls[b].first).norm() > 2.0 * params.t * (balls[a].second + balls[b].second))) {
                rep.disjoint_ok = false;
                break;
            }

    const MeasureInterval big = region_measure(tree, RegionQuery::ball(x, 3.0 * r), budget_for(tree, 3.0 * r, depth));
    rep.mass_ok = true;
    rep.min_log_mass_ratio = std::numeric_limits<double>::infinity();
    for (const auto& [c, rb] : balls) {
        const MeasureInterval mb = region_measure(tree, RegionQuery::ball(c, rb), budget_for(tree, rb, depth));
        const double lr = mb.lo > 0.0 ? std::log(mb.lo) - std::log(big.hi) : -std::numeric_limits<double>::infinity();
        rep.min_log_mass_ratio = std::min(rep.min_log_mass_ratio, lr);
        if (!(lr > params.log_c))
            rep.mass_ok = false;
    }

    // Pigeonhole: a sub-collection of ceil(#B / K) balls has projected
    // centres in an m-ball of radius r covered by N balls of radius rho;
    // a translate of V through one cover centre meets every ball whose
    // projected centre lies in that cover ball.
    const int m = sub_net.planes.front().codim();
    std::size_t cover = 1;
    if (m > 0) {
        const double per_axis = std::ceil(r * std::sqrt(static_cast<double>(m)) / rho);
        cover = static_cast<std::size_t>(std::pow(per_axis, m));
    }
    rep.covering_count = cover;
    const std::size_t sub = (balls.size() + params.k - 1) / params.k;
    rep.required_subcollection = sub;
    rep.transversal_ok = (sub + cover - 1) / cover >= static_cast<std::size_t>(params.q);

    // Evidence: the most balls one translate of each net plane meets.
    for (const Subspace& v : sub_net.planes) {
        PlaneEvidence ev;
        if (m == 0) {
            ev.max_hits = balls.size();
        } else if (m == 1) {
            const Mat comp = v.complement_frame();
            std::vector<std::pair<double, int>> events;
            for (const auto& [c, rb] : balls) {
                const double u = comp.col(0).dot(c);
                events.emplace_back(u - rb, +1);
                events.emplace_back(u + rb, -1);
            }
            std::sort(events.begin(), events.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first || (a.first == b.first && a.second > b.second); });
            long long cur = 0;
            long long best = 0;
            for (const auto& e : events) {
                cur += e.second;
                best = std::max(best, cur);
            }
            ev.max_hits = static_cast<std::size_t>(best);
        } else {
            // Higher codimension: translates through each projected centre.
            const Mat comp = v.complement_frame();
            for (const auto& [c, rb] : balls) {
                const Vec z = comp.transpose() * c;
                std::size_t hits = 0;
                for (const auto& [c2, rb2] : balls)
                    if ((comp.transpose() * c2 - z).norm() <= rb2)
                        ++hits;
                ev.max_hits = std::max(ev.max_hits, hits);
            }
        }
        rep.planes.push_back(ev);
    }
    return rep;
}

// Balls B(y, rho) at the points of a square grid with spacing `spacing`
// (centred at x) that fit inside B(x, r).
inline std::vector<std::pair<Point, double>> grid_balls(const Point& x, double r, double rho, double spacing)
{
    if (!(rho > 0.0 && spacing > 0.0 && r > rho))
        throw ArgumentError("grid_balls: need 0 < rho < r and positive spacing");
    const int n = static_cast<int>(x.size());
    const long long half = static_cast<long long>(std::floor((r - rho) / spacing));
    const long long side = 2 * half + 1;
    long long total = 1;
    for (int d = 0; d < n; ++d) {
        total *= side;
        if (total > 50'000'000)
            throw ResourceGuardError("grid_balls: grid too large");
    }
    std::vector<std::pair<Point, double>> out;
    std::vector<long long> idx(n, -half);
    for (long long cnt = 0; cnt < total; ++cnt) {
        Vec c = x;
        for (int d = 0; d < n; ++d)
            c[d] += spacing * static_cast<double>(idx[d]);
        if ((c - x).norm() + rho <= r)
            out.emplace_back(c, rho);
        for (int d = 0; d < n; ++d) {
            if (++idx[d] <= half)
                break;
            idx[d] = -half;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Separated intervals on the line

struct SixIntervalResult {
    double value = 0.0;        // best min mass / mu((x-3r, x+3r)).hi
    double best_min_mass = 0.0;
    double outer_hi = 0.0;
    std::size_t candidates = 0;
    std::vector<std::pair<double, double>> chosen;  // [a, b) of the selected intervals
};

// Best `count` k-adic intervals of level l_r + depth (l_r the scale of r)
// inside (x-r, x+r) whose `separation` dilates are pairwise disjoint,
// maximising the smallest mass. For a mass threshold, feasibility is
// interval scheduling on the dilates, which is exact.
inline SixIntervalResult six_interval_search(const MeasureTree& tree, const Point& x, double r, int count = 6,
                                            double separation = 3.0, int depth = 6)
{
    if (tree.dimension() != 1)
        throw UnsupportedOperation("six_interval_constant: requires a one-dimensional tree");
    detail::require_cube_tree(tree, "six_interval_constant");
    if (count < 2)
        throw ArgumentError("six_interval_constant: count must be at least 2");
    if (!(separation >= 1.0))
        throw ArgumentError("six_interval_constant: separation must be at least 1");
    if (!(r > 0.0))
        throw ArgumentError("six_interval_constant: radius must be positive");
    if (x.size() != 1)
        throw ArgumentError("six_interval_constant: point must be one-dimensional");
    if (depth < 0)
        throw ArgumentError("six_interval_constant: depth must be non-negative");

    const double a = x[0] - r;
    const double b = x[0] + r;
    const int level = budget_for(tree, r, depth);
    struct Cand {
        double lo, hi, mass;
    };
    std::vector<Cand> cands;
    auto visit = [&](auto&& self, const Node& node) -> void {
        const Box& bx = std::get<Box>(node.region);
        if (bx.hi[0] <= a || bx.lo[0] >= b || !(node.mass > 0.0))
            return;
        if (node.level == level) {
            if (bx.lo[0] > a && bx.hi[0] <= b)
                cands.push_back({bx.lo[0], bx.hi[0], node.mass});
            return;
        }
        for (const Node& c : tree.children(node))
            self(self, c);
    };
    visit(visit, tree.root());

    SixIntervalResult res;
    res.candidates = cands.size();
    const MeasureInterval outer =
        region_measure(tree, RegionQuery::ball(x, 3.0 * r), level + 2);
    res.outer_hi = outer.hi;
    if (cands.empty() || !(outer.hi > 0.0))
        return res;

    // Dilates sorted by right end for the greedy schedule.
    std::vector<std::size_t> by_end(cands.size());
    std::iota(by_end.begin(), by_end.end(), std::size_t{0});
    auto dil_lo = [&](const Cand& c) { return 0.5 * (c.lo + c.hi) - 0.5 * separation * (c.hi - c.lo); };
    auto dil_hi = [&](const Cand& c) { return 0.5 * (c.lo + c.hi) + 0.5 * separation * (c.hi - c.lo); };
    std::sort(by_end.begin(), by_end.end(), [&](std::size_t p, std::size_t q) {
        const double ep = dil_hi(cands[p]);
        const double eq = dil_hi(cands[q]);
        return ep < eq || (ep == eq && p < q);
    });
    auto schedule = [&](double threshold, std::vector<std::size_t>* pick) {
        int got = 0;
        double end = -std::numeric_limits<double>::infinity();
        for (std::size_t id : by_end) {
            const Cand& c = cands[id];
            if (c.mass < threshold)
                continue;
            if (dil_lo(c) >= end) {
                ++got;
                end = dil_hi(c);
                if (pick)
                    pick->push_back(id);
                if (got >= count)
                    return true;
            }
        }
        return false;
    };

    std::vector<double> masses;
    for (const Cand& c : cands)
        masses.push_back(c.mass);
    std::sort(masses.begin(), masses.end());
    masses.erase(std::unique(masses.begin(), masses.end()), masses.end());
    // Largest feasible threshold among the candidate masses.
    std::ptrdiff_t lo = -1;
    std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(masses.size());
    while (hi - lo > 1) {
        const std::ptrdiff_t mid = (lo + hi) / 2;
        if (schedule(masses[mid], nullptr))
            lo = mid;
        else
            hi = mid;
    }
    if (lo < 0)
        return res;
    std::vector<std::size_t> pick;
    schedule(masses[lo], &pick);
    res.best_min_mass = masses[lo];
    res.value = masses[lo] / outer.hi;
    for (std::size_t id : pick)
        res.chosen.emplace_back(cands[id].lo, cands[id].hi);
    return res;
}

inline double six_interval_constant(const MeasureTree& tree, const Point& x, double r, int count = 6,
                                    double separation = 3.0, int depth = 6)
{
    return six_interval_search(tree, x, r, count, separation, depth).value;
}

} // namespace conelab
