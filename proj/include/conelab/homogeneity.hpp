#pragma once

// Measure-ascending enumeration of k-adic children, average homogeneity,
// the dimension bound it implies, and doubling / large-child statistics.

#include "conelab/core.hpp"
#include "conelab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace conelab {

struct OrderedFan {
    std::vector<Node> children;         // ascending mass, ties by lower corner
    std::vector<std::size_t> order;     // order[r] = raw child index of rank r
};

namespace detail {

inline bool corner_less(const Node& a, const Node& b)
{
    const Box& x = std::get<Box>(a.region);
    const Box& y = std::get<Box>(b.region);
    for (Eigen::Index d = 0; d < x.lo.size(); ++d)
        if (x.lo[d] != y.lo[d])
            return x.lo[d] < y.lo[d];
    return false;
}

inline void sort_fan(const std::vector<Node>& raw, std::vector<std::size_t>& order)
{
    order.resize(raw.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (raw[a].mass != raw[b].mass)
            return raw[a].mass < raw[b].mass;
        return corner_less(raw[a], raw[b]);
    });
}

inline void require_cube_tree(const MeasureTree& tree, const char* what)
{
    if (!tree.generator().is_cube_tree())
        throw UnsupportedOperation(std::string(what) + ": requires a k-adic cube tree");
}

// Neumaier compensated sum.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v)
    {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            carry += (sum - t) + v;
        else
            carry += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + carry; }
};

} // namespace detail

inline OrderedFan order_children(const MeasureTree& tree, const NodeAddress& addr)
{
    detail::require_cube_tree(tree, "order_children");
    const Node parent = node_at(tree, addr);
    std::vector<Node> raw = tree.children(parent);
    OrderedFan fan;
    detail::sort_fan(raw, fan.order);
    fan.children.reserve(raw.size());
    for (std::size_t r : fan.order)
        fan.children.push_back(raw[r]);
    return fan;
}

struct HomEstimate {
    int k = 0;
    int n = 0;
    int order_index = 0;
    std::vector<double> level_sums;  // level_sums[j-1] = sum over level-j cubes of their i-th smallest child
    std::vector<double> partial;     // partial[l-1] = A_l = (k^n / l) sum_{j<=l} level_sums[j-1]
    double trailing_max = 0.0;       // max of A_l over the trailing half of computed l
    double overall_max = 0.0;
};

// Largest l with k^{n l} <= 2^24 (the full-level traversal guard).
inline int hom_depth_limit(int k, int n)
{
    const double per_level = n * std::log2(static_cast<double>(k));
    return static_cast<int>(std::floor(24.0 / per_level + 1e-12));
}

inline HomEstimate hom_estimate(const MeasureTree& tree, int i, int l_max)
{
    detail::require_cube_tree(tree, "hom_estimate");
    const int k = tree.generator().cube_base();
    const int n = tree.dimension();
    int fan = 1;
    for (int d = 0; d < n; ++d)
        fan *= k;
    if (i < 1 || i > fan)
        throw DomainError("hom_estimate: order index must lie in [1, k^n]");
    if (l_max < 1)
        throw ArgumentError("hom_estimate: l_max must be positive");
    const int limit = hom_depth_limit(k, n);
    if (l_max > limit)
        throw ResourceGuardError("hom_estimate: k^(n*l) exceeds 2^24 nodes; use l_max <= " + std::to_string(limit));

    std::vector<detail::CompensatedSum> sums(l_max);
    std::vector<std::vector<Node>> scratch(l_max + 1);
    std::vector<std::vector<std::size_t>> orders(l_max + 1);
    auto visit = [&](auto&& self, const Node& node) -> void {
        const int j = node.level;
        std::vector<Node>& kids = scratch[j];
        kids.clear();
        tree.generator().children(node, kids);
        if (kids.empty())
            return;
        if (j >= 1) {
            detail::sort_fan(kids, orders[j]);
            sums[j - 1].add(kids[orders[j][i - 1]].mass);
        }
        if (j + 1 <= l_max)
            for (const Node& c : kids)
                if (c.mass > 0.0)
                    self(self, c);
    };
    visit(visit, tree.root());

    HomEstimate est;
    est.k = k;
    est.n = n;
    est.order_index = i;
    detail::CompensatedSum running;
    for (int l = 1; l <= l_max; ++l) {
        const double s = sums[l - 1].value();
        est.level_sums.push_back(s);
        running.add(s);
        est.partial.push_back(fan * running.value() / l);
    }
    est.overall_max = *std::max_element(est.partial.begin(), est.partial.end());
    est.trailing_max = *std::max_element(est.partial.begin() + l_max / 2, est.partial.end());
    return est;
}

// Upper bound on the dimension of a measure with hom_k^i <= k^n eta.
inline double dimension_bound(int k, int n, int i, double eta)
{
    if (k < 2 || n < 1)
        throw DomainError("dimension_bound: need k >= 2 and n >= 1");
    const double kn = std::pow(static_cast<double>(k), n);
    if (i < 1 || i >= kn)
        throw DomainError("dimension_bound: order index must lie in [1, k^n)");
    if (!(eta >= 0.0) || eta > 1.0 / kn * (1.0 + 1e-15))
        throw DomainError("dimension_bound: eta must lie in [0, k^-n]");
    if (i * eta > 1.0)
        throw DomainError("dimension_bound: i * eta must not exceed 1");
    const double lk = std::log(static_cast<double>(k));
    if (eta == 0.0)
        return std::log(kn - i) / lk;
    const double ie = i * eta;
    const double rest = 1.0 - ie;
    const double tail = rest > 0.0 ? rest * std::log(rest / (kn - i)) : 0.0;
    return -(ie * std::log(eta) + tail) / lk;
}

inline double doubling_constant(int n, int k, double p)
{
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("doubling_constant: p must lie in (0, 1)");
    if (n < 1 || k < 2)
        throw DomainError("doubling_constant: need n >= 1 and k >= 2");
    return std::pow(static_cast<double>(k), -2.0 * n / (1.0 - p));
}

enum class ScaleVerdict { doubling, not_doubling, undecided };

struct DoublingStats {
    Point x;
    double gamma = 1.0;
    int k = 2;
    double c = 0.0;
    int l = 0;
    int count = 0;       // certified doubling scales
    int undecided = 0;   // scales the enclosures could not settle
    std::vector<ScaleVerdict> verdicts;
    double frequency() const { return l > 0 ? static_cast<double>(count) / l : 0.0; }
};

// Scale j counts when mu(B(x, gamma k^-j)).lo >= c * mu(B(x, gamma k^-(j-1))).hi.
// `depth` is the number of tree levels resolved below each ball's scale.
inline DoublingStats doubling_frequency(const MeasureTree& tree, const Point& x, double gamma, int k, double c, int l,
                                        int depth)
{
    if (!(gamma > 0.0))
        throw ArgumentError("doubling_frequency: gamma must be positive");
    if (l < 1)
        throw ArgumentError("doubling_frequency: l must be positive");
    if (k < 2)
        throw ArgumentError("doubling_frequency: k must be at least 2");
    DoublingStats st;
    st.x = x;
    st.gamma = gamma;
    st.k = k;
    st.c = c;
    st.l = l;
    double big_r = gamma;
    MeasureInterval big = region_measure(tree, RegionQuery::ball(x, big_r), budget_for(tree, big_r, depth));
    for (int j = 1; j <= l; ++j) {
        const double small_r = big_r / k;
        const MeasureInterval small =
            region_measure(tree, RegionQuery::ball(x, small_r), budget_for(tree, small_r, depth));
        ScaleVerdict v;
        if (small.lo >= c * big.hi && small.lo > 0.0)
            v = ScaleVerdict::doubling;
        else if (small.hi < c * big.lo)
            v = ScaleVerdict::not_doubling;
        else
            v = ScaleVerdict::undecided;
        if (v == ScaleVerdict::doubling)
            ++st.count;
        if (v == ScaleVerdict::undecided)
            ++st.undecided;
        st.verdicts.push_back(v);
        big = small;
        big_r = small_r;
    }
    return st;
}

// Centred dilate tau*Q of a cube Q (half-open).
inline Box dilate_box(const Box& q, double tau)
{
    const Vec c = q.center();
    const Vec half = 0.5 * tau * (q.hi - q.lo);
    return Box{c - half, c + half, true};
}

struct LargeChildStats {
    int levels = 0;
    int hits = 0;
    std::vector<double> child_mass;
    std::vector<double> dilate_hi;
    double frequency() const { return levels > 0 ? static_cast<double>(hits) / levels : 0.0; }
};

// Fraction of levels j = 1..l at which the (k^n - M k^m)-th smallest child
// of x's level-j cube Q has mass > c * mu(tau Q).hi. `depth` extra levels
// resolve mu(tau Q).
inline LargeChildStats large_child_stats(const MeasureTree& tree, const Point& x, int m, long long big_m, double c,
                                         double tau, int l, int depth = 4)
{
    detail::require_cube_tree(tree, "large_child_frequency");
    if (!(tau >= 1.0))
        throw DomainError("large_child_frequency: tau must be at least 1");
    const int k = tree.generator().cube_base();
    const int n = tree.dimension();
    const double kn = std::pow(static_cast<double>(k), n);
    const double rank = kn - static_cast<double>(big_m) * std::pow(static_cast<double>(k), m);
    if (rank < 1.0)
        throw DomainError("large_child_frequency: k^n - M k^m must be at least 1");
    const auto addr = locate(tree, x, l);
    if (!addr)
        throw ArgumentError("large_child_frequency: x lies outside the tree");
    LargeChildStats st;
    NodeAddress prefix;
    for (int j = 1; j <= l; ++j) {
        prefix.push_back((*addr)[j - 1]);
        const Node q = node_at(tree, prefix);
        const OrderedFan fan = order_children(tree, prefix);
        const double child = fan.children[static_cast<std::size_t>(rank) - 1].mass;
        const MeasureInterval big =
            region_measure(tree, RegionQuery::box(dilate_box(std::get<Box>(q.region), tau)), j + depth);
        ++st.levels;
        st.child_mass.push_back(child);
        st.dilate_hi.push_back(big.hi);
        if (child > c * big.hi)
            ++st.hits;
    }
    return st;
}

inline double large_child_frequency(const MeasureTree& tree, const Point& x, int m, long long big_m, double c,
                                    double tau, int l)
{
    return large_child_stats(tree, x, m, big_m, c, tau, l).frequency();
}

} // namespace conelab
