#pragma once

// Canned experiments on the three counterexample constructions: scale
// scans of the six-interval constant, cone hit counts for the rotating
// balls, and horizontal-cone ratios for the strip/block measure.

#include "conelab/constructions.hpp"
#include "conelab/density.hpp"
#include "conelab/measure.hpp"
#include "conelab/random.hpp"
#include "conelab/region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

namespace conelab {

// ---------------------------------------------------------------------------
// Six-interval constant along dyadic scales

struct SixIntervalScan {
    Point x;
    int first_level = 0;
    std::vector<double> values;  // values[j] at r = 2^-(first_level + j)

    bool non_increasing() const
    {
        for (std::size_t j = 1; j < values.size(); ++j)
            if (values[j] > values[j - 1])
                return false;
        return !values.empty();
    }
    bool halved() const { return values.size() >= 2 && values.back() < 0.5 * values.front(); }
};

inline SixIntervalScan six_interval_scan(const MeasureTree& tree, const Point& x, int first_level, int last_level,
                                         int depth = 6)
{
    if (first_level < 0 || last_level < first_level)
        throw ArgumentError("six_interval_scan: need 0 <= first_level <= last_level");
    SixIntervalScan scan;
    scan.x = x;
    scan.first_level = first_level;
    for (int l = first_level; l <= last_level; ++l)
        scan.values.push_back(six_interval_constant(tree, x, std::ldexp(1.0, -l), 6, 3.0, depth));
    return scan;
}

// ---------------------------------------------------------------------------
// Rotating balls: cones around the line perpendicular to the current fan

struct RotatingBallStep {
    int n = 0;
    double r = 0.0;                 // radius used, in units of R_{n-2}
    int hits = 0;                   // level-n balls not certified outside the cone
    double ratio_bound = 0.0;       // hits / n
    double outside_distance = 0.0;  // distance from x to level-n balls of other parents, in units of nR_n
};

struct RotatingBallReport {
    double alpha = 0.0;
    int bound = 0;  // ceil(10 / alpha) + 1
    std::vector<std::uint32_t> address;
    std::vector<RotatingBallStep> steps;
    int n0 = 0;  // smallest n with hits <= bound from n on; 0 if none
    bool separation_ok = true;

    double initial_ratio() const { return steps.empty() ? 0.0 : steps.front().ratio_bound; }
    double final_ratio() const { return steps.empty() ? 0.0 : steps.back().ratio_bound; }
    // The bound M/n from n0 on falls below half its value at n0.
    bool decays() const { return n0 > 0 && !steps.empty() && 2 * n0 <= steps.back().n; }
};

inline int rotating_ball_cone_bound(double alpha) { return static_cast<int>(std::ceil(10.0 / alpha)) + 1; }

// Uniformly random address a_1..a_len (a_i in [0, 2i^2)), i.e. a point
// distributed by the natural measure.
inline std::vector<std::uint32_t> rotating_ball_address(int len, Rng& rng)
{
    std::vector<std::uint32_t> a;
    a.reserve(len);
    for (int i = 1; i <= len; ++i) {
        const auto fan = static_cast<std::uint32_t>(2 * i * i);
        a.push_back(std::min(fan - 1, static_cast<std::uint32_t>(uniform01(rng) * fan)));
    }
    return a;
}

// For n = 2..max_n, works in the frame of the level-(n-2) ball G on the
// branch, where all scales are O(1). x is located a few levels below n
// along the branch, P is its level-(n-1) ball and the cone axis is the
// line perpendicular to P's fan direction. The radius is the top of the
// admissible range, nR_n <= 2r < (n-1)R_{n-1}; hits only grow with r.
inline RotatingBallReport rotating_ball_cone_counts(double alpha, int max_n, std::uint64_t seed, int tail = 4)
{
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ArgumentError("rotating_ball_cone_counts: alpha must lie in (0, 1]");
    if (max_n < 2)
        throw ArgumentError("rotating_ball_cone_counts: max_n must be at least 2");
    RotatingBallReport rep;
    rep.alpha = alpha;
    rep.bound = rotating_ball_cone_bound(alpha);
    Rng rng = make_rng(seed);
    rep.address = rotating_ball_address(max_n + tail, rng);

    for (int n = 2; n <= max_n; ++n) {
        // Local tree rooted at G: level 1 uses index n-1, level 2 index n.
        const RotatingBallGenerator gen(tail + 2, n - 1);
        Node node = gen.root();
        std::vector<Node> kids;
        Node parent;
        for (int d = 0; d < tail + 2; ++d) {
            kids.clear();
            gen.children(node, kids);
            node = kids.at(rep.address[n - 2 + d]);
            if (d == 0)
                parent = node;
        }
        const Point x = std::get<Ball>(node.region).center;
        // R_{n-1} and R_n relative to R_{n-2}.
        const double r_prev = 1.0 / (2.0 * (n - 1) * (n - 1));
        const double r_n = r_prev / (2.0 * n * n);
        const double r = 0.5 * (n - 1) * r_prev * (1.0 - 1e-9);

        const UnitVector axis(make_vec({-std::sin(parent.turn), std::cos(parent.turn)}));
        RegionQuery q = RegionQuery::ball(x, r);
        q.with_plane_cone(Subspace::line(axis), alpha);
        const CompiledQuery cq(q);

        RotatingBallStep step;
        step.n = n;
        step.r = r;
        step.outside_distance = std::numeric_limits<double>::infinity();
        kids.clear();
        gen.children(gen.root(), kids);
        std::vector<Node> grand;
        for (const Node& p : kids) {
            const Ball& pb = std::get<Ball>(p.region);
            const double gap = (pb.center - x).norm() - pb.radius;
            if (gap > r) {
                // Nothing of this parent reaches the query ball.
                step.outside_distance = std::min(step.outside_distance, gap / (n * r_n));
                continue;
            }
            grand.clear();
            gen.children(p, grand);
            const bool own = p.index == parent.index;
            for (const Node& b : grand) {
                const Ball& ball = std::get<Ball>(b.region);
                if (!own)
                    step.outside_distance =
                        std::min(step.outside_distance, ((ball.center - x).norm() - ball.radius) / (n * r_n));
                if (cq.classify(b.region) != Relation::outside)
                    ++step.hits;
            }
        }
        step.ratio_bound = static_cast<double>(step.hits) / n;
        if (n >= 3 && step.outside_distance < 0.5)
            rep.separation_ok = false;
        rep.steps.push_back(step);
    }
    for (auto it = rep.steps.rbegin(); it != rep.steps.rend() && it->hits <= rep.bound; ++it)
        rep.n0 = it->n;
    return rep;
}

// ---------------------------------------------------------------------------
// Strip/block measure: cones around the horizontal line

struct StripBlockLevel {
    int i = 0;
    int big_i = 0;   // I_i
    int next_i = 0;  // I_{i+1}
    int points = 0;
    int skipped = 0;          // points too close to a band edge at every usable frame
    double max_ratio_hi = 0.0;
    double mean_ratio_hi = 0.0;
    int max_strips = 0;       // level-(i+1) strips not certified outside the cone
    int within_next = 0;      // points with ratio.hi <= 2 / I_{i+1}
    int within_own = 0;       // points with ratio.hi <= 2 / I_i
};

struct StripBlockConeReport {
    double alpha = 0.0;
    int i0 = 0;
    std::vector<StripBlockLevel> levels;

    bool decreasing() const
    {
        for (std::size_t j = 1; j < levels.size(); ++j)
            if (!(levels[j].max_ratio_hi < levels[j - 1].max_ratio_hi))
                return false;
        return levels.size() >= 2;
    }
    bool bounded_next() const
    {
        for (const StripBlockLevel& l : levels)
            if (l.within_next != l.points - l.skipped)
                return false;
        return !levels.empty();
    }
    bool bounded_own() const
    {
        for (const StripBlockLevel& l : levels)
            if (l.within_own != l.points - l.skipped)
                return false;
        return !levels.empty();
    }
};

// Smallest i0 >= 3 with 1 / I_{i0} < sqrt(1 - alpha) / 4.
inline int strip_block_first_level(const StripBlockSchedule& schedule, double alpha, int limit = 4096)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ArgumentError("strip_block_first_level: alpha must lie in (0, 1)");
    for (int i = 3; i < limit; ++i)
        if (1.0 / schedule.at(i) < std::sqrt(1.0 - alpha) / 4.0)
            return i;
    throw DomainError("strip_block_first_level: no admissible level below the limit");
}

namespace detail {

// Descends a local strip/block tree along `path`, returning the final node.
inline Node descend(const Generator& gen, const NodeAddress& path, std::size_t from, std::size_t count)
{
    Node node = gen.root();
    std::vector<Node> kids;
    for (std::size_t d = 0; d < count; ++d) {
        kids.clear();
        gen.children(node, kids);
        node = kids.at(path.at(from + d));
    }
    return node;
}

} // namespace detail

// For levels i = first..last, samples `points` mu-distributed x and sets
// r = 1 / M_i. Each ratio is computed in the frame of the deepest
// ancestor whose height band strictly contains [y - r, y + r], so the
// global coordinates (below double resolution) are never formed.
inline StripBlockConeReport strip_block_cone_ratios(const StripBlockSchedule& schedule, double alpha, int first,
                                                    int last, int points, std::uint64_t seed, int extra = 2)
{
    if (first < 1 || last < first)
        throw ArgumentError("strip_block_cone_ratios: need 1 <= first <= last");
    if (points < 1)
        throw ArgumentError("strip_block_cone_ratios: points must be positive");
    StripBlockConeReport rep;
    rep.alpha = alpha;
    rep.i0 = strip_block_first_level(schedule, alpha);
    const Subspace horizontal = Subspace::line(UnitVector::axis(2, 0));
    const int below = extra + 2;  // levels of the branch below i

    for (int i = first; i <= last; ++i) {
        StripBlockLevel lev;
        lev.i = i;
        lev.big_i = schedule.at(i);
        lev.next_i = schedule.at(i + 1);
        lev.points = points;
        const StripBlockGenerator global(StripBlockSpec{schedule, i + below});
        const MeasureTree global_tree(std::make_shared<StripBlockGenerator>(StripBlockSpec{schedule, i + below}));
        double sum = 0.0;
        for (int p = 0; p < points; ++p) {
            Rng rng = make_rng(seed, static_cast<std::uint64_t>(i) * 1000003u + p);
            const NodeAddress path = sample_branch(global_tree, i + below, rng);
            bool done = false;
            for (int frame = i - 1; frame >= std::max(0, i - 4) && !done; --frame) {
                const auto local = std::static_pointer_cast<const StripBlockGenerator>(global.local_generator(frame));
                const int rel = i + below - frame;
                const Node leaf = detail::descend(*local, path, frame, rel);
                const Point x = std::get<Box>(leaf.region).center();
                const double r = local->cell_height(i - frame);
                if (!(x[1] - r > 0.0 && x[1] + r < 1.0))
                    continue;
                const MeasureTree tree(local, 4, std::size_t{1} << 16);
                const int budget = i + 1 - frame + extra;
                RegionQuery num = RegionQuery::ball(x, r);
                num.with_plane_cone(horizontal, alpha);
                const MeasureInterval ratio =
                    ratio_interval(region_measure(tree, num, budget), region_measure(tree, RegionQuery::ball(x, r), budget));

                // Level-(i+1) strips (groups of 2 I_{i+1}^2 cells) meeting the cone.
                const CompiledQuery cq(num);
                std::set<std::pair<std::uint64_t, int>> strips;
                const int per_strip = 2 * lev.next_i * lev.next_i;
                std::uint64_t parent_id = 0;
                auto visit = [&](auto&& self, const Node& node, std::uint64_t id) -> void {
                    if (!(node.mass > 0.0) || cq.classify(node.region) == Relation::outside)
                        return;
                    if (node.level == i + 1 - frame) {
                        strips.emplace(parent_id, static_cast<int>(node.index) / per_strip);
                        return;
                    }
                    if (node.level == i - frame)
                        parent_id = id;
                    for (const Node& c : tree.children(node))
                        self(self, c, id * 1000003u + c.index + 1);
                };
                visit(visit, tree.root(), 0);

                lev.max_strips = std::max(lev.max_strips, static_cast<int>(strips.size()));
                lev.max_ratio_hi = std::max(lev.max_ratio_hi, ratio.hi);
                sum += ratio.hi;
                if (ratio.hi <= 2.0 / lev.next_i)
                    ++lev.within_next;
                if (ratio.hi <= 2.0 / lev.big_i)
                    ++lev.within_own;
                done = true;
            }
            if (!done)
                ++lev.skipped;
        }
        const int used = lev.points - lev.skipped;
        lev.mean_ratio_hi = used > 0 ? sum / used : 0.0;
        rep.levels.push_back(lev);
    }
    return rep;
}

} // namespace conelab
