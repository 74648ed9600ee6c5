#pragma once

// Concrete measure generators: weighted k-adic cube trees (Lebesgue,
// binomial, concentrated, axis segment), atoms, the rotating-ball
// construction and the strip/block construction, plus their constants.

#include "conelab/core.hpp"
#include "conelab/measure.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace conelab {

// ---------------------------------------------------------------------------
// k-adic cube trees

// Conditional weights of the k^n children of `parent`, in child order.
using CubeWeightRule = std::function<void(const Node& parent, std::vector<double>& weights)>;

// Half-open k-adic cubes of [0,1)^n. Children are ordered
// lexicographically by their integer position (first coordinate most
// significant), which is also the lexicographic order of their corners.
class CubeTreeGenerator final : public Generator {
public:
    CubeTreeGenerator(int k, int n, CubeWeightRule rule, std::string name, int max_level = 200)
        : k_(k), n_(n), rule_(std::move(rule)), name_(std::move(name)), max_level_(max_level)
    {
        if (k < 2)
            throw ArgumentError("cube tree: k must be at least 2");
        if (n < 1 || n > kMaxDimension)
            throw ArgumentError("cube tree: dimension out of range");
        fan_ = 1;
        for (int d = 0; d < n; ++d)
            fan_ *= k;
        if (fan_ > 4096)
            throw ArgumentError("cube tree: k^n exceeds 4096 children per node");
    }

    int dimension() const override { return n_; }
    int cube_base() const override { return k_; }
    int fan_size() const { return fan_; }

    Node root() const override
    {
        Node r;
        r.region = Box{Vec::Zero(n_), Vec::Ones(n_), true};
        return r;
    }

    void children(const Node& parent, std::vector<Node>& out) const override
    {
        if (parent.level >= max_level_)
            return;
        thread_local std::vector<double> w;
        w.assign(fan_, 0.0);
        rule_(parent, w);
        const Box& pb = std::get<Box>(parent.region);
        const double side = (pb.hi[0] - pb.lo[0]) / k_;
        out.reserve(fan_);
        std::vector<int> z(n_, 0);
        for (int idx = 0; idx < fan_; ++idx) {
            int rem = idx;
            for (int d = n_ - 1; d >= 0; --d) {
                z[d] = rem % k_;
                rem /= k_;
            }
            if (!(w[idx] >= 0.0))
                throw ConstructionError(name_ + ": negative conditional weight");
            Node c;
            c.level = parent.level + 1;
            c.index = static_cast<std::uint32_t>(idx);
            c.mass = parent.mass * w[idx];
            Box b{Vec(n_), Vec(n_), true};
            for (int d = 0; d < n_; ++d) {
                b.lo[d] = pb.lo[d] + z[d] * side;
                b.hi[d] = z[d] + 1 == k_ ? pb.hi[d] : pb.lo[d] + (z[d] + 1) * side;
            }
            c.region = std::move(b);
            out.push_back(std::move(c));
        }
    }

    double level_diameter(int level) const override
    {
        return std::sqrt(static_cast<double>(n_)) * std::pow(static_cast<double>(k_), -level);
    }

    std::string describe() const override { return name_; }

private:
    int k_;
    int n_;
    int fan_ = 1;
    CubeWeightRule rule_;
    std::string name_;
    int max_level_;
};

inline MeasureTree lebesgue_tree(int k, int n)
{
    auto rule = [](const Node&, std::vector<double>& w) { std::fill(w.begin(), w.end(), 1.0 / w.size()); };
    return MeasureTree(std::make_shared<CubeTreeGenerator>(k, n, rule, "lebesgue"));
}

// Rule i -> q_i for the binomial measure (children of a level i-1 node
// use q_i).
struct BinomialSpec {
    std::function<double(int)> q;
    std::string label;

    static BinomialSpec harmonic()
    {
        return {[](int i) { return 1.0 / (i + 2.0); }, "q_i=1/(i+2)"};
    }

    static BinomialSpec constant(double q)
    {
        return {[q](int) { return q; }, "q_i=" + std::to_string(q)};
    }
};

inline MeasureTree binomial_measure(const BinomialSpec& spec)
{
    if (!spec.q)
        throw ConstructionError("binomial: missing q rule");
    for (int i = 1; i <= 64; ++i) {
        const double q = spec.q(i);
        if (!(q > 0.0 && q < 0.5))
            throw ConstructionError("binomial: q_" + std::to_string(i) + " = " + std::to_string(q) +
                                    " must lie in (0, 1/2)");
    }
    auto q = spec.q;
    auto rule = [q](const Node& parent, std::vector<double>& w) {
        const double qi = q(parent.level + 1);
        if (!(qi > 0.0 && qi < 0.5))
            throw ConstructionError("binomial: q_" + std::to_string(parent.level + 1) + " out of (0, 1/2)");
        w[0] = 1.0 - qi;
        w[1] = qi;
    };
    return MeasureTree(std::make_shared<CubeTreeGenerator>(2, 1, rule, "binomial " + spec.label));
}

// All mass follows the cube containing `target` (a point mass in the limit).
inline MeasureTree concentrated_tree(const Point& target, int k = 2)
{
    const int n = static_cast<int>(target.size());
    for (int d = 0; d < n; ++d)
        if (!(target[d] >= 0.0 && target[d] < 1.0))
            throw ConstructionError("concentrated tree: target must lie in [0,1)^n");
    auto rule = [target, k, n](const Node& parent, std::vector<double>& w) {
        const Box& b = std::get<Box>(parent.region);
        const double side = (b.hi[0] - b.lo[0]) / k;
        int idx = 0;
        for (int d = 0; d < n; ++d) {
            int z = static_cast<int>(std::floor((target[d] - b.lo[d]) / side));
            z = std::clamp(z, 0, k - 1);
            idx = idx * k + z;
        }
        std::fill(w.begin(), w.end(), 0.0);
        w[idx] = 1.0;
    };
    return MeasureTree(std::make_shared<CubeTreeGenerator>(k, n, rule, "concentrated"));
}

// Uniform measure on the segment [0,1) x {0}^{n-1}: mass only in cubes
// touching the first coordinate axis.
inline MeasureTree axis_segment_tree(int n, int k = 2)
{
    if (n < 2)
        throw ConstructionError("axis segment: needs n >= 2");
    auto rule = [k](const Node&, std::vector<double>& w) {
        const int fan = static_cast<int>(w.size());
        const int stride = fan / k;  // children sharing the first coordinate
        std::fill(w.begin(), w.end(), 0.0);
        for (int z0 = 0; z0 < k; ++z0)
            w[z0 * stride] = 1.0 / k;
    };
    return MeasureTree(std::make_shared<CubeTreeGenerator>(k, n, rule, "axis_segment"));
}

// ---------------------------------------------------------------------------
// Point mass

class AtomGenerator final : public Generator {
public:
    explicit AtomGenerator(Point x) : x_(std::move(x)) {}
    int dimension() const override { return static_cast<int>(x_.size()); }
    Node root() const override
    {
        Node r;
        r.region = Ball{x_, 0.0};
        return r;
    }
    void children(const Node&, std::vector<Node>&) const override {}
    double level_diameter(int) const override { return 0.0; }
    std::string describe() const override { return "atom"; }

private:
    Point x_;
};

inline MeasureTree atom_tree(const Point& x) { return MeasureTree(std::make_shared<AtomGenerator>(x)); }

// ---------------------------------------------------------------------------
// Rotating balls

// Radius of a level-n construction ball: R_0 = 1, R_n = R_{n-1} / (2 n^2).
inline double rotating_ball_radius(int n)
{
    double r = 1.0;
    for (int i = 1; i <= n; ++i)
        r /= 2.0 * i * i;
    return r;
}

// 1 / R_n as an exact integer.
inline boost::multiprecision::cpp_int rotating_ball_inverse_radius(int n)
{
    boost::multiprecision::cpp_int v = 1;
    for (int i = 1; i <= n; ++i)
        v *= 2 * i * i;
    return v;
}

// Level-n bookkeeping: count * R_n is exactly 1, while the sum of ball
// diameters is count * 2R_n = 2. Both are reported; the construction does
// not decide which one the normalisation intends.
struct RotatingBallLevelTotals {
    boost::multiprecision::cpp_int count;
    boost::multiprecision::cpp_rational radius_sum;
    boost::multiprecision::cpp_rational diameter_sum;
};

inline RotatingBallLevelTotals rotating_ball_level_totals(int n)
{
    using boost::multiprecision::cpp_rational;
    RotatingBallLevelTotals t;
    t.count = 1;
    for (int i = 1; i <= n; ++i)
        t.count *= 2 * i * i;
    t.radius_sum = cpp_rational(t.count) / cpp_rational(rotating_ball_inverse_radius(n));
    t.diameter_sum = 2 * t.radius_sum;
    return t;
}

// Level i of the construction applies the 2 i^2 maps
//   f_{i,j}(z) = (rot((-1)^j a_i) z + (2j - 2i^2 - 1, 0)) / (2 i^2),  a_i = 1/sqrt(i)
// with uniform weights. Tree level l uses construction index start + l - 1,
// so start > 1 gives the descendants of a deep node in its own frame.
class RotatingBallGenerator final : public Generator {
public:
    explicit RotatingBallGenerator(int max_level = 64, int start = 1) : max_level_(max_level), start_(start)
    {
        if (max_level < 1)
            throw ConstructionError("rotating ball: depth must be at least 1");
        if (start < 1)
            throw ConstructionError("rotating ball: start index must be at least 1");
    }

    int dimension() const override { return 2; }
    int start() const { return start_; }
    int max_level() const { return max_level_; }

    Node root() const override
    {
        Node r;
        r.region = Ball{Vec::Zero(2), 1.0};
        return r;
    }

    void children(const Node& parent, std::vector<Node>& out) const override
    {
        if (parent.level >= max_level_)
            return;
        const int i = start_ + parent.level;
        const double fan = 2.0 * i * i;
        const int count = 2 * i * i;
        const Ball& pb = std::get<Ball>(parent.region);
        const double angle = 1.0 / std::sqrt(static_cast<double>(i));
        const double c = std::cos(parent.turn);
        const double s = std::sin(parent.turn);
        const double child_radius = pb.radius / fan;
        out.reserve(count);
        for (int j = 1; j <= count; ++j) {
            const double offset = (2.0 * j - fan - 1.0) / fan;
            Node ch;
            ch.level = parent.level + 1;
            ch.index = static_cast<std::uint32_t>(j - 1);
            ch.mass = parent.mass / fan;
            Vec center(2);
            center[0] = pb.center[0] + pb.radius * c * offset;
            center[1] = pb.center[1] + pb.radius * s * offset;
            ch.turn = parent.turn + ((j % 2 == 0) ? angle : -angle);
            if (std::abs(offset) + 1.0 / fan > 1.0 + 1e-12)
                throw ConstructionError("rotating ball: child ball leaves its parent");
            ch.region = Ball{center, child_radius};
            out.push_back(std::move(ch));
        }
    }

    double level_diameter(int level) const override
    {
        double r = 2.0;
        for (int l = 1; l <= level; ++l) {
            const int i = start_ + l - 1;
            r /= 2.0 * i * i;
        }
        return r;
    }

    std::shared_ptr<const Generator> local_generator(int level) const override
    {
        return std::make_shared<RotatingBallGenerator>(std::max(1, max_level_ - level), start_ + level);
    }

    std::string describe() const override { return "rotating_ball"; }

private:
    int max_level_;
    int start_;
};

inline MeasureTree rotating_ball_tree(int depth = 64, int start = 1)
{
    return MeasureTree(std::make_shared<RotatingBallGenerator>(depth, start));
}

// ---------------------------------------------------------------------------
// Strip/block construction

struct ScheduleConstants {
    int i = 0;
    double c = 0.0;                        // normalising constant C_i
    long double n_steps = 0;               // N_i
    std::optional<std::uint64_t> n_exact;  // N_i when it fits in 64 bits
    long double log_step_deficit = 0;      // log(C_i / (8 (2i)^{i^2 - 3/2}))
};

// C_i normalises sum_{k<i} sum_{h<2i^2} C_i (2i)^{-|h - i^2 + 1/2|} to 1.
inline long double strip_block_normalizer(int i)
{
    if (i < 2)
        throw DomainError("strip/block constants need i >= 2");
    const long double b = 2.0L * i;
    // Symmetric profile: 2 sum_{u=0}^{i^2-1} b^{-(u+1/2)}.
    const long double tail = -std::expm1l(-static_cast<long double>(i) * i * std::log(b));
    const long double half = std::pow(b, -0.5L) * tail / (1.0L - 1.0L / b);
    return 1.0L / (static_cast<long double>(i) * 2.0L * half);
}

// Exact C_i when 2i is a perfect square (the profile is then rational).
inline boost::multiprecision::cpp_rational strip_block_normalizer_exact(int i)
{
    using boost::multiprecision::cpp_int;
    using boost::multiprecision::cpp_rational;
    const int root = static_cast<int>(std::lround(std::sqrt(2.0 * i)));
    if (root * root != 2 * i)
        throw DomainError("strip/block: C_i is irrational unless 2i is a perfect square");
    cpp_rational total = 0;
    for (int h = 0; h < 2 * i * i; ++h) {
        // |h - i^2 + 1/2| = e/2 with e odd; (2i)^{-e/2} = root^{-e}.
        const int e = std::abs(2 * h - 2 * i * i + 1);
        cpp_int den = 1;
        for (int t = 0; t < e; ++t)
            den *= root;
        total += cpp_rational(cpp_int(1), den);
    }
    total *= i;
    return 1 / total;
}

inline ScheduleConstants schedule_constants(int i)
{
    if (i < 2)
        throw DomainError("schedule_constants: i must be at least 2");
    ScheduleConstants out;
    out.i = i;
    const long double c = strip_block_normalizer(i);
    out.c = static_cast<double>(c);
    const long double log_a =
        std::log(c) - std::log(8.0L) - (static_cast<long double>(i) * i - 1.5L) * std::log(2.0L * i);
    out.log_step_deficit = log_a;
    const long double a = std::exp(log_a);
    const long double per_step = -std::log1p(-a);  // -log(1 - a) > 0
    out.n_steps = std::floor(std::log(2.0L) / per_step) + 1.0L;
    if (out.n_steps < 1.8e19L) {
        std::uint64_t n = static_cast<std::uint64_t>(out.n_steps);
        // Guard against rounding at the integer boundary.
        auto below_half = [&](std::uint64_t k) { return static_cast<long double>(k) * per_step > std::log(2.0L); };
        while (n > 1 && below_half(n - 1))
            --n;
        while (!below_half(n))
            ++n;
        out.n_exact = n;
        out.n_steps = static_cast<long double>(n);
    }
    return out;
}

// Level schedule j -> I_j (j >= 1).
class StripBlockSchedule {
public:
    // The construction's own schedule: N_2 levels of I = 2, then N_3 of I = 3, ...
    static StripBlockSchedule original()
    {
        StripBlockSchedule s;
        s.kind_ = Kind::original;
        long double total = 0;
        for (int i = 2; i <= 8; ++i) {
            total += schedule_constants(i).n_steps;
            s.cumulative_.push_back(total);
        }
        return s;
    }

    // I_j = j + 1.
    static StripBlockSchedule shifted()
    {
        StripBlockSchedule s;
        s.kind_ = Kind::shifted;
        return s;
    }

    // Explicit values for j = 1..size; the last value repeats afterwards.
    static StripBlockSchedule custom(std::vector<int> values)
    {
        if (values.empty())
            throw ConstructionError("strip/block schedule: empty custom schedule");
        for (int v : values)
            if (v < 2)
                throw ConstructionError("strip/block schedule: every I_j must be at least 2");
        StripBlockSchedule s;
        s.kind_ = Kind::custom;
        s.values_ = std::move(values);
        return s;
    }

    // Schedule seen from level `levels` down: I'_j = I_{j + levels}.
    StripBlockSchedule offset_by(long long levels) const
    {
        StripBlockSchedule s = *this;
        s.offset_ += levels;
        return s;
    }

    int at(long long j) const
    {
        if (j < 1)
            throw ArgumentError("strip/block schedule: index must be at least 1");
        const long long g = j + offset_;
        switch (kind_) {
        case Kind::shifted:
            return static_cast<int>(g + 1);
        case Kind::custom:
            return values_[static_cast<std::size_t>(std::min<long long>(g, values_.size()) - 1)];
        case Kind::original:
            for (std::size_t t = 0; t < cumulative_.size(); ++t)
                if (static_cast<long double>(g) <= cumulative_[t])
                    return static_cast<int>(t) + 2;
            return static_cast<int>(cumulative_.size()) + 2;
        }
        return 2;
    }

    std::string describe() const
    {
        switch (kind_) {
        case Kind::original:
            return "original";
        case Kind::shifted:
            return "shifted";
        case Kind::custom:
            return "custom";
        }
        return "";
    }

private:
    enum class Kind { original, shifted, custom };
    Kind kind_ = Kind::shifted;
    long long offset_ = 0;
    std::vector<int> values_;
    std::vector<long double> cumulative_;
};

struct StripBlockSpec {
    StripBlockSchedule schedule = StripBlockSchedule::shifted();
    int depth = 12;
};

// Level j applies the 2 I^3 maps (I = I_j)
//   f_{k,h}((x,y)) = (((-1)^k I + x) / (2I^3), (2kI^2 + h + y) / (2I^3))
// with weights C_I (2I)^{-|h - I^2 + 1/2|}. Child index k * 2I^2 + h, so
// children are ordered by height. Node boxes are the tight closed
// bounding boxes of the support: unit height in local units and local
// half-width a_l with a_l = (I_{l+1} + a_{l+1}) / (2 I_{l+1}^3).
class StripBlockGenerator final : public Generator {
public:
    explicit StripBlockGenerator(StripBlockSpec spec) : spec_(std::move(spec))
    {
        if (spec_.depth < 1)
            throw ConstructionError("strip/block: depth must be at least 1");
        const int tail = spec_.depth + 40;
        half_width_.assign(tail + 1, 0.5);
        for (int l = tail - 1; l >= 0; --l) {
            const double I = spec_.schedule.at(l + 1);
            half_width_[l] = (I + half_width_[l + 1]) / (2.0 * I * I * I);
        }
        height_.assign(spec_.depth + 2, 1.0);
        for (int l = 1; l <= spec_.depth + 1; ++l) {
            const double I = spec_.schedule.at(l);
            height_[l] = height_[l - 1] / (2.0 * I * I * I);
        }
        for (int l = 1; l <= spec_.depth; ++l) {
            const int I = spec_.schedule.at(l);
            if (!weights_.count(I))
                weights_[I] = profile(I);
        }
    }

    // Conditional weights of the 2I^3 children, indexed by k * 2I^2 + h.
    static std::vector<double> profile(int I)
    {
        const double c = static_cast<double>(strip_block_normalizer(I));
        std::vector<double> w(static_cast<std::size_t>(2 * I * I * I));
        for (int k = 0; k < I; ++k)
            for (int h = 0; h < 2 * I * I; ++h)
                w[k * 2 * I * I + h] = c * std::pow(2.0 * I, -std::abs(h - I * I + 0.5));
        return w;
    }

    const StripBlockSpec& spec() const { return spec_; }
    int dimension() const override { return 2; }

    // Local half-width of the support of a level-l node (height 1).
    double half_width(int level) const { return half_width_.at(level); }

    // Height of a level-l node, 1 / M_l.
    double cell_height(int level) const { return height_.at(level); }

    Node root() const override
    {
        Node r;
        r.region = Box{make_vec({-half_width_[0], 0.0}), make_vec({half_width_[0], 1.0}), false};
        return r;
    }

    void children(const Node& parent, std::vector<Node>& out) const override
    {
        if (parent.level >= spec_.depth)
            return;
        const int I = spec_.schedule.at(parent.level + 1);
        const std::vector<double>& w = weights_.at(I);
        const Box& pb = std::get<Box>(parent.region);
        const double s = pb.hi[1] - pb.lo[1];
        const double cx = 0.5 * (pb.lo[0] + pb.hi[0]);
        const double denom = 2.0 * I * I * I;
        const double hw = s * half_width_[parent.level + 1] / denom;
        const int per_strip = 2 * I * I;
        out.reserve(w.size());
        for (int k = 0; k < I; ++k) {
            const double x = cx + s * ((k % 2 == 0) ? I : -I) / denom;
            for (int h = 0; h < per_strip; ++h) {
                const int idx = k * per_strip + h;
                Node ch;
                ch.level = parent.level + 1;
                ch.index = static_cast<std::uint32_t>(idx);
                ch.mass = parent.mass * w[idx];
                const double y0 = pb.lo[1] + s * (k * per_strip + h) / denom;
                const double y1 = idx + 1 == static_cast<int>(w.size()) ? pb.hi[1]
                                                                         : pb.lo[1] + s * (idx + 1) / denom;
                ch.region = Box{make_vec({x - hw, y0}), make_vec({x + hw, y1}), false};
                out.push_back(std::move(ch));
            }
        }
    }

    double level_diameter(int level) const override
    {
        const double h = level < static_cast<int>(height_.size()) ? height_[level] : 0.0;
        const double w = 2.0 * half_width_[std::min<std::size_t>(level, half_width_.size() - 1)] * h;
        return std::hypot(h, w);
    }

    std::shared_ptr<const Generator> local_generator(int level) const override
    {
        StripBlockSpec s{spec_.schedule.offset_by(level), std::max(1, spec_.depth - level)};
        return std::make_shared<StripBlockGenerator>(s);
    }

    std::string describe() const override { return "strip_block(" + spec_.schedule.describe() + ")"; }

private:
    StripBlockSpec spec_;
    std::vector<double> half_width_;
    std::vector<double> height_;
    std::map<int, std::vector<double>> weights_;
};

inline MeasureTree strip_block_tree(const StripBlockSpec& spec)
{
    return MeasureTree(std::make_shared<StripBlockGenerator>(spec), 3, std::size_t{1} << 16);
}

// M_i = prod_{t <= i} 2 I_t^3.
inline double strip_block_cells(const StripBlockSchedule& schedule, int i)
{
    double m = 1.0;
    for (int t = 1; t <= i; ++t) {
        const double I = schedule.at(t);
        m *= 2.0 * I * I * I;
    }
    return m;
}

// Height band [lo, hi] of strip S_{i,k}, k = 1..M_{i-1} I_i.
inline std::pair<double, double> strip_band(const StripBlockSchedule& schedule, int i, long long k)
{
    const double I = schedule.at(i);
    const double m = strip_block_cells(schedule, i);
    return {2.0 * (k - 1) * I * I / m, 2.0 * k * I * I / m};
}

// Height band of block B_{i,k,h}, h = 1..2 I_i^2: the h-th level-i cell of strip k.
inline std::pair<double, double> block_band(const StripBlockSchedule& schedule, int i, long long k, long long h)
{
    const double I = schedule.at(i);
    const double m = strip_block_cells(schedule, i);
    const double base = 2.0 * (k - 1) * I * I;
    return {(base + h - 1) / m, (base + h) / m};
}

// Query box covering every point of the given height band.
inline Box horizontal_band_box(double y0, double y1)
{
    return Box{make_vec({-1.0, y0}), make_vec({1.0, y1}), false};
}

// ---------------------------------------------------------------------------
// Straight-line exclusion checks for the strip/block construction

struct CurveExclusionReport {
    int level = 0;
    int trials = 0;
    std::size_t steep_lines = 0;
    std::size_t shallow_lines = 0;
    std::size_t steep_violations = 0;     // lines meeting both end blocks of consecutive strips
    std::size_t shallow_violations = 0;   // lines meeting more than two strips of one cell
    std::size_t junctions_checked = 0;
    int max_strips_hit = 0;
    std::size_t violations() const { return steep_violations + shallow_violations; }
};

namespace detail {

// Does the line through p with direction d meet the closed box?
inline bool line_meets_box(const Vec& p, const Vec& d, const Box& b)
{
    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 2; ++a) {
        if (d[a] == 0.0) {
            if (p[a] < b.lo[a] || p[a] > b.hi[a])
                return false;
            continue;
        }
        double u = (b.lo[a] - p[a]) / d[a];
        double v = (b.hi[a] - p[a]) / d[a];
        if (u > v)
            std::swap(u, v);
        t0 = std::max(t0, u);
        t1 = std::min(t1, v);
    }
    return t0 <= t1;
}

} // namespace detail

// Level-(level+1) geometry of the strip/block construction, in the frame
// of one level-`level` cell (all cells are similar). Steep lines have
// |dy| >= |d|/3 and are tested against the top block of each strip and
// the bottom block of the next; shallow lines have |dx| >= |d|/3 and may
// meet at most two strips of the cell.
inline CurveExclusionReport verify_curve_exclusion(const StripBlockSpec& spec, int level, int trials,
                                                   std::uint64_t seed)
{
    if (level < 1 || level >= spec.depth)
        throw ArgumentError("verify_curve_exclusion: level must lie in [1, depth)");
    if (trials < 1)
        throw ArgumentError("verify_curve_exclusion: trials must be positive");
    const StripBlockGenerator local(StripBlockSpec{spec.schedule.offset_by(level), 2});
    const int I = spec.schedule.at(level + 1);
    const Node cell = local.root();
    std::vector<Node> kids;
    local.children(cell, kids);
    const int per_strip = 2 * I * I;
    std::vector<Box> strips;
    for (int k = 0; k < I; ++k) {
        const Box& first = std::get<Box>(kids[k * per_strip].region);
        const Box& last = std::get<Box>(kids[k * per_strip + per_strip - 1].region);
        strips.push_back(Box{first.lo, make_vec({last.hi[0], last.hi[1]}), false});
    }

    CurveExclusionReport rep;
    rep.level = level;
    rep.trials = trials;
    Rng rng = make_rng(seed);
    const double min_sin = 1.0 / 3.0;
    for (int t = 0; t < trials; ++t) {
        const bool steep = t % 2 == 0;
        // Direction angle from the x-axis, uniform over the admissible class.
        const double lo_angle = std::asin(min_sin);
        double phi;
        if (steep)
            phi = lo_angle + (std::numbers::pi - 2.0 * lo_angle) * uniform01(rng);
        else
            phi = -(std::numbers::pi / 2 - std::asin(min_sin)) +
                  (std::numbers::pi - 2.0 * std::asin(min_sin)) * uniform01(rng);
        const Vec d = make_vec({std::cos(phi), std::sin(phi)});
        if (steep) {
            ++rep.steep_lines;
            if (I < 2)
                continue;
            // Anchor the line in a random end block so junctions are probed.
            const int k = static_cast<int>(uniform01(rng) * (I - 1));
            const Box& lower = std::get<Box>(kids[k * per_strip + per_strip - 1].region);
            const Box& upper = std::get<Box>(kids[(k + 1) * per_strip].region);
            const Box& anchor = uniform01(rng) < 0.5 ? lower : upper;
            const Vec p = make_vec({anchor.lo[0] + (anchor.hi[0] - anchor.lo[0]) * uniform01(rng),
                                    anchor.lo[1] + (anchor.hi[1] - anchor.lo[1]) * uniform01(rng)});
            bool bad = false;
            for (int j = 0; j + 1 < I; ++j) {
                ++rep.junctions_checked;
                const Box& lo_b = std::get<Box>(kids[j * per_strip + per_strip - 1].region);
                const Box& up_b = std::get<Box>(kids[(j + 1) * per_strip].region);
                if (detail::line_meets_box(p, d, lo_b) && detail::line_meets_box(p, d, up_b))
                    bad = true;
            }
            if (bad)
                ++rep.steep_violations;
        } else {
            ++rep.shallow_lines;
            const int k = static_cast<int>(uniform01(rng) * I);
            const Box& s = strips[k];
            const Vec p = make_vec({s.lo[0] + (s.hi[0] - s.lo[0]) * uniform01(rng),
                                    s.lo[1] + (s.hi[1] - s.lo[1]) * uniform01(rng)});
            int hits = 0;
            for (const Box& b : strips)
                if (detail::line_meets_box(p, d, b))
                    ++hits;
            rep.max_strips_hit = std::max(rep.max_strips_hit, hits);
            if (hits > 2)
                ++rep.shallow_violations;
        }
    }
    return rep;
}

// Largest |dy|/|d| over segments joining the top block of a strip to the
// bottom block of the next one at level (level+1). Steep-line exclusion
// holds for straight lines exactly when this is below 1/3.
inline double junction_max_steepness(const StripBlockSpec& spec, int level)
{
    const StripBlockGenerator local(StripBlockSpec{spec.schedule.offset_by(level), 2});
    const int I = spec.schedule.at(level + 1);
    if (I < 2)
        return 0.0;
    std::vector<Node> kids;
    local.children(local.root(), kids);
    const int per_strip = 2 * I * I;
    const Box& lower = std::get<Box>(kids[per_strip - 1].region);
    const Box& upper = std::get<Box>(kids[per_strip].region);
    const double dy = upper.hi[1] - lower.lo[1];
    const double gap = std::max(0.0, std::max(upper.lo[0] - lower.hi[0], lower.lo[0] - upper.hi[0]));
    return dy / std::hypot(dy, gap);
}

} // namespace conelab
