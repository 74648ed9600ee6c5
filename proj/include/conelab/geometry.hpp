#pragma once

// Cone predicates, linear subspaces with the Grassmannian metric, and
// finite covering nets of the sphere and of G(n, n-m).

#include "conelab/core.hpp"
#include "conelab/random.hpp"

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace conelab {

using Point = Vec;

inline constexpr double kUnitTolerance = 1e-12;

class UnitVector {
public:
    // Throws unless the coordinates already have unit norm within 1e-12.
    explicit UnitVector(Vec coords) : coords_(std::move(coords))
    {
        if (coords_.size() < 1 || std::abs(coords_.norm() - 1.0) > kUnitTolerance)
            throw ArgumentError("UnitVector: coordinates do not have unit norm");
    }

    static UnitVector normalized(const Vec& v)
    {
        const double norm = v.norm();
        if (!(norm > 0.0) || !std::isfinite(norm))
            throw ArgumentError("UnitVector: cannot normalize a zero or non-finite vector");
        return UnitVector(v / norm);
    }

    static UnitVector axis(int n, int i)
    {
        Vec v = Vec::Zero(n);
        v[i] = 1.0;
        return UnitVector(v);
    }

    const Vec& coords() const noexcept { return coords_; }
    int dimension() const noexcept { return static_cast<int>(coords_.size()); }
    UnitVector operator-() const { return UnitVector(-coords_); }

private:
    Vec coords_;
};

// A linear subspace V in G(n, n-m), stored as an orthonormal frame (n x (n-m)).
class Subspace {
public:
    // The frame columns must be orthonormal within 1e-12.
    static Subspace from_frame(const Mat& frame)
    {
        const auto n = frame.rows();
        const auto d = frame.cols();
        if (n < 1 || d < 1 || d > n)
            throw ArgumentError("Subspace: frame must be n x d with 1 <= d <= n");
        const Mat gram = frame.transpose() * frame;
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) {
                const double expect = i == j ? 1.0 : 0.0;
                if (std::abs(gram(i, j) - expect) > kUnitTolerance)
                    throw ArgumentError("Subspace: frame is not orthonormal");
            }
        }
        return Subspace(frame);
    }

    // Orthonormalizes the columns of `basis` (which must have full column rank).
    static Subspace span(const Mat& basis)
    {
        const auto n = basis.rows();
        const auto d = basis.cols();
        if (n < 1 || d < 1 || d > n)
            throw ArgumentError("Subspace::span: basis must be n x d with 1 <= d <= n");
        Eigen::HouseholderQR<Mat> qr(basis);
        const Mat r = qr.matrixQR().topRows(d).template triangularView<Eigen::Upper>();
        for (Eigen::Index i = 0; i < d; ++i) {
            if (std::abs(r(i, i)) < 1e-12 * std::max(1.0, basis.norm()))
                throw ArgumentError("Subspace::span: basis is rank deficient");
        }
        const Mat q = qr.householderQ() * Mat::Identity(n, d);
        return Subspace(q);
    }

    static Subspace whole(int n) { return Subspace(Mat::Identity(n, n)); }

    static Subspace line(const UnitVector& direction)
    {
        Mat f(direction.dimension(), 1);
        f.col(0) = direction.coords();
        return Subspace(f);
    }

    // Gaussian frame followed by orthonormalization; rotation invariant by construction.
    static Subspace random(int n, int codim, Rng& rng)
    {
        if (codim < 0 || codim > n - 1)
            throw ArgumentError("Subspace::random: codimension must lie in [0, n-1]");
        const int d = n - codim;
        for (;;) {
            Mat g(n, d);
            for (int j = 0; j < d; ++j)
                g.col(j) = gaussian_vec(n, rng);
            try {
                return span(g);
            } catch (const ArgumentError&) {
                continue;
            }
        }
    }

    int ambient() const noexcept { return static_cast<int>(frame_.rows()); }
    int dim() const noexcept { return static_cast<int>(frame_.cols()); }
    int codim() const noexcept { return ambient() - dim(); }
    bool is_whole_space() const noexcept { return codim() == 0; }
    const Mat& frame() const noexcept { return frame_; }

    Vec project(const Vec& y) const
    {
        require_dimension(frame_.col(0), y, "Subspace::project");
        return frame_ * (frame_.transpose() * y);
    }

    double distance_to(const Vec& y) const { return (y - project(y)).norm(); }

    // Orthonormal frame of the orthogonal complement (n x m); empty when m = 0.
    Mat complement_frame() const
    {
        const int n = ambient();
        const int d = dim();
        if (d == n)
            return Mat(n, 0);
        Eigen::HouseholderQR<Mat> qr(frame_);
        const Mat full = qr.householderQ() * Mat::Identity(n, n);
        return full.rightCols(n - d);
    }

private:
    explicit Subspace(Mat frame) : frame_(std::move(frame)) {}

    Mat frame_;
};

// ---------------------------------------------------------------------------
// Cone predicates. All inequalities are strict, so y = x is never inside.

// H(x, theta, alpha): (y - x) . theta > alpha |y - x|
inline bool in_almost_halfspace(const Point& x, const UnitVector& theta, double alpha, const Point& y)
{
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw ArgumentError("in_almost_halfspace: alpha must lie in [0, 1]");
    require_dimension(x, y, "in_almost_halfspace");
    require_dimension(x, theta.coords(), "in_almost_halfspace");
    const Vec d = y - x;
    return d.dot(theta.coords()) > alpha * d.norm();
}

// X+(x, theta, alpha) = H(x, theta, sqrt(1 - alpha^2))
inline bool in_one_sided_cone(const Point& x, const UnitVector& theta, double alpha, const Point& y)
{
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ArgumentError("in_one_sided_cone: alpha must lie in (0, 1]");
    return in_almost_halfspace(x, theta, std::sqrt((1.0 - alpha) * (1.0 + alpha)), y);
}

// X(x, V, alpha): dist(y - x, V) < alpha |y - x|
inline bool in_plane_cone(const Point& x, const Subspace& plane, double alpha, const Point& y)
{
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ArgumentError("in_plane_cone: alpha must lie in (0, 1]");
    require_dimension(x, y, "in_plane_cone");
    if (plane.ambient() != x.size())
        throw ArgumentError("in_plane_cone: dimension mismatch");
    const Vec d = y - x;
    return plane.distance_to(d) < alpha * d.norm();
}

// Returns (proj_V y, y - proj_V y).
inline std::pair<Point, Point> orthogonal_project(const Subspace& plane, const Point& y)
{
    if (plane.ambient() != y.size())
        throw ArgumentError("orthogonal_project: dimension mismatch");
    Vec p = plane.project(y);
    Vec r = y - p;
    return {std::move(p), std::move(r)};
}

// d(V, W) = sup over unit x in V of dist(x, W), i.e. the sine of the largest
// principal angle, evaluated as the spectral norm of (I - P_W) V.
inline double subspace_distance(const Subspace& v, const Subspace& w)
{
    if (v.ambient() != w.ambient())
        throw ArgumentError("subspace_distance: ambient dimension mismatch");
    if (v.codim() != w.codim())
        throw ArgumentError("subspace_distance: codimension mismatch");
    if (v.is_whole_space())
        return 0.0;
    const Mat residual = v.frame() - w.frame() * (w.frame().transpose() * v.frame());
    Eigen::JacobiSVD<Mat> svd(residual);
    return std::min(1.0, svd.singularValues()(0));
}

// ---------------------------------------------------------------------------
// Covering nets.

struct DirectionNet {
    std::vector<UnitVector> directions;
    double beta = 0.0;
    double alpha = 0.0;

    std::size_t size() const noexcept { return directions.size(); }

    // Angular radius of the caps H(0, theta_i, beta).
    double cap_angle() const { return std::acos(beta); }
};

// beta = cos(arccos(alpha/2) - arccos(alpha))
inline double direction_net_beta(double alpha)
{
    return std::cos(std::acos(alpha / 2.0) - std::acos(alpha));
}

// Index of the direction closest (in angle) to `theta`.
inline std::size_t nearest_direction(const DirectionNet& net, const Vec& theta)
{
    std::size_t best = 0;
    double best_dot = -2.0;
    for (std::size_t i = 0; i < net.directions.size(); ++i) {
        const double dot = net.directions[i].coords().dot(theta);
        if (dot > best_dot) {
            best_dot = dot;
            best = i;
        }
    }
    return best;
}

// Directions theta_1..theta_K whose open caps H(0, theta_i, beta) cover S^{n-1}.
// n = 1 and n = 2 are exact; n >= 3 uses a seeded greedy net whose acceptance
// radius is 90% of the cap angle and stops after `streak` consecutive rejections.
inline DirectionNet build_direction_net(int n, double alpha, std::uint64_t seed = 0, int streak = 10000)
{
    if (n < 1 || n > kMaxDimension)
        throw ArgumentError("build_direction_net: unsupported dimension");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ArgumentError("build_direction_net: alpha must lie in (0, 1]");
    DirectionNet net;
    net.alpha = alpha;
    net.beta = direction_net_beta(alpha);
    const double gamma = std::acos(alpha / 2.0) - std::acos(alpha);

    if (n == 1) {
        net.directions.push_back(UnitVector(make_vec({1.0})));
        net.directions.push_back(UnitVector(make_vec({-1.0})));
        return net;
    }
    if (n == 2) {
        // Covering radius pi/K must stay strictly below gamma.
        const int k = static_cast<int>(std::floor(std::numbers::pi / gamma)) + 1;
        for (int i = 0; i < k; ++i) {
            const double phi = 2.0 * std::numbers::pi * i / k;
            net.directions.push_back(UnitVector::normalized(make_vec({std::cos(phi), std::sin(phi)})));
        }
        return net;
    }

    Rng rng = make_rng(seed, 0xd1);
    const double accept = 0.9 * gamma;
    for (int i = 0; i < n; ++i) {
        net.directions.push_back(UnitVector::axis(n, i));
        net.directions.push_back(-UnitVector::axis(n, i));
    }
    int rejections = 0;
    while (rejections < streak) {
        Vec theta = random_unit(n, rng);
        bool covered = false;
        for (const auto& d : net.directions) {
            if (unit_angle(d.coords(), theta) < accept) {
                covered = true;
                break;
            }
        }
        if (covered) {
            ++rejections;
        } else {
            net.directions.push_back(UnitVector(theta));
            rejections = 0;
        }
    }
    return net;
}

struct SubspaceNet {
    std::vector<Subspace> planes;
    double alpha = 0.0;

    std::size_t size() const noexcept { return planes.size(); }
};

inline std::size_t nearest_plane(const SubspaceNet& net, const Subspace& v)
{
    std::size_t best = 0;
    double best_d = 2.0;
    for (std::size_t j = 0; j < net.planes.size(); ++j) {
        const double d = subspace_distance(v, net.planes[j]);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

// Greedy cover of G(n, n-m) by d-balls of radius alpha/2. A candidate is kept
// when it is at least `shrink * alpha/2` from every kept plane, which leaves
// slack between the acceptance radius and the covering radius.
inline SubspaceNet build_subspace_net(int n, int m, double alpha, std::uint64_t seed = 0, int streak = 10000,
                                      double shrink = 0.9)
{
    if (n < 1 || n > kMaxDimension)
        throw ArgumentError("build_subspace_net: unsupported dimension");
    if (m < 0 || m > n - 1)
        throw ArgumentError("build_subspace_net: codimension must lie in [0, n-1]");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ArgumentError("build_subspace_net: alpha must lie in (0, 1]");
    SubspaceNet net;
    net.alpha = alpha;
    if (m == 0) {
        net.planes.push_back(Subspace::whole(n));
        return net;
    }
    Rng rng = make_rng(seed, 0x5b);
    const double accept = shrink * alpha / 2.0;
    int rejections = 0;
    while (rejections < streak) {
        Subspace cand = Subspace::random(n, m, rng);
        bool covered = false;
        for (const auto& p : net.planes) {
            if (subspace_distance(cand, p) < accept) {
                covered = true;
                break;
            }
        }
        if (covered) {
            ++rejections;
        } else {
            net.planes.push_back(std::move(cand));
            rejections = 0;
        }
    }
    return net;
}

} // namespace conelab
