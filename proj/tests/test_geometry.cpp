#include "conelab/geometry.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace conelab;

namespace {

UnitVector e1() { return UnitVector::axis(2, 0); }

Subspace line_at(double angle)
{
    return Subspace::line(UnitVector(make_vec({std::cos(angle), std::sin(angle)})));
}

} // namespace

TEST(AlmostHalfspace, ExamplePoints)
{
    const Point o = make_vec({0, 0});
    EXPECT_TRUE(in_almost_halfspace(o, e1(), 0.5, make_vec({1, 0})));
    EXPECT_FALSE(in_almost_halfspace(o, e1(), 0.5, o));
    EXPECT_FALSE(in_almost_halfspace(o, e1(), 0.5, make_vec({0, 1})));
}

TEST(AlmostHalfspace, RejectsBadArguments)
{
    const Point o = make_vec({0, 0});
    EXPECT_THROW(in_almost_halfspace(o, e1(), 1.5, o), ArgumentError);
    EXPECT_THROW(in_almost_halfspace(o, e1(), 0.5, make_vec({1, 0, 0})), ArgumentError);
    EXPECT_THROW(UnitVector(make_vec({1, 1})), ArgumentError);
}

TEST(OneSidedCone, ExamplePoints)
{
    const Point o = make_vec({0, 0});
    EXPECT_TRUE(in_one_sided_cone(o, e1(), 0.6, make_vec({1, 0})));
    EXPECT_FALSE(in_one_sided_cone(o, e1(), 0.6, make_vec({0.8, 0.6})));
}

TEST(OneSidedCone, AlphaOneIsOpenHalfspace)
{
    Rng rng = make_rng(3);
    const Point o = make_vec({0, 0});
    for (int s = 0; s < 2000; ++s) {
        const Vec y = gaussian_vec(2, rng);
        EXPECT_EQ(in_one_sided_cone(o, e1(), 1.0, y), y[0] > 0.0);
    }
    EXPECT_FALSE(in_one_sided_cone(o, e1(), 1.0, make_vec({0, 1})));
}

TEST(OneSidedCone, MatchesAlmostHalfspaceAtComplementaryAperture)
{
    Rng rng = make_rng(11);
    for (int s = 0; s < 20000; ++s) {
        const int n = 1 + s % 4;
        const Vec x = gaussian_vec(n, rng);
        const UnitVector theta(random_unit(n, rng));
        const double alpha = 0.01 + 0.99 * uniform01(rng);
        const Vec y = x + gaussian_vec(n, rng);
        EXPECT_EQ(in_one_sided_cone(x, theta, alpha, y),
                  in_almost_halfspace(x, theta, std::sqrt(1.0 - alpha * alpha), y));
    }
}

TEST(AlmostHalfspace, OppositeDirectionsAreExclusive)
{
    Rng rng = make_rng(12);
    for (int s = 0; s < 20000; ++s) {
        const int n = 1 + s % 4;
        const Vec x = gaussian_vec(n, rng);
        const UnitVector theta(random_unit(n, rng));
        const double alpha = uniform01(rng);
        const Vec y = x + gaussian_vec(n, rng);
        EXPECT_FALSE(in_almost_halfspace(x, theta, alpha, y) && in_almost_halfspace(x, -theta, alpha, y));
    }
}

// At most one of two opposite narrow cones meets a given almost-half-space:
// no sampled point lies in both intersections.
TEST(AlmostHalfspace, OppositeNarrowConesNeverBothMeetIt)
{
    Rng rng = make_rng(13);
    const Point o = make_vec({0, 0, 0});
    for (int s = 0; s < 20000; ++s) {
        const UnitVector zeta(random_unit(3, rng));
        const UnitVector theta(random_unit(3, rng));
        const double alpha = 0.05 + 0.9 * uniform01(rng);
        const Vec p = gaussian_vec(3, rng);
        const bool first = in_one_sided_cone(o, zeta, alpha, p) && in_almost_halfspace(o, theta, alpha, p);
        const bool second = in_one_sided_cone(o, -zeta, alpha, p) && in_almost_halfspace(o, theta, alpha, p);
        EXPECT_FALSE(first && second);
    }
}

TEST(PlaneCone, ExamplePoints)
{
    const Point o = make_vec({0, 0});
    const Subspace xaxis = line_at(0.0);
    for (double alpha : {1e-6, 0.3, 1.0}) {
        EXPECT_TRUE(in_plane_cone(o, xaxis, alpha, make_vec({2, 0})));
        EXPECT_FALSE(in_plane_cone(o, xaxis, alpha, make_vec({0, 2})));
        EXPECT_FALSE(in_plane_cone(o, xaxis, alpha, o));
    }
}

TEST(SubspaceDistance, Examples)
{
    EXPECT_NEAR(subspace_distance(line_at(0.4), line_at(0.4)), 0.0, 1e-12);
    EXPECT_NEAR(subspace_distance(line_at(0.0), line_at(std::numbers::pi / 2)), 1.0, 1e-12);
    for (double phi : {0.1, 0.5, 1.0, 1.4}) {
        const double d = subspace_distance(line_at(0.2), line_at(0.2 + phi));
        EXPECT_NEAR(d, std::sin(phi), 1e-12);
        EXPECT_NEAR(d, oracle::line_distance_by_sampling(0.2, 0.2 + phi), 1e-9);
    }
}

TEST(SubspaceDistance, IsAMetricOnSampledTriples)
{
    Rng rng = make_rng(21);
    for (int s = 0; s < 3000; ++s) {
        const int n = 2 + s % 3;
        const int m = 1 + s % (n - 1);
        const Subspace a = Subspace::random(n, m, rng);
        const Subspace b = Subspace::random(n, m, rng);
        const Subspace c = Subspace::random(n, m, rng);
        const double ab = subspace_distance(a, b);
        EXPECT_NEAR(ab, subspace_distance(b, a), 1e-9);
        EXPECT_LE(ab, subspace_distance(a, c) + subspace_distance(c, b) + 1e-9);
        EXPECT_NEAR(subspace_distance(a, a), 0.0, 1e-9);
    }
}

TEST(SubspaceDistance, RejectsMismatchedShapes)
{
    Rng rng = make_rng(1);
    EXPECT_THROW(subspace_distance(Subspace::random(3, 1, rng), Subspace::random(3, 2, rng)), ArgumentError);
    EXPECT_THROW(subspace_distance(Subspace::random(3, 1, rng), Subspace::random(2, 1, rng)), ArgumentError);
}

TEST(OrthogonalProject, Examples)
{
    const Subspace xaxis = line_at(0.0);
    auto [p, q] = orthogonal_project(xaxis, make_vec({3, 4}));
    EXPECT_NEAR((p - make_vec({3, 0})).norm(), 0.0, 1e-12);
    EXPECT_NEAR((q - make_vec({0, 4})).norm(), 0.0, 1e-12);

    auto [p2, q2] = orthogonal_project(xaxis, make_vec({-2, 0}));
    EXPECT_NEAR((p2 - make_vec({-2, 0})).norm(), 0.0, 1e-12);
    EXPECT_NEAR(q2.norm(), 0.0, 1e-12);

    auto [p3, q3] = orthogonal_project(xaxis, make_vec({0, 5}));
    EXPECT_NEAR(p3.norm(), 0.0, 1e-12);
    EXPECT_NEAR((q3 - make_vec({0, 5})).norm(), 0.0, 1e-12);
}

TEST(DirectionNet, OneDimensional)
{
    for (double alpha : {0.1, 0.5, 1.0}) {
        const DirectionNet net = build_direction_net(1, alpha);
        ASSERT_EQ(net.size(), 2u);
        EXPECT_EQ(net.directions[0].coords()[0] * net.directions[1].coords()[0], -1.0);
    }
}

TEST(DirectionNet, BetaAtAlphaOne)
{
    EXPECT_NEAR(direction_net_beta(1.0), 0.5, 1e-15);
}

TEST(DirectionNet, PlanarNetIsSmallAndCovers)
{
    const double alpha = 0.5;
    const DirectionNet net = build_direction_net(2, alpha);
    const double beta = net.beta;
    EXPECT_LE(net.size(), static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi / std::acos(beta))));
    Rng rng = make_rng(31);
    int failures = 0;
    for (int s = 0; s < 100000; ++s) {
        const Vec theta = random_unit(2, rng);
        const std::size_t j = nearest_direction(net, theta);
        if (!(net.directions[j].coords().dot(theta) > beta))
            ++failures;
    }
    EXPECT_EQ(failures, 0);
}

TEST(DirectionNet, ThreeDimensionalNetCovers)
{
    const double alpha = 0.7;
    const DirectionNet net = build_direction_net(3, alpha, 5, 4000);
    Rng rng = make_rng(32);
    int failures = 0;
    for (int s = 0; s < 100000; ++s) {
        const Vec theta = random_unit(3, rng);
        if (!(net.directions[nearest_direction(net, theta)].coords().dot(theta) > net.beta))
            ++failures;
    }
    EXPECT_EQ(failures, 0);
}

TEST(SubspaceNet, WholeSpaceWhenCodimensionZero)
{
    const SubspaceNet net = build_subspace_net(3, 0, 0.5);
    ASSERT_EQ(net.size(), 1u);
    EXPECT_TRUE(net.planes[0].is_whole_space());
    Rng rng = make_rng(2);
    for (int s = 0; s < 100; ++s)
        EXPECT_TRUE(in_plane_cone(make_vec({0, 0, 0}), net.planes[0], 0.01, gaussian_vec(3, rng)));
}

TEST(SubspaceNet, PlanarLinesAreSeparatedAndCover)
{
    const double alpha = 0.5;
    const SubspaceNet net = build_subspace_net(2, 1, alpha, 7);
    for (std::size_t a = 0; a < net.size(); ++a)
        for (std::size_t b = a + 1; b < net.size(); ++b)
            EXPECT_GE(subspace_distance(net.planes[a], net.planes[b]), 0.9 * alpha / 2.0);
    Rng rng = make_rng(33);
    int failures = 0;
    for (int s = 0; s < 100000; ++s) {
        const Subspace v = Subspace::random(2, 1, rng);
        if (!(subspace_distance(v, net.planes[nearest_plane(net, v)]) < alpha / 2.0))
            ++failures;
    }
    EXPECT_EQ(failures, 0);
}

// Points of the half-aperture cone around a net plane close to V lie in
// the full-aperture cone around V.
TEST(SubspaceNet, NarrowConeAroundNetPlaneLiesInConeAroundPlane)
{
    const double alpha = 0.5;
    const SubspaceNet net = build_subspace_net(2, 1, alpha, 7);
    Rng rng = make_rng(34);
    const Point o = make_vec({0, 0});
    int failures = 0;
    int tested = 0;
    while (tested < 100000) {
        const Subspace v = Subspace::random(2, 1, rng);
        const Subspace& w = net.planes[nearest_plane(net, v)];
        const Vec y = gaussian_vec(2, rng);
        if (!in_plane_cone(o, w, alpha / 2.0, y))
            continue;
        ++tested;
        if (!in_plane_cone(o, v, alpha, y))
            ++failures;
    }
    EXPECT_EQ(failures, 0);
}
