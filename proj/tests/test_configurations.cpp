#include "conelab/configurations.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace conelab;

namespace {

// True when some direction on a fine grid of the circle makes (a; f, b) a
// cone triple.
bool planar_triple_by_scan(const std::vector<Point>& pts, double alpha, int steps = 20000)
{
    for (std::size_t a = 0; a < pts.size(); ++a)
        for (std::size_t f = 0; f < pts.size(); ++f)
            for (std::size_t b = 0; b < pts.size(); ++b) {
                if (a == f || a == b || f == b)
                    continue;
                for (int s = 0; s < steps; ++s) {
                    const double phi = 2.0 * std::numbers::pi * s / steps;
                    const UnitVector th = UnitVector::normalized(make_vec({std::cos(phi), std::sin(phi)}));
                    if (in_one_sided_cone(pts[a], th, alpha, pts[f]) && in_one_sided_cone(pts[a], -th, alpha, pts[b]))
                        return true;
                }
            }
    return false;
}

} // namespace

TEST(FindConeTriple, LineAlwaysHasOne)
{
    Rng rng = make_rng(1);
    for (int s = 0; s < 1000; ++s) {
        std::vector<Point> pts;
        for (int i = 0; i < 3; ++i)
            pts.push_back(make_vec({uniform01(rng)}));
        const double alpha = 0.01 + 0.99 * uniform01(rng);
        const auto t = find_cone_triple(pts, alpha);
        ASSERT_TRUE(t.has_value());
        EXPECT_TRUE(is_cone_triple(pts, *t, alpha));
        const double lo = std::min({pts[0][0], pts[1][0], pts[2][0]});
        const double hi = std::max({pts[0][0], pts[1][0], pts[2][0]});
        EXPECT_GT(pts[t->apex][0], lo);
        EXPECT_LT(pts[t->apex][0], hi);
    }
}

TEST(FindConeTriple, PlaneAtAlphaOneAlwaysHasOne)
{
    Rng rng = make_rng(2);
    for (int s = 0; s < 1000; ++s) {
        std::vector<Point> pts;
        for (int i = 0; i < 3; ++i)
            pts.push_back(gaussian_vec(2, rng));
        const auto t = find_cone_triple(pts, 1.0);
        ASSERT_TRUE(t.has_value());
        EXPECT_TRUE(is_cone_triple(pts, *t, 1.0));
    }
}

TEST(FindConeTriple, EquilateralTriangleHasNoneForNarrowCones)
{
    // From each vertex the other two are 60 degrees apart, far from opposite.
    const std::vector<Point> pts{make_vec({0.0, 0.0}), make_vec({1.0, 0.0}), make_vec({0.5, std::sqrt(3.0) / 2.0})};
    EXPECT_FALSE(find_cone_triple(pts, 0.1).has_value());
    EXPECT_FALSE(planar_triple_by_scan(pts, 0.1));
    EXPECT_TRUE(find_cone_triple(pts, 1.0).has_value());
}

TEST(FindConeTriple, AgreesWithDirectionScan)
{
    Rng rng = make_rng(3);
    for (int s = 0; s < 40; ++s) {
        std::vector<Point> pts;
        for (int i = 0; i < 3; ++i)
            pts.push_back(gaussian_vec(2, rng));
        const double alpha = 0.1 + 0.5 * uniform01(rng);
        const bool found = find_cone_triple(pts, alpha).has_value();
        EXPECT_EQ(found, planar_triple_by_scan(pts, alpha, 4000)) << s;
    }
}

TEST(FindConeTriple, Rejections)
{
    EXPECT_THROW(find_cone_triple({make_vec({0.0}), make_vec({1.0})}, 0.5), ArgumentError);
    EXPECT_THROW(find_cone_triple({make_vec({0.0}), make_vec({1.0}), make_vec({2.0})}, 0.0), ArgumentError);
}

TEST(SearchCounterexample, NoneOnTheLine)
{
    EXPECT_FALSE(search_counterexample_set(1, 0.3, 3, 10000, 4).has_value());
}

TEST(SearchCounterexample, NoneInThePlaneAtAlphaOne)
{
    EXPECT_FALSE(search_counterexample_set(2, 1.0, 3, 10000, 5).has_value());
}

TEST(SearchCounterexample, FoundInThePlaneForSmallAlpha)
{
    const auto set = search_counterexample_set(2, 0.1, 3, 10000, 6);
    ASSERT_TRUE(set.has_value());
    ASSERT_EQ(set->size(), 3u);
    EXPECT_FALSE(planar_triple_by_scan(*set, 0.1));
    const DirectionNet net = build_direction_net(2, 0.1 / 4.0);
    EXPECT_FALSE(find_cone_triple(*set, 0.1, &net).has_value());
}

TEST(SearchCounterexample, TripleFreeSetsStayTripleFreeUnderRemoval)
{
    const auto set = search_counterexample_set(2, 0.05, 4, 20000, 7);
    ASSERT_TRUE(set.has_value());
    for (std::size_t drop = 0; drop < set->size(); ++drop) {
        std::vector<Point> sub;
        for (std::size_t i = 0; i < set->size(); ++i)
            if (i != drop)
                sub.push_back((*set)[i]);
        EXPECT_FALSE(find_cone_triple(sub, 0.05).has_value());
    }
}

TEST(SeparationConstant, KnownValues)
{
    const SeparationConstant one = compute_t(1.0);
    EXPECT_GE(one.t, 2.0);
    EXPECT_LE(one.t, 2.001);
    EXPECT_DOUBLE_EQ(one.epsilon, 0.5);
    EXPECT_TRUE(one.all_ok());

    const SeparationConstant six = compute_t(0.6);
    EXPECT_GE(six.t, 18.0);
    EXPECT_LE(six.t, 18.001);
    EXPECT_NEAR(six.beta0, 0.8, 1e-15);
    EXPECT_TRUE(six.all_ok());

    EXPECT_THROW(compute_t(0.0), DomainError);
    EXPECT_THROW(compute_t(1.2), DomainError);
}

TEST(SeparationConstant, JustBelowFailsACondition)
{
    for (double alpha : {0.3, 0.6, 1.0}) {
        const SeparationConstant s = compute_t(alpha);
        EXPECT_FALSE(check_separation(alpha, s.t * (1.0 - 1e-4)).all_ok()) << alpha;
    }
}

TEST(SeparatedInclusion, CollinearBallsAlongAxis)
{
    const UnitVector th = UnitVector::axis(2, 0);
    EXPECT_TRUE(check_separated_inclusion(make_vec({0, 0}), 0.1, make_vec({10, 0}), 0.1, th, 0.5, compute_t(0.5).t,
                                          1000, 1));
}

TEST(SeparatedInclusion, RejectsViolatedPreconditions)
{
    const UnitVector th = UnitVector::axis(2, 0);
    const double t = compute_t(0.5).t;
    EXPECT_THROW(check_separated_inclusion(make_vec({0, 0}), 1.0, make_vec({2, 0}), 1.0, th, 0.5, t, 10, 1),
                 PreconditionError);
    EXPECT_THROW(check_separated_inclusion(make_vec({0, 0}), 0.01, make_vec({0, 100}), 0.01, th, 0.5, t, 10, 1),
                 PreconditionError);
}

TEST(SeparatedInclusion, RandomConfigurationsNeverFail)
{
    for (double alpha : {0.3, 0.6, 1.0}) {
        const double t = compute_t(alpha).t;
        Rng rng = make_rng(100, static_cast<std::uint64_t>(alpha * 10));
        std::size_t violations = 0;
        for (int c = 0; c < 1000; ++c) {
            const SeparatedConfig cfg = random_separated_config(2 + c % 2, alpha, t, rng);
            violations += separated_inclusion_counts(cfg.x0, cfg.rx, cfg.y0, cfg.ry, cfg.theta, alpha, t, 1000,
                                                     static_cast<std::uint64_t>(c))
                              .violations;
        }
        EXPECT_EQ(violations, 0u) << alpha;
    }
}
