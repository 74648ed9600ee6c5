#include "conelab/constructions.hpp"
#include "conelab/density.hpp"
#include "conelab/measure.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace conelab;
using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

TEST(BinomialMeasure, ChildWeights)
{
    const MeasureTree t = binomial_measure(BinomialSpec::harmonic());
    for (int level = 0; level < 6; ++level) {
        NodeAddress addr(level, 0);
        addr.push_back(0);
        const auto fan = branch_fan(t, addr);
        ASSERT_EQ(fan.size(), 2u);
        const double q = 1.0 / (level + 3.0);
        const double parent = fan[0].mass + fan[1].mass;
        EXPECT_NEAR(std::min(fan[0].mass, fan[1].mass) / parent, q, 1e-15);
    }
    EXPECT_EQ(audit_tree(t, 14), 0u);
}

TEST(BinomialMeasure, RejectsQOutsideUnitInterval)
{
    EXPECT_THROW(binomial_measure(BinomialSpec::constant(1.5)), ConstructionError);
}

TEST(RotatingBall, RadiiAreExact)
{
    EXPECT_EQ(rotating_ball_inverse_radius(2), cpp_int(16));
    EXPECT_EQ(rotating_ball_inverse_radius(3), cpp_int(288));
    for (int n = 1; n <= 64; ++n)
        EXPECT_EQ(rotating_ball_inverse_radius(n), oracle::inverse_rotating_radius(n));
    EXPECT_DOUBLE_EQ(rotating_ball_radius(2), 1.0 / 16.0);
    EXPECT_DOUBLE_EQ(rotating_ball_radius(3), 1.0 / 288.0);
}

TEST(RotatingBall, LevelTotals)
{
    for (int n : {1, 2, 3, 10, 40}) {
        const RotatingBallLevelTotals t = rotating_ball_level_totals(n);
        EXPECT_EQ(t.count, oracle::inverse_rotating_radius(n));
        EXPECT_EQ(t.radius_sum, cpp_rational(1));
        EXPECT_EQ(t.diameter_sum, cpp_rational(2));
    }
}

TEST(RotatingBall, FanSizesAndAudit)
{
    const MeasureTree t = rotating_ball_tree(6);
    EXPECT_EQ(t.children(t.root()).size(), 2u);
    EXPECT_EQ(branch_fan(t, {1, 3}).size(), 8u);
    EXPECT_EQ(branch_fan(t, {1, 3, 17}).size(), 18u);
    EXPECT_EQ(audit_tree(t, 4), 0u);
}

// Level-n balls in different parents are at least n R_n / 2 apart, checked
// against every level-n ball under the neighbouring level-(n-1) balls.
TEST(RotatingBall, CousinsAreSeparated)
{
    const MeasureTree t = rotating_ball_tree(10);
    Rng rng = make_rng(8);
    for (int n = 3; n <= 7; ++n) {
        const double rn = rotating_ball_radius(n);
        for (int trial = 0; trial < 6; ++trial) {
            NodeAddress grand;
            for (int i = 1; i <= n - 2; ++i)
                grand.push_back(static_cast<std::uint32_t>(uniform01(rng) * 2 * i * i));
            const Node g = node_at(t, grand);
            const std::vector<Node> parents = t.children(g);
            const std::size_t mine = static_cast<std::size_t>(uniform01(rng) * parents.size());
            const std::vector<Node> own = t.children(parents[mine]);
            double closest = 1e9;
            for (std::size_t p = 0; p < parents.size(); ++p) {
                if (p == mine)
                    continue;
                for (const Node& other : t.children(parents[p]))
                    for (const Node& me : own)
                        closest = std::min(closest, (region_center(other.region) - region_center(me.region)).norm());
            }
            EXPECT_GE(closest, n * rn / 2.0) << "n=" << n;
        }
    }
}

// The accumulated turn along a branch is a signed harmonic-type sum whose
// variance grows without bound.
TEST(RotatingBall, TurnVarianceGrows)
{
    const MeasureTree t = rotating_ball_tree(12);
    Rng rng = make_rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        NodeAddress addr;
        double expect = 0.0;
        for (int i = 1; i <= 8; ++i) {
            const auto j = static_cast<std::uint32_t>(uniform01(rng) * 2 * i * i);
            addr.push_back(j);
            expect += ((j + 1) % 2 == 0 ? 1.0 : -1.0) / std::sqrt(static_cast<double>(i));
        }
        EXPECT_NEAR(node_at(t, addr).turn, expect, 1e-12);
    }

    auto variance_at = [&](int depth) {
        Rng r = make_rng(10);
        double sum = 0.0;
        double sq = 0.0;
        const int branches = 1000;
        for (int b = 0; b < branches; ++b) {
            double turn = 0.0;
            for (int i = 1; i <= depth; ++i)
                turn += (uniform01(r) < 0.5 ? 1.0 : -1.0) / std::sqrt(static_cast<double>(i));
            sum += turn;
            sq += turn * turn;
        }
        return sq / branches - (sum / branches) * (sum / branches);
    };
    const double v10 = variance_at(10);
    const double v100 = variance_at(100);
    const double v1000 = variance_at(1000);
    EXPECT_GT(v100, v10);
    EXPECT_GT(v1000, v100);
    double harmonic = 0.0;
    for (int i = 1; i <= 1000; ++i)
        harmonic += 1.0 / i;
    EXPECT_NEAR(v1000 / harmonic, 1.0, 0.15);
}

TEST(StripBlock, FanOfSixteenAtTwo)
{
    const MeasureTree t = strip_block_tree(StripBlockSpec{StripBlockSchedule::original(), 3});
    EXPECT_EQ(t.children(t.root()).size(), 16u);
    EXPECT_EQ(audit_tree(t, 2), 0u);
    const MeasureTree s = strip_block_tree(StripBlockSpec{StripBlockSchedule::shifted(), 3});
    EXPECT_EQ(s.children(s.root()).size(), 16u);
    EXPECT_EQ(branch_fan(s, {3, 0}).size(), 54u);
    EXPECT_EQ(audit_tree(s, 3), 0u);
}

TEST(StripBlock, NormalizerAtTwoIsExact)
{
    EXPECT_EQ(strip_block_normalizer_exact(2), cpp_rational(32, 85));
    double total = 0.0;
    for (int k = 0; k < 2; ++k)
        for (int h = 0; h < 8; ++h)
            total += oracle::block_weight(2, h);
    EXPECT_NEAR(1.0 / total, 32.0 / 85.0, 1e-15);
    EXPECT_NEAR(schedule_constants(2).c, 32.0 / 85.0, 1e-15);
}

TEST(StripBlock, StepCountAtTwo)
{
    const ScheduleConstants sc = schedule_constants(2);
    ASSERT_TRUE(sc.n_exact.has_value());
    EXPECT_EQ(*sc.n_exact, 471u);
    const double a = (32.0 / 85.0) / 256.0;
    EXPECT_EQ(oracle::halving_steps(a), 471);
    EXPECT_LT(std::pow(1.0L - a, 471.0L), 0.5L);
    EXPECT_GE(std::pow(1.0L - a, 470.0L), 0.5L);
}

TEST(StripBlock, ConstantsAtThree)
{
    const ScheduleConstants sc = schedule_constants(3);
    EXPECT_NEAR(sc.c, 0.3402, 1e-4);
    double total = 0.0;
    for (int k = 0; k < 3; ++k)
        for (int h = 0; h < 18; ++h)
            total += oracle::block_weight(3, h);
    EXPECT_NEAR(sc.c, 1.0 / total, 1e-12);
    const double a = sc.c / (8.0 * std::pow(6.0, 7.5));
    const long long n = oracle::halving_steps(a);
    EXPECT_NEAR(static_cast<double>(sc.n_steps), static_cast<double>(n), 1.0);
    EXPECT_GT(n, 10000000);
    EXPECT_LT(n, 12000000);
}

TEST(StripBlock, StepCountsSitOnTheHalvingThreshold)
{
    for (int i = 2; i <= 4; ++i) {
        const ScheduleConstants sc = schedule_constants(i);
        const long double a = sc.c / (8.0L * std::pow(2.0L * i, i * i - 1.5L));
        const long double n = sc.n_steps;
        EXPECT_LT(n * std::log1p(-a), std::log(0.5L)) << i;
        EXPECT_GE((n - 1) * std::log1p(-a), std::log(0.5L)) << i;
    }
}

TEST(StripBlock, WeightsAreSymmetricInBlockIndex)
{
    for (int I = 2; I <= 6; ++I) {
        const std::vector<double> w = StripBlockGenerator::profile(I);
        const int per = 2 * I * I;
        double sum = 0.0;
        for (int k = 0; k < I; ++k)
            for (int h = 0; h < per; ++h) {
                EXPECT_NEAR(w[k * per + h], w[k * per + per - 1 - h], 1e-12);
                sum += w[k * per + h];
            }
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(StripBlock, RejectsScheduleValuesBelowTwo)
{
    EXPECT_THROW(StripBlockSchedule::custom({2, 1}), ConstructionError);
    EXPECT_THROW(StripBlockSchedule::custom({}), ConstructionError);
}

TEST(CurveExclusion, RandomLinesOnShiftedSchedule)
{
    const StripBlockSpec spec{StripBlockSchedule::shifted(), 6};
    for (int level = 1; level <= 3; ++level) {
        const CurveExclusionReport rep = verify_curve_exclusion(spec, level, 10000, 17);
        EXPECT_EQ(rep.violations(), 0u) << "level " << level;
        EXPECT_LE(rep.max_strips_hit, 2);
        EXPECT_LT(junction_max_steepness(spec, level), 1.0 / 3.0);
    }
}

TEST(CurveExclusion, AxisParallelLines)
{
    // Vertical lines never meet the top block of one strip and the bottom
    // block of the next: consecutive strips sit on opposite sides of the axis.
    const StripBlockGenerator gen(StripBlockSpec{StripBlockSchedule::shifted(), 2});
    std::vector<Node> kids;
    gen.children(gen.root(), kids);
    const int I = 2;
    const int per = 2 * I * I;
    const Box& lower = std::get<Box>(kids[per - 1].region);
    const Box& upper = std::get<Box>(kids[per].region);
    EXPECT_TRUE(lower.hi[0] < upper.lo[0] || upper.hi[0] < lower.lo[0]);
    // A horizontal line meets exactly one strip.
    for (double y : {0.1, 0.37, 0.8}) {
        int hits = 0;
        for (int k = 0; k < I; ++k) {
            const Box& first = std::get<Box>(kids[k * per].region);
            const Box& last = std::get<Box>(kids[k * per + per - 1].region);
            hits += first.lo[1] <= y && y <= last.hi[1];
        }
        EXPECT_LE(hits, 2);
        EXPECT_GE(hits, 1);
    }
}

// With I = 2 at consecutive levels the junction between strips is steeper
// than the 1/3 slope class, so steep straight lines can cross it.
TEST(CurveExclusion, RepeatedTwoAdmitsSteepCrossings)
{
    const StripBlockSpec spec{StripBlockSchedule::original(), 4};
    EXPECT_GT(junction_max_steepness(spec, 1), 1.0 / 3.0);
    EXPECT_GT(verify_curve_exclusion(spec, 1, 10000, 17).steep_violations, 0u);
}

// Best six intervals have length r/64, so the exact constant is
// (r/64) / (6r) = 1/384; the reported value uses a certified upper bound
// for the outer ball and sits just below it.
TEST(SixInterval, LebesgueConstantIsScaleAndPointFree)
{
    const MeasureTree leb = lebesgue_tree(2, 1);
    for (double x : {0.4, 0.5, 0.6}) {
        const double ref = six_interval_constant(leb, make_vec({x}), 0.125);
        EXPECT_NEAR(ref, 1.0 / 384.0, 5e-3 / 384.0) << x;
        EXPECT_LE(ref, 1.0 / 384.0);
        for (int l : {4, 5, 6})
            EXPECT_NEAR(six_interval_constant(leb, make_vec({x}), std::ldexp(1.0, -l)), ref, 1e-15) << x << " " << l;
    }
}

TEST(SixInterval, ConcentratedMeasureGivesZero)
{
    const MeasureTree t = concentrated_tree(make_vec({0.37}));
    EXPECT_EQ(six_interval_constant(t, make_vec({0.37}), 0.125), 0.0);
}

TEST(SixInterval, RejectsPlanarTrees)
{
    EXPECT_THROW(six_interval_constant(lebesgue_tree(2, 2), make_vec({0.5, 0.5}), 0.1), UnsupportedOperation);
}
