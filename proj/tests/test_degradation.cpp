#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fcsd/degradation.hpp"
#include "support.hpp"

using namespace fcsd;
using fcsd::testing::Rng;

namespace {

// Reference values below were evaluated with 40-digit arithmetic.
constexpr double kLifetimeHalfDod = 5632.815391317689;       // 12500 * 0.5^1.15
constexpr double kStepLossHalf = 3.605001850443321e-05;      // 0.5^1.15 / 12500
constexpr double kTwoHalfSteps = 7.210003700886642e-05;      // 2 * 0.5^1.15 / 12500

BatteryParams published() {
    BatteryParams b;
    b.c_life = 12500.0;
    b.k_p = 1.15;
    return b;
}

double total_weighted_depth(const std::vector<CycleRecord>& cycles) {
    double s = 0.0;
    for (const auto& c : cycles) s += c.weight * c.depth;
    return s;
}

double half_total_variation(const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) s += std::abs(v[i] - v[i - 1]);
    return 0.5 * s;
}

}  // namespace

TEST(Plet, LifetimeThroughput) {
    EXPECT_EQ(plet_lifetime_throughput(12500, 1.0, 1.15), 12500.0);
    EXPECT_EQ(plet_lifetime_throughput(0, 0.37, 1.15), 0.0);
    EXPECT_NEAR(plet_lifetime_throughput(12500, 0.5, 1.15), kLifetimeHalfDod, 1e-15 * kLifetimeHalfDod);
    EXPECT_THROW(plet_lifetime_throughput(1, 1.5, 1.15), InputError);
    EXPECT_THROW(plet_lifetime_throughput(1, -0.1, 1.15), InputError);
    EXPECT_THROW(plet_lifetime_throughput(-1, 0.5, 1.15), InputError);
}

TEST(Plet, StepLoss) {
    EXPECT_EQ(plet_step_loss(1.0, published()), 8.0e-5);
    EXPECT_EQ(plet_step_loss(0.0, published()), 0.0);
    EXPECT_NEAR(plet_step_loss(0.5, published()), kStepLossHalf, 1e-15 * kStepLossHalf);
    EXPECT_THROW(plet_step_loss(-1e-9, published()), InputError);
}

TEST(Plet, AccumulatedLoss) {
    const auto b = published();
    auto l = plet_accumulated_loss({{0.0, 0.5, 0.0}}, b);
    EXPECT_NEAR(l.total_loss, kTwoHalfSteps, 1e-15 * kTwoHalfSteps);
    ASSERT_EQ(l.per_step_loss.size(), 2u);
    EXPECT_EQ(l.total_loss, l.per_step_loss[0] + l.per_step_loss[1]);
    EXPECT_EQ(plet_accumulated_loss({{0.4, 0.4, 0.4}}, b).total_loss, 0.0);
    EXPECT_DOUBLE_EQ(plet_accumulated_loss({{0.0, 1.0, 0.0}}, b).total_loss, 1.6e-4);
}

TEST(Plet, StepLossStrictlyConvexAndIncreasing) {
    Rng rng(3);
    const auto b = published();
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform(0, 1), y = rng.uniform(0, 1);
        if (x == y) continue;
        const double mid = plet_step_loss(0.5 * (x + y), b);
        EXPECT_LT(mid, 0.5 * (plet_step_loss(x, b) + plet_step_loss(y, b)));
        EXPECT_EQ(plet_step_loss(std::min(x, y), b) < plet_step_loss(std::max(x, y), b), true);
    }
}

TEST(Plet, SplittingASwingReducesLoss) {
    // 2 (d/2)^k = 2^(1-k) d^k < d^k for k > 1.
    Rng rng(4);
    for (int i = 0; i < 1000; ++i) {
        BatteryParams b = published();
        b.k_p = rng.uniform(1.0 + 1e-6, 1.3);
        const double d = rng.uniform(1e-6, 1.0);
        EXPECT_LT(2.0 * plet_step_loss(d / 2, b), plet_step_loss(d, b));
    }
}

TEST(Plet, TimeReversalInvariant) {
    Rng rng(8);
    for (int i = 0; i < 100; ++i) {
        auto soc = rng.vec(30, 0, 1);
        const double forward = plet_accumulated_loss({soc}, published()).total_loss;
        std::reverse(soc.begin(), soc.end());
        EXPECT_NEAR(plet_accumulated_loss({soc}, published()).total_loss, forward, 1e-14 * forward);
    }
}

TEST(Rainflow, Extrema) {
    EXPECT_EQ(extract_extrema({0, 0.3, 0.7, 1.0}), (std::vector<double>{0, 1.0}));
    EXPECT_EQ(extract_extrema({0, 1, 1, 0.5, 0.5, 0.8}), (std::vector<double>{0, 1, 0.5, 0.8}));
    EXPECT_EQ(extract_extrema({0.2, 0.2}), (std::vector<double>{0.2}));
}

TEST(Rainflow, SinglePeakClosedIsOneFullCycle) {
    const auto c = rainflow_cycles({{0.0, 1.0, 0.0}}, ResidualPolicy::Close);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].depth, 1.0);
    EXPECT_EQ(c[0].weight, 1.0);
    EXPECT_EQ(rainflow_equivalent_loss(c, published()), 8.0e-5);
}

TEST(Rainflow, SinglePeakDefaultIsTwoHalfCycles) {
    const auto c = rainflow_cycles({{0.0, 1.0, 0.0}});
    ASSERT_EQ(c.size(), 2u);
    for (const auto& r : c) {
        EXPECT_EQ(r.depth, 1.0);
        EXPECT_EQ(r.weight, 0.5);
    }
}

TEST(Rainflow, MonotoneIsOneHalfCycle) {
    const auto c = rainflow_cycles({{0.0, 0.3, 0.7, 1.0}});
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].depth, 1.0);
    EXPECT_EQ(c[0].weight, 0.5);
}

TEST(Rainflow, ConstantIsEmpty) {
    EXPECT_TRUE(rainflow_cycles({{0.5, 0.5, 0.5}}).empty());
    EXPECT_EQ(rainflow_equivalent_loss({}, published()), 0.0);
}

TEST(Rainflow, DoublePeakLoss) {
    const auto c = rainflow_cycles({{0.0, 0.5, 0.0, 0.5, 0.0}});
    EXPECT_NEAR(rainflow_equivalent_loss(c, published()), kTwoHalfSteps, 1e-15 * kTwoHalfSteps);
}

TEST(Rainflow, WeightedDepthIsHalfTotalVariation) {
    Rng rng(21);
    for (int i = 0; i < 200; ++i) {
        const auto soc = rng.vec(1 + i % 40, 0, 1);
        const auto c = rainflow_cycles({soc});
        EXPECT_NEAR(total_weighted_depth(c), half_total_variation(extract_extrema(soc)), 1e-12);
        for (const auto& r : c) {
            EXPECT_GE(r.depth, 0.0);
            EXPECT_LE(r.depth, 1.0);
            EXPECT_TRUE(r.weight == 0.5 || r.weight == 1.0);
        }
        EXPECT_GE(rainflow_equivalent_loss(c, published()), 0.0);
    }
}

TEST(Rainflow, SingleRiseAndFallIsHalfThePerStepTotal) {
    // A rise and fall of depth d is one rainflow cycle (d^k) but two per-step
    // swings (2 d^k), so the per-step sum is exactly twice the cycle count.
    for (double d : {0.1, 0.5, 1.0}) {
        const SocTrajectory traj{{0.0, d, 0.0}};
        const double cycle = rainflow_equivalent_loss(rainflow_cycles(traj), published());
        EXPECT_DOUBLE_EQ(2.0 * cycle, plet_accumulated_loss(traj, published()).total_loss);
    }
}

TEST(Rainflow, SubdividedRampUnderPenalizedPerStep) {
    const SocTrajectory ramp{{0.0, 0.25, 0.5, 0.75, 1.0, 0.75, 0.5, 0.25, 0.0}};
    const double per_step = plet_accumulated_loss(ramp, published()).total_loss;
    const double cycle = rainflow_equivalent_loss(rainflow_cycles(ramp), published());
    EXPECT_LT(per_step, 2.0 * cycle);
}
