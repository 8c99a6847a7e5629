#include <gtest/gtest.h>

#include <cmath>

#include "fcsd/rolling.hpp"
#include "fcsd/synthetic.hpp"
#include "support.hpp"

using namespace fcsd;
using namespace fcsd::testing;

TEST(Roll, SingleStepMatchesSolve) {
    auto ri = random_instance(3, 1);
    ri.bat.soc_end = ri.bat.soc_initial;
    const auto one = solve(build_problem(ri.day, ri.bat));
    const auto rolled = roll(ri.day, ri.bat, static_forecasts(ri.day));
    ASSERT_EQ(rolled.reports.size(), 1u);
    EXPECT_EQ(rolled.schedule.p_ch, one.schedule.p_ch);
    EXPECT_EQ(rolled.schedule.p_dis, one.schedule.p_dis);
    EXPECT_EQ(rolled.realized_objective, objective_value(flatten(one.schedule), build_problem(ri.day, ri.bat)));
}

TEST(Roll, StaticForecastsTrackOneShot) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto ri = random_instance(seed, 16);
        const auto inst = build_problem(ri.day, ri.bat);
        const auto one = solve(inst);
        ASSERT_TRUE(one.converged());
        const auto rolled = roll(ri.day, ri.bat, static_forecasts(ri.day));
        EXPECT_TRUE(rolled.relaxed_steps.empty());
        EXPECT_LE(std::abs(rolled.realized_objective - one.objective), 1e-3 * std::max(1.0, std::abs(one.objective)))
            << seed;
    }
}

TEST(Roll, InvariantsHold) {
    const auto ri = random_instance(11, 16);
    const auto rolled = roll(ri.day, ri.bat, static_forecasts(ri.day));
    const auto traj = soc_trajectory(rolled.schedule, ri.bat, ri.day.grid());
    for (std::size_t t = 0; t <= 16; ++t) EXPECT_NEAR(traj.soc[t], rolled.trajectory.soc[t], 1e-12);
    EXPECT_TRUE(validate_feasibility(rolled.schedule, ri.bat, ri.day.grid(), 1e-6).empty());
    for (const auto& r : rolled.reports) EXPECT_TRUE(r.converged());
}

TEST(Roll, PlannedPlusIncurredIsNonIncreasing) {
    const auto ri = random_instance(5, 16);
    const auto rolled = roll(ri.day, ri.bat, static_forecasts(ri.day));
    const double scale = std::max(1.0, std::abs(rolled.realized_objective));
    for (std::size_t t = 1; t < rolled.planned_objectives.size(); ++t) {
        const double prev = rolled.planned_objectives[t - 1] + rolled.incurred_objective[t - 1];
        const double cur = rolled.planned_objectives[t] + rolled.incurred_objective[t];
        EXPECT_LE(cur, prev + 1e-6 * scale) << t;
    }
}

TEST(Roll, UnforecastLoadAddsItsSpotCost) {
    auto ri = random_instance(9, 8);
    auto load = std::vector<double>(8, 0.0);
    load[0] = 1.7;
    const DayInputs realized(ri.day.grid(), ri.day.prices(), LoadProfile(load));
    const DayInputs forecast_day(ri.day.grid(), ri.day.prices(), LoadProfile(std::vector<double>(8, 0.0)));
    const auto rolled = roll(realized, ri.bat, static_forecasts(forecast_day));
    const auto planned = cost_breakdown(rolled.schedule, forecast_day, ri.bat);
    EXPECT_NEAR(rolled.cost.energy_cost - planned.energy_cost, 1.7 * ri.day.prices()[0] * 0.5,
                1e-12 * std::max(1.0, std::abs(planned.energy_cost)));
}

TEST(Roll, UnreachableTerminalIsRelaxedAndRecorded) {
    // The forecast at step 1 shows no load, so the plan charges to full. From
    // step 2 a 2 MW load under a 1 MW grid limit forces full discharge, which
    // ends the day at SoC 0 instead of 0.5.
    BatteryParams b = two_period_battery(0.0, PenaltyMode::Capacity);
    b.soc_initial = b.soc_end = 0.5;
    const DayInputs realized(TimeGrid(3, 0.5), PriceSeries({100, 300, 300}), LoadProfile({0, 2, 2}));
    ForecastProvider fc = [](std::size_t t) {
        const std::vector<double> early{0, 0, 0}, late{0, 2, 2}, p{100, 300, 300};
        const auto& l = t == 0 ? early : late;
        return Forecast{PriceSeries({p.begin() + long(t), p.end()}), LoadProfile({l.begin() + long(t), l.end()})};
    };
    RollingOptions opts;
    opts.model.grid_limit_mw = 1.0;
    const auto rolled = roll(realized, b, fc, opts);
    ASSERT_EQ(rolled.relaxed_steps, std::vector<std::size_t>({2, 3}));
    EXPECT_NEAR(rolled.trajectory.soc[1], 1.0, 1e-7);
    EXPECT_NEAR(rolled.trajectory.soc.back(), 0.0, 1e-7);
    for (const auto& r : rolled.reports) EXPECT_TRUE(r.converged());
}

TEST(Roll, RejectsShortForecasts) {
    const auto ri = random_instance(2, 4);
    ForecastProvider bad = [&](std::size_t) { return Forecast{ri.day.prices(), ri.day.load()}; };
    EXPECT_THROW(roll(ri.day, ri.bat, bad), InputError);
}
