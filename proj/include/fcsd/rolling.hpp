#pragma once

// Shrinking-horizon re-optimization: at each step re-solve the rest of the
// day from the realized SoC, commit only the first action.

#include <functional>
#include <vector>

#include "fcsd/model.hpp"
#include "fcsd/solver.hpp"

namespace fcsd {

struct Forecast {
    PriceSeries prices;
    LoadProfile load;
};

/// Called with the 0-based step index t; returns series covering steps t..T-1.
using ForecastProvider = std::function<Forecast(std::size_t)>;

/// Forecasts equal to the given day, truncated to the remaining horizon.
ForecastProvider static_forecasts(const DayInputs& day);

struct RollingOptions {
    ModelOptions model;
    SolveOptions solve;
    /// DKK per unit of terminal SoC deviation when SoC_end becomes unreachable mid-day.
    double terminal_relaxation_weight = 1e6;
};

struct RollingResult {
    DispatchSchedule schedule;
    SocTrajectory trajectory;
    std::vector<SolveReport> reports;
    CostBreakdown cost;              // on realized prices and load
    double realized_objective = 0.0; // model objective of the committed schedule on realized data
    std::vector<double> planned_objectives;  // objective of each re-solve over its remaining horizon
    std::vector<double> incurred_objective;  // realized objective of steps committed before each re-solve
    std::vector<std::size_t> relaxed_steps;  // 1-based steps solved with a soft terminal condition
};

RollingResult roll(const DayInputs& day, const BatteryParams& bat, const ForecastProvider& forecasts,
                   const RollingOptions& opts = {});

}  // namespace fcsd
