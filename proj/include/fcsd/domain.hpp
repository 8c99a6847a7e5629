#pragma once

// Core value types for a fast-charging-station battery dispatched against
// day-ahead prices, and the deterministic derivations shared by every other
// module. Units are MW, MWh, hours and DKK/MWh; SoC is a fraction of C_bat.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fcsd {

/// Thrown on malformed or inconsistent caller input.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class TimeGrid {
public:
    TimeGrid(std::size_t steps, double step_hours);

    std::size_t steps() const { return steps_; }
    double step_hours() const { return step_hours_; }

private:
    std::size_t steps_;
    double step_hours_;
};

/// Spot prices in DKK/MWh; may be negative.
class PriceSeries {
public:
    explicit PriceSeries(std::vector<double> dkk_per_mwh);

    std::span<const double> values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t t) const { return values_[t]; }

private:
    std::vector<double> values_;
};

/// Station demand in MW, nonnegative.
class LoadProfile {
public:
    explicit LoadProfile(std::vector<double> mw);

    std::span<const double> values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t t) const { return values_[t]; }

private:
    std::vector<double> values_;
};

enum class PenaltyMode {
    Paper,    // W = a_k
    Capacity  // W = a_k * 1000 * C_bat[MWh]
};

std::string_view to_string(PenaltyMode mode);
PenaltyMode penalty_mode_from_string(std::string_view name);

struct BatteryParams {
    double capacity_mwh = 2.0;
    double eta_ch = 0.95;
    double eta_dis = 0.95;
    double p_max_mw = 1.0;
    double soc_initial = 0.5;
    double soc_end = 0.5;
    double c_life = 12500.0;
    double k_p = 1.15;
    double a_k_dkk_per_kwh = 0.0;
    PenaltyMode penalty_mode = PenaltyMode::Capacity;

    /// Throws InputError on a hard violation; returns soft warnings
    /// (currently only a Peukert exponent outside [1.1, 1.3]).
    std::vector<std::string> validate() const;
};

struct DispatchSchedule {
    std::vector<double> p_ch;
    std::vector<double> p_dis;

    std::size_t size() const { return p_ch.size(); }

    static DispatchSchedule idle(std::size_t steps) {
        return {std::vector<double>(steps, 0.0), std::vector<double>(steps, 0.0)};
    }
};

/// soc[0] is the initial state; soc[t] is the state after step t.
struct SocTrajectory {
    std::vector<double> soc;
};

struct GridExchange {
    std::vector<double> p_in;
    std::vector<double> p_out;
};

struct CostBreakdown {
    double energy_cost = 0.0;
    double baseline_cost = 0.0;
    double arbitrage_revenue = 0.0;
    double plet_loss = 0.0;
    double degradation_cost = 0.0;
    double total_objective = 0.0;
};

enum class ConstraintKind { ChargePower, DischargePower, SocLower, SocUpper, TerminalSoc, GridLimit };

std::string_view to_string(ConstraintKind kind);

struct Violation {
    ConstraintKind constraint;
    std::size_t step;  // 1-based step of the offending quantity
    double magnitude;  // distance past the untoleranced bound
};

SocTrajectory soc_trajectory(const DispatchSchedule& schedule, const BatteryParams& bat, const TimeGrid& grid);

GridExchange grid_exchange(const DispatchSchedule& schedule, const LoadProfile& load);

std::vector<Violation> validate_feasibility(const DispatchSchedule& schedule, const BatteryParams& bat,
                                            const TimeGrid& grid, double tol);

/// Same, plus |P_in - P_out| <= grid_limit_mw when a limit is given.
std::vector<Violation> validate_feasibility(const DispatchSchedule& schedule, const BatteryParams& bat,
                                            const TimeGrid& grid, double tol, const LoadProfile& load,
                                            std::optional<double> grid_limit_mw);

}  // namespace fcsd
