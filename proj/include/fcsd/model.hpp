#pragma once

// The penalized day-ahead dispatch problem: energy cost of the net grid
// exchange plus a weighted, convex PLET surrogate on per-step battery
// throughput, subject to the SoC recursion, SoC box, terminal SoC and power
// limits.
//
// Decision vector layout (length 2T): [P_ch[0..T), P_dis[0..T)].

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fcsd/domain.hpp"

namespace fcsd {

class DayInputs {
public:
    DayInputs(TimeGrid grid, PriceSeries prices, LoadProfile load);

    const TimeGrid& grid() const { return grid_; }
    const PriceSeries& prices() const { return prices_; }
    const LoadProfile& load() const { return load_; }
    std::size_t steps() const { return grid_.steps(); }

private:
    TimeGrid grid_;
    PriceSeries prices_;
    LoadProfile load_;
};

struct ModelOptions {
    double smoothing_eps = 0.0;
    std::optional<double> grid_limit_mw;
    /// When set, the terminal SoC equality becomes a penalty of this many DKK
    /// per unit of |SoC_T - SoC_end|.
    std::optional<double> terminal_soft_weight;
};

/// DKK per unit of capacity fraction lost.
double penalty_weight(const BatteryParams& bat);

class ProblemInstance {
public:
    ProblemInstance(DayInputs day, BatteryParams bat, ModelOptions opts);

    const DayInputs& day() const { return day_; }
    const BatteryParams& battery() const { return bat_; }
    const ModelOptions& options() const { return opts_; }

    std::size_t steps() const { return day_.steps(); }
    std::size_t num_variables() const { return 2 * steps(); }
    std::size_t charge_index(std::size_t t) const { return t; }
    std::size_t discharge_index(std::size_t t) const { return steps() + t; }

    double weight() const { return weight_; }
    double lower_bound() const { return 0.0; }
    double upper_bound() const { return bat_.p_max_mw; }
    double terminal_target() const { return bat_.soc_end; }

    /// SoC change per MW of charge / discharge held for one step.
    double charge_soc_coeff() const { return charge_coeff_; }
    double discharge_soc_coeff() const { return discharge_coeff_; }

    /// T x 2T map from x to cumulative SoC change: soc[t+1] = SoC_0 + (D x)[t].
    Eigen::MatrixXd dynamics_matrix() const;

private:
    DayInputs day_;
    BatteryParams bat_;
    ModelOptions opts_;
    double weight_;
    double charge_coeff_;
    double discharge_coeff_;
};

ProblemInstance build_problem(const DayInputs& day, const BatteryParams& bat, const ModelOptions& opts = {});

/// Smoothed power-law penalty ((s^2 + eps^2)^(k/2) - eps^k) / C_life, even in s.
double plet_surrogate_term(double s, double k_p, double eps, double c_life);
double plet_surrogate_slope(double s, double k_p, double eps, double c_life);
double plet_surrogate_curvature(double s, double k_p, double eps, double c_life);

std::vector<double> flatten(const DispatchSchedule& schedule);
DispatchSchedule unflatten(std::span<const double> x, std::size_t steps);

/// s[t] = (tau / C_bat)(eta_ch P_ch[t] + P_dis[t] / eta_dis), an upper bound on |dSoC_t|.
std::vector<double> throughput_surrogate(std::span<const double> x, const ProblemInstance& inst);

double energy_cost(std::span<const double> x, const ProblemInstance& inst);
/// Unweighted sum of surrogate terms.
double plet_surrogate(std::span<const double> x, const ProblemInstance& inst);

double objective_value(std::span<const double> x, const ProblemInstance& inst);
std::vector<double> objective_gradient(std::span<const double> x, const ProblemInstance& inst);

CostBreakdown cost_breakdown(const DispatchSchedule& schedule, const DayInputs& day, const BatteryParams& bat);

/// Steps (1-based) where both charge and discharge exceed rel_tol * P_max.
std::vector<std::size_t> simultaneity_flags(const DispatchSchedule& schedule, const BatteryParams& bat,
                                            double rel_tol = 1e-6);

}  // namespace fcsd
