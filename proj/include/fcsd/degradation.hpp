#pragma once

// Peukert lifetime energy throughput (PLET) capacity-loss model, plus a
// rainflow cycle counter used only to audit schedules after the fact.

#include <vector>

#include "fcsd/domain.hpp"

namespace fcsd {

struct CycleRecord {
    double depth;   // SoC range of the cycle, in [0, 1]
    double weight;  // 0.5 for a half cycle, 1.0 for a full cycle
};

struct DegradationLedger {
    std::vector<double> per_step_loss;
    double total_loss = 0.0;
};

enum class ResidualPolicy {
    HalfCycles,  // unmatched reversals count as half cycles
    Close        // the residual is closed into a loop and counted as full cycles
};

/// Lifetime throughput n * dod^k_p.
double plet_lifetime_throughput(double cycles, double dod, double k_p);

/// Capacity fraction lost by one step with SoC change `delta_dod`:
/// delta_dod^k_p / C_life.
double plet_step_loss(double delta_dod, const BatteryParams& bat);

/// Per-step |soc[t] - soc[t-1]|^k_p / C_life and their sum.
DegradationLedger plet_accumulated_loss(const SocTrajectory& traj, const BatteryParams& bat);

/// Turning points of a sequence: first and last samples plus every strict
/// direction change, with flat runs collapsed.
std::vector<double> extract_extrema(const std::vector<double>& series);

/// Four-point rainflow counting over the extrema of the trajectory.
std::vector<CycleRecord> rainflow_cycles(const SocTrajectory& traj,
                                         ResidualPolicy policy = ResidualPolicy::HalfCycles);

/// Sum of weight * depth^k_p / C_life over the records.
double rainflow_equivalent_loss(const std::vector<CycleRecord>& cycles, const BatteryParams& bat);

}  // namespace fcsd
