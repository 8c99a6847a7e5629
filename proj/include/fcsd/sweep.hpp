#pragma once

// One solve per degradation weight a_k on a fixed day.

#include <iosfwd>
#include <string>
#include <vector>

#include "fcsd/config.hpp"

namespace fcsd {

struct SweepRow {
    double a_k_dkk_per_kwh = 0.0;
    double weight = 0.0;             // penalty weight W after penalty_mode scaling
    double energy_cost = 0.0;        // DKK, grid purchases including the station load
    double arbitrage_revenue = 0.0;  // DKK
    double plet_loss = 0.0;          // accumulated per-step PLET loss on the SoC trajectory
    double surrogate_penalty = 0.0;  // W * sum of phi(s_t), DKK
    double objective = 0.0;          // DKK
    std::size_t soc_reversals = 0;
    Termination termination = Termination::Converged;
    bool failed = false;
    std::string error;  // set when the solve threw
};

inline constexpr double kReversalDeadband = 1e-4;

/// Sign changes of successive SoC increments, ignoring increments with
/// magnitude at or below `deadband`.
std::size_t soc_reversals(const SocTrajectory& traj, double deadband = kReversalDeadband);

/// FCSD_THREADS when set to a positive integer, else the hardware concurrency.
unsigned sweep_threads();

/// Rows are returned in the order of `ak_values` regardless of `threads`.
std::vector<SweepRow> sweep(const DayInputs& day, const RunConfig& cfg, const std::vector<double>& ak_values,
                            unsigned threads = sweep_threads());

inline constexpr std::string_view kSweepHeader =
    "a_k_dkk_per_kwh,weight,energy_cost,arbitrage_revenue,plet_loss,surrogate_penalty,objective,soc_reversals,"
    "termination,failed";

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace fcsd
