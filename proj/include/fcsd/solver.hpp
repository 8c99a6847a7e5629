#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fcsd/domain.hpp"
#include "fcsd/model.hpp"

namespace fcsd {

struct SolveOptions {
    double tol_feasibility = 1e-8;
    /// Certified suboptimality (primal objective minus a Lagrangian dual
    /// bound), in units of the internally scaled objective.
    double tol_optimality = 1e-6;
    int max_iterations = 50000;
    std::uint64_t seed = 0;  // reserved; the interior-point path is deterministic
    /// Secondary penalty on total throughput, relative to max|p| * C_bat per
    /// unit SoC, that picks the minimum-throughput optimum among ties.
    double tie_break = 1e-9;
};

enum class Termination { Converged, MaxIterations, Infeasible };

std::string_view to_string(Termination t);

/// Why a terminal SoC cannot be reached.
struct ReachabilityCertificate {
    double required_change;  // SoC_end - SoC_0
    double reachable_low;    // terminal SoC interval reachable within the horizon
    double reachable_high;
    std::string message;
};

struct SolveReport {
    DispatchSchedule schedule;
    double objective = 0.0;
    int iterations = 0;
    Termination termination = Termination::MaxIterations;
    double feasibility_residual = 0.0;
    double optimality_residual = 0.0;
    std::vector<std::size_t> simultaneity_flags;
    std::optional<ReachabilityCertificate> certificate;
    bool polished = false;  // final point came from the active-set refinement

    bool converged() const { return termination == Termination::Converged; }
};

/// Interval propagation of reachable SoC under the power (and grid) limits.
/// Empty when the terminal target is reachable or the terminal is soft.
std::optional<ReachabilityCertificate> check_reachability(const ProblemInstance& inst);

/// Primal-dual interior point on the convex problem followed by an
/// active-set Newton refinement.
SolveReport solve(const ProblemInstance& inst, const SolveOptions& opts = {});

/// Exhaustive search with each P_ch[t], P_dis[t] on {0, P_max/(levels-1), ..., P_max}.
/// Feasibility is checked with a tolerance of half a SoC grid step.
/// Throws InputError if levels^(2T) exceeds 1e8.
SolveReport oracle_solve(const ProblemInstance& inst, int levels, const SolveOptions& opts = {});

/// True when the oracle lattice contains a rounding of every feasible point:
/// unit efficiencies, 1 / (SoC grid step) integral, SoC_0 and SoC_end on the
/// lattice, and no grid limit or soft terminal.
bool oracle_lattice_aligned(const ProblemInstance& inst, int levels);

/// Upper bound on (oracle objective - continuous optimum) for lattice-aligned
/// instances: rounding the optimal SoC path to the lattice moves each step by
/// at most one power grid step h, costing at most |p_t| tau h in energy and
/// W phi'(c P_max) c h in penalty.
double oracle_grid_gap_bound(const ProblemInstance& inst, int levels, const SolveOptions& opts = {});

}  // namespace fcsd
