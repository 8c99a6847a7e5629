#pragma once

// Post-hoc check of a schedule: feasibility, per-step PLET loss next to a
// rainflow count of the same trajectory, and the cost breakdown.

#include <nlohmann/json.hpp>

#include "fcsd/config.hpp"
#include "fcsd/degradation.hpp"

namespace fcsd {

struct AuditReport {
    SocTrajectory trajectory;
    std::vector<Violation> violations;
    DegradationLedger plet;
    std::vector<CycleRecord> rainflow;
    double rainflow_loss = 0.0;
    std::vector<std::size_t> simultaneity_flags;
    CostBreakdown cost;
};

/// Throws InputError when the schedule and the day differ in length.
AuditReport audit(const DispatchSchedule& schedule, const DayInputs& day, const RunConfig& cfg,
                  double tol = 1e-6);

nlohmann::json cost_to_json(const CostBreakdown& cost);
nlohmann::json audit_to_json(const AuditReport& report);

}  // namespace fcsd
