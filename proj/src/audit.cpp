#include "fcsd/audit.hpp"

#include <fmt/format.h>

namespace fcsd {

AuditReport audit(const DispatchSchedule& schedule, const DayInputs& day, const RunConfig& cfg, double tol) {
    if (schedule.p_ch.size() != day.steps() || schedule.p_dis.size() != day.steps()) {
        throw InputError(fmt::format("schedule has {} steps, day has {}", schedule.p_ch.size(), day.steps()));
    }
    const BatteryParams& bat = cfg.battery;
    bat.validate();
    AuditReport r;
    r.trajectory = soc_trajectory(schedule, bat, day.grid());
    r.violations = validate_feasibility(schedule, bat, day.grid(), tol, day.load(), cfg.model.grid_limit_mw);
    r.plet = plet_accumulated_loss(r.trajectory, bat);
    r.rainflow = rainflow_cycles(r.trajectory);
    r.rainflow_loss = rainflow_equivalent_loss(r.rainflow, bat);
    r.simultaneity_flags = simultaneity_flags(schedule, bat);
    r.cost = cost_breakdown(schedule, day, bat);
    return r;
}

nlohmann::json cost_to_json(const CostBreakdown& c) {
    return {{"energy_cost", c.energy_cost},         {"baseline_cost", c.baseline_cost},
            {"arbitrage_revenue", c.arbitrage_revenue}, {"plet_loss", c.plet_loss},
            {"degradation_cost", c.degradation_cost}, {"total_objective", c.total_objective}};
}

nlohmann::json audit_to_json(const AuditReport& r) {
    nlohmann::json violations = nlohmann::json::array();
    for (const auto& v : r.violations) {
        violations.push_back({{"constraint", std::string(to_string(v.constraint))}, {"step", v.step},
                              {"magnitude", v.magnitude}});
    }
    nlohmann::json cycles = nlohmann::json::array();
    for (const auto& c : r.rainflow) cycles.push_back({{"depth", c.depth}, {"weight", c.weight}});
    return {{"soc", r.trajectory.soc},
            {"violations", violations},
            {"plet_per_step", r.plet.per_step_loss},
            {"plet_loss", r.plet.total_loss},
            {"rainflow_cycles", cycles},
            {"rainflow_loss", r.rainflow_loss},
            {"simultaneity_flags", r.simultaneity_flags},
            {"cost", cost_to_json(r.cost)}};
}

}  // namespace fcsd
