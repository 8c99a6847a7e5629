#include "fcsd/domain.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace fcsd {

namespace {

void require_length(std::size_t got, std::size_t want, std::string_view what) {
    if (got != want) {
        throw InputError(fmt::format("{}: length {} does not match horizon {}", what, got, want));
    }
}

void require_schedule_shape(const DispatchSchedule& schedule) {
    if (schedule.p_ch.size() != schedule.p_dis.size()) {
        throw InputError(fmt::format("schedule: p_ch has {} entries but p_dis has {}", schedule.p_ch.size(),
                                     schedule.p_dis.size()));
    }
}

}  // namespace

TimeGrid::TimeGrid(std::size_t steps, double step_hours) : steps_(steps), step_hours_(step_hours) {
    if (steps_ == 0) throw InputError("time grid needs at least one step");
    if (!(step_hours_ > 0.0) || !std::isfinite(step_hours_)) {
        throw InputError(fmt::format("step length must be positive, got {} h", step_hours_));
    }
}

PriceSeries::PriceSeries(std::vector<double> dkk_per_mwh) : values_(std::move(dkk_per_mwh)) {
    for (std::size_t t = 0; t < values_.size(); ++t) {
        if (!std::isfinite(values_[t])) throw InputError(fmt::format("price at step {} is not finite", t + 1));
    }
}

LoadProfile::LoadProfile(std::vector<double> mw) : values_(std::move(mw)) {
    for (std::size_t t = 0; t < values_.size(); ++t) {
        if (!std::isfinite(values_[t]) || values_[t] < 0.0) {
            throw InputError(fmt::format("load at step {} must be finite and >= 0, got {}", t + 1, values_[t]));
        }
    }
}

std::string_view to_string(PenaltyMode mode) {
    switch (mode) {
    case PenaltyMode::Paper:
        return "paper";
    case PenaltyMode::Capacity:
        return "capacity";
    }
    return "capacity";
}

PenaltyMode penalty_mode_from_string(std::string_view name) {
    if (name == "paper") return PenaltyMode::Paper;
    if (name == "capacity") return PenaltyMode::Capacity;
    throw InputError(fmt::format("unknown penalty mode '{}' (expected paper or capacity)", name));
}

std::vector<std::string> BatteryParams::validate() const {
    auto fail = [](std::string msg) { throw InputError(std::move(msg)); };
    auto finite = [](double v) { return std::isfinite(v); };

    if (!finite(capacity_mwh) || capacity_mwh <= 0.0) fail(fmt::format("C_bat must be > 0, got {}", capacity_mwh));
    if (!finite(eta_ch) || eta_ch <= 0.0 || eta_ch > 1.0) fail(fmt::format("eta_ch must be in (0, 1], got {}", eta_ch));
    if (!finite(eta_dis) || eta_dis <= 0.0 || eta_dis > 1.0) {
        fail(fmt::format("eta_dis must be in (0, 1], got {}", eta_dis));
    }
    if (!finite(p_max_mw) || p_max_mw <= 0.0) fail(fmt::format("P_max must be > 0, got {}", p_max_mw));
    if (!(soc_initial >= 0.0 && soc_initial <= 1.0)) fail(fmt::format("SoC_0 must be in [0, 1], got {}", soc_initial));
    if (!(soc_end >= 0.0 && soc_end <= 1.0)) fail(fmt::format("SoC_end must be in [0, 1], got {}", soc_end));
    if (!finite(c_life) || c_life <= 0.0) fail(fmt::format("C_life must be > 0, got {}", c_life));
    if (!finite(k_p) || k_p < 1.0) fail(fmt::format("k_p must be >= 1, got {}", k_p));
    if (!finite(a_k_dkk_per_kwh) || a_k_dkk_per_kwh < 0.0) {
        fail(fmt::format("a_k must be >= 0, got {}", a_k_dkk_per_kwh));
    }

    std::vector<std::string> warnings;
    if (k_p < 1.1 || k_p > 1.3) {
        warnings.push_back(fmt::format("k_p = {} is outside the typical Peukert range [1.1, 1.3]", k_p));
    }
    return warnings;
}

std::string_view to_string(ConstraintKind kind) {
    switch (kind) {
    case ConstraintKind::ChargePower:
        return "charge_power_bound";
    case ConstraintKind::DischargePower:
        return "discharge_power_bound";
    case ConstraintKind::SocLower:
        return "soc_lower_bound";
    case ConstraintKind::SocUpper:
        return "soc_upper_bound";
    case ConstraintKind::TerminalSoc:
        return "terminal_soc";
    case ConstraintKind::GridLimit:
        return "grid_limit";
    }
    return "unknown";
}

SocTrajectory soc_trajectory(const DispatchSchedule& schedule, const BatteryParams& bat, const TimeGrid& grid) {
    require_schedule_shape(schedule);
    require_length(schedule.size(), grid.steps(), "schedule");

    const double scale = grid.step_hours() / bat.capacity_mwh;
    SocTrajectory traj;
    traj.soc.resize(grid.steps() + 1);
    traj.soc[0] = bat.soc_initial;
    for (std::size_t t = 0; t < grid.steps(); ++t) {
        traj.soc[t + 1] = traj.soc[t] + scale * (bat.eta_ch * schedule.p_ch[t] - schedule.p_dis[t] / bat.eta_dis);
    }
    return traj;
}

GridExchange grid_exchange(const DispatchSchedule& schedule, const LoadProfile& load) {
    require_schedule_shape(schedule);
    require_length(schedule.size(), load.size(), "schedule vs load");

    GridExchange ex;
    ex.p_in.resize(schedule.size());
    ex.p_out.resize(schedule.size());
    for (std::size_t t = 0; t < schedule.size(); ++t) {
        const double net = schedule.p_ch[t] - schedule.p_dis[t] + load[t];
        ex.p_in[t] = net > 0.0 ? net : 0.0;
        ex.p_out[t] = net < 0.0 ? -net : 0.0;
    }
    return ex;
}

std::vector<Violation> validate_feasibility(const DispatchSchedule& schedule, const BatteryParams& bat,
                                            const TimeGrid& grid, double tol) {
    if (!(tol >= 0.0)) throw InputError("feasibility tolerance must be >= 0");
    const SocTrajectory traj = soc_trajectory(schedule, bat, grid);

    std::vector<Violation> out;
    const double pmax = bat.p_max_mw;
    for (std::size_t t = 0; t < schedule.size(); ++t) {
        const double ch = schedule.p_ch[t];
        const double dis = schedule.p_dis[t];
        if (ch < -tol) out.push_back({ConstraintKind::ChargePower, t + 1, -ch});
        if (ch > pmax + tol) out.push_back({ConstraintKind::ChargePower, t + 1, ch - pmax});
        if (dis < -tol) out.push_back({ConstraintKind::DischargePower, t + 1, -dis});
        if (dis > pmax + tol) out.push_back({ConstraintKind::DischargePower, t + 1, dis - pmax});
    }
    for (std::size_t t = 1; t < traj.soc.size(); ++t) {
        const double s = traj.soc[t];
        if (s < -tol) out.push_back({ConstraintKind::SocLower, t, -s});
        if (s > 1.0 + tol) out.push_back({ConstraintKind::SocUpper, t, s - 1.0});
    }
    const double terminal_gap = std::abs(traj.soc.back() - bat.soc_end);
    if (terminal_gap > tol) out.push_back({ConstraintKind::TerminalSoc, grid.steps(), terminal_gap});
    return out;
}

std::vector<Violation> validate_feasibility(const DispatchSchedule& schedule, const BatteryParams& bat,
                                            const TimeGrid& grid, double tol, const LoadProfile& load,
                                            std::optional<double> grid_limit_mw) {
    auto out = validate_feasibility(schedule, bat, grid, tol);
    if (grid_limit_mw) {
        const GridExchange ex = grid_exchange(schedule, load);
        for (std::size_t t = 0; t < ex.p_in.size(); ++t) {
            const double flow = std::max(ex.p_in[t], ex.p_out[t]);
            if (flow > *grid_limit_mw + tol) out.push_back({ConstraintKind::GridLimit, t + 1, flow - *grid_limit_mw});
        }
    }
    return out;
}

}  // namespace fcsd
