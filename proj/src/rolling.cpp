#include "fcsd/rolling.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace fcsd {

ForecastProvider static_forecasts(const DayInputs& day) {
    return [day](std::size_t t) {
        const auto p = day.prices().values();
        const auto l = day.load().values();
        return Forecast{PriceSeries({p.begin() + static_cast<std::ptrdiff_t>(t), p.end()}),
                        LoadProfile({l.begin() + static_cast<std::ptrdiff_t>(t), l.end()})};
    };
}

RollingResult roll(const DayInputs& day, const BatteryParams& bat, const ForecastProvider& forecasts,
                   const RollingOptions& opts) {
    bat.validate();
    const std::size_t T = day.steps();
    const double tau = day.grid().step_hours();
    const ProblemInstance full = build_problem(day, bat, opts.model);

    RollingResult out;
    out.schedule = DispatchSchedule::idle(T);
    out.trajectory.soc.assign(T + 1, bat.soc_initial);

    double incurred = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        Forecast fc = forecasts(t);
        if (fc.prices.size() != T - t || fc.load.size() != T - t) {
            throw InputError(fmt::format("forecast at step {} covers {} / {} steps, expected {}", t + 1,
                                         fc.prices.size(), fc.load.size(), T - t));
        }
        BatteryParams sub = bat;
        sub.soc_initial = std::clamp(out.trajectory.soc[t], 0.0, 1.0);
        DayInputs remaining(TimeGrid(T - t, tau), std::move(fc.prices), std::move(fc.load));

        ModelOptions model = opts.model;
        ProblemInstance inst(remaining, sub, model);
        if (check_reachability(inst)) {
            model.terminal_soft_weight = opts.terminal_relaxation_weight;
            inst = ProblemInstance(remaining, sub, model);
            out.relaxed_steps.push_back(t + 1);
        }
        SolveReport report = solve(inst, opts.solve);

        out.planned_objectives.push_back(report.objective);
        out.incurred_objective.push_back(incurred);

        const double ch = report.schedule.p_ch.front();
        const double dis = report.schedule.p_dis.front();
        out.schedule.p_ch[t] = ch;
        out.schedule.p_dis[t] = dis;
        out.trajectory.soc[t + 1] =
            out.trajectory.soc[t] + tau / bat.capacity_mwh * (bat.eta_ch * ch - dis / bat.eta_dis);

        // Realized contribution of the committed step under the full-day model.
        const double s = full.charge_soc_coeff() * ch + full.discharge_soc_coeff() * dis;
        incurred += (ch - dis + day.load()[t]) * day.prices()[t] * tau +
                    full.weight() * plet_surrogate_term(s, bat.k_p, opts.model.smoothing_eps, bat.c_life);

        out.reports.push_back(std::move(report));
    }

    out.cost = cost_breakdown(out.schedule, day, bat);
    ModelOptions realized_model = opts.model;
    if (!out.relaxed_steps.empty()) realized_model.terminal_soft_weight = opts.terminal_relaxation_weight;
    out.realized_objective = objective_value(flatten(out.schedule), build_problem(day, bat, realized_model));
    return out;
}

}  // namespace fcsd
