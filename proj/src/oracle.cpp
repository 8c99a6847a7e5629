#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fcsd/solver.hpp"
#include "program.hpp"

namespace fcsd {

namespace {

struct StepTable {
    std::vector<double> cost;        // levels^2 entries, [i * levels + j]
    std::vector<double> soc_change;  // same layout
    std::vector<bool> allowed;       // grid-limit feasibility
};

class Enumerator {
public:
    Enumerator(const ProblemInstance& inst, int levels, double tie)
        : inst_(inst), levels_(static_cast<std::size_t>(levels)) {
        const auto& bat = inst.battery();
        const auto& day = inst.day();
        const double tau = day.grid().step_hours();
        const double scale = tau / bat.capacity_mwh;
        const double eps = inst.options().smoothing_eps;
        power_.resize(levels_);
        for (std::size_t i = 0; i < levels_; ++i) {
            power_[i] = i + 1 == levels_ ? bat.p_max_mw : bat.p_max_mw * double(i) / double(levels_ - 1);
        }
        tables_.resize(inst.steps());
        for (std::size_t t = 0; t < inst.steps(); ++t) {
            auto& tab = tables_[t];
            tab.cost.resize(levels_ * levels_);
            tab.soc_change.resize(levels_ * levels_);
            tab.allowed.resize(levels_ * levels_, true);
            for (std::size_t i = 0; i < levels_; ++i) {
                for (std::size_t j = 0; j < levels_; ++j) {
                    const double ch = power_[i];
                    const double dis = power_[j];
                    const double s = inst.charge_soc_coeff() * ch + inst.discharge_soc_coeff() * dis;
                    const double net = ch - dis + day.load()[t];
                    double c = net * day.prices()[t] * tau + tie * s;
                    if (inst.weight() != 0.0) c += inst.weight() * plet_surrogate_term(s, bat.k_p, eps, bat.c_life);
                    tab.cost[i * levels_ + j] = c;
                    tab.soc_change[i * levels_ + j] = scale * (bat.eta_ch * ch - dis / bat.eta_dis);
                    if (inst.options().grid_limit_mw && std::abs(net) > *inst.options().grid_limit_mw) {
                        tab.allowed[i * levels_ + j] = false;
                    }
                }
            }
        }
    }

    void run(double tol) {
        tol_ = tol;
        choice_.assign(inst_.steps(), 0);
        visit(0, inst_.battery().soc_initial, 0.0);
    }

    bool found() const { return found_; }
    std::size_t leaves() const { return leaves_; }

    DispatchSchedule best_schedule() const {
        DispatchSchedule out = DispatchSchedule::idle(inst_.steps());
        for (std::size_t t = 0; t < inst_.steps(); ++t) {
            out.p_ch[t] = power_[best_[t] / levels_];
            out.p_dis[t] = power_[best_[t] % levels_];
        }
        return out;
    }

private:
    void visit(std::size_t t, double soc, double cost) {
        if (t == inst_.steps()) {
            ++leaves_;
            double total = cost;
            const double dev = soc - inst_.terminal_target();
            if (const auto& w = inst_.options().terminal_soft_weight) {
                total += *w * std::abs(dev);
            } else if (std::abs(dev) > tol_) {
                return;
            }
            if (!found_ || total < best_cost_) {
                found_ = true;
                best_cost_ = total;
                best_ = choice_;
            }
            return;
        }
        const auto& tab = tables_[t];
        for (std::size_t k = 0; k < levels_ * levels_; ++k) {
            if (!tab.allowed[k]) continue;
            const double next = soc + tab.soc_change[k];
            if (next < -tol_ || next > 1.0 + tol_) continue;
            choice_[t] = k;
            visit(t + 1, next, cost + tab.cost[k]);
        }
    }

    const ProblemInstance& inst_;
    std::size_t levels_;
    std::vector<double> power_;
    std::vector<StepTable> tables_;
    std::vector<std::size_t> choice_;
    std::vector<std::size_t> best_;
    double best_cost_ = std::numeric_limits<double>::infinity();
    double tol_ = 0.0;
    bool found_ = false;
    std::size_t leaves_ = 0;
};

double soc_grid_step(const ProblemInstance& inst, int levels) {
    const auto& bat = inst.battery();
    return inst.day().grid().step_hours() / bat.capacity_mwh * bat.p_max_mw / double(levels - 1) * bat.eta_ch;
}

}  // namespace

SolveReport oracle_solve(const ProblemInstance& inst, int levels, const SolveOptions& opts) {
    if (levels < 2) throw InputError("oracle needs at least 2 levels per variable");
    const double log_count = 2.0 * double(inst.steps()) * std::log10(double(levels));
    if (log_count > 8.0 + 1e-12) {
        throw InputError(fmt::format("oracle enumeration of {}^{} points exceeds the 1e8 budget", levels,
                                     2 * inst.steps()));
    }

    Enumerator en(inst, levels, detail::tie_break_weight(inst, opts));
    en.run(0.5 * soc_grid_step(inst, levels));

    SolveReport report;
    report.iterations = static_cast<int>(std::min<std::size_t>(en.leaves(), std::numeric_limits<int>::max()));
    if (!en.found()) {
        report.schedule = DispatchSchedule::idle(inst.steps());
        report.termination = Termination::Infeasible;
        report.objective = objective_value(flatten(report.schedule), inst);
        report.optimality_residual = std::numeric_limits<double>::infinity();
        return report;
    }
    report.schedule = en.best_schedule();
    report.objective = objective_value(flatten(report.schedule), inst);
    report.termination = Termination::Converged;
    const auto violations = validate_feasibility(report.schedule, inst.battery(), inst.day().grid(), 0.0,
                                                 inst.day().load(), inst.options().grid_limit_mw);
    for (const auto& v : violations) {
        if (v.constraint == ConstraintKind::TerminalSoc && inst.options().terminal_soft_weight) continue;
        report.feasibility_residual = std::max(report.feasibility_residual, v.magnitude);
    }
    report.simultaneity_flags = simultaneity_flags(report.schedule, inst.battery());
    return report;
}

bool oracle_lattice_aligned(const ProblemInstance& inst, int levels) {
    if (levels < 2) return false;
    const auto& bat = inst.battery();
    if (bat.eta_ch != 1.0 || bat.eta_dis != 1.0) return false;
    if (inst.options().grid_limit_mw || inst.options().terminal_soft_weight) return false;
    const double unit = soc_grid_step(inst, levels);
    auto on_lattice = [unit](double v) {
        const double k = v / unit;
        return std::abs(k - std::round(k)) <= 1e-9;
    };
    return on_lattice(1.0) && on_lattice(bat.soc_initial) && on_lattice(bat.soc_end);
}

double oracle_grid_gap_bound(const ProblemInstance& inst, int levels, const SolveOptions& opts) {
    if (levels < 2) throw InputError("oracle needs at least 2 levels per variable");
    const auto& bat = inst.battery();
    const double tau = inst.day().grid().step_hours();
    const double h = bat.p_max_mw / double(levels - 1);
    const double coeff = std::max(inst.charge_soc_coeff(), inst.discharge_soc_coeff());
    const double smax = coeff * bat.p_max_mw;
    const double slope = plet_surrogate_slope(smax, bat.k_p, inst.options().smoothing_eps, bat.c_life);
    const double tie = detail::tie_break_weight(inst, opts);

    double bound = 0.0;
    for (std::size_t t = 0; t < inst.steps(); ++t) {
        bound += std::abs(inst.day().prices()[t]) * tau * h + inst.weight() * slope * coeff * h;
        bound += tie * 2.0 * smax;
    }
    return bound;
}

}  // namespace fcsd
