#include "fcsd/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fcsd/degradation.hpp"

namespace fcsd {

DayInputs::DayInputs(TimeGrid grid, PriceSeries prices, LoadProfile load)
    : grid_(grid), prices_(std::move(prices)), load_(std::move(load)) {
    if (prices_.size() != grid_.steps()) {
        throw InputError(fmt::format("price series has {} values for a {}-step horizon", prices_.size(), grid_.steps()));
    }
    if (load_.size() != grid_.steps()) {
        throw InputError(fmt::format("load profile has {} values for a {}-step horizon", load_.size(), grid_.steps()));
    }
}

double penalty_weight(const BatteryParams& bat) {
    switch (bat.penalty_mode) {
    case PenaltyMode::Paper:
        return bat.a_k_dkk_per_kwh;
    case PenaltyMode::Capacity:
        return bat.a_k_dkk_per_kwh * 1000.0 * bat.capacity_mwh;
    }
    return 0.0;
}

ProblemInstance::ProblemInstance(DayInputs day, BatteryParams bat, ModelOptions opts)
    : day_(std::move(day)), bat_(bat), opts_(opts) {
    bat_.validate();
    if (!(opts_.smoothing_eps >= 0.0) || !std::isfinite(opts_.smoothing_eps)) {
        throw InputError("smoothing epsilon must be finite and >= 0");
    }
    if (opts_.grid_limit_mw && !(*opts_.grid_limit_mw > 0.0)) throw InputError("grid limit must be > 0 MW");
    if (opts_.terminal_soft_weight && !(*opts_.terminal_soft_weight > 0.0)) {
        throw InputError("terminal soft weight must be > 0");
    }
    weight_ = penalty_weight(bat_);
    const double scale = day_.grid().step_hours() / bat_.capacity_mwh;
    charge_coeff_ = scale * bat_.eta_ch;
    discharge_coeff_ = scale / bat_.eta_dis;
}

Eigen::MatrixXd ProblemInstance::dynamics_matrix() const {
    const std::size_t T = steps();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(2 * T));
    for (std::size_t row = 0; row < T; ++row) {
        for (std::size_t s = 0; s <= row; ++s) {
            d(row, charge_index(s)) = charge_coeff_;
            d(row, discharge_index(s)) = -discharge_coeff_;
        }
    }
    return d;
}

ProblemInstance build_problem(const DayInputs& day, const BatteryParams& bat, const ModelOptions& opts) {
    return ProblemInstance(day, bat, opts);
}

double plet_surrogate_term(double s, double k_p, double eps, double c_life) {
    if (eps == 0.0) return std::pow(std::abs(s), k_p) / c_life;
    const double r = s / eps;
    return std::pow(eps, k_p) * std::expm1(0.5 * k_p * std::log1p(r * r)) / c_life;
}

double plet_surrogate_slope(double s, double k_p, double eps, double c_life) {
    if (eps == 0.0) {
        if (s == 0.0) return 0.0;
        return std::copysign(k_p * std::pow(std::abs(s), k_p - 1.0), s) / c_life;
    }
    return k_p * s * std::pow(s * s + eps * eps, 0.5 * k_p - 1.0) / c_life;
}

double plet_surrogate_curvature(double s, double k_p, double eps, double c_life) {
    if (eps == 0.0) {
        if (k_p == 1.0) return 0.0;
        if (s == 0.0) return k_p < 2.0 ? std::numeric_limits<double>::infinity() : (k_p == 2.0 ? 2.0 / c_life : 0.0);
        return k_p * (k_p - 1.0) * std::pow(std::abs(s), k_p - 2.0) / c_life;
    }
    const double r = s * s + eps * eps;
    return k_p * std::pow(r, 0.5 * k_p - 2.0) * ((k_p - 1.0) * s * s + eps * eps) / c_life;
}

std::vector<double> flatten(const DispatchSchedule& schedule) {
    std::vector<double> x(schedule.p_ch);
    x.insert(x.end(), schedule.p_dis.begin(), schedule.p_dis.end());
    return x;
}

DispatchSchedule unflatten(std::span<const double> x, std::size_t steps) {
    if (x.size() != 2 * steps) throw InputError(fmt::format("decision vector has {} entries, expected {}", x.size(), 2 * steps));
    DispatchSchedule schedule;
    schedule.p_ch.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(steps));
    schedule.p_dis.assign(x.begin() + static_cast<std::ptrdiff_t>(steps), x.end());
    return schedule;
}

namespace {

void require_size(std::span<const double> x, const ProblemInstance& inst) {
    if (x.size() != inst.num_variables()) {
        throw InputError(fmt::format("decision vector has {} entries, expected {}", x.size(), inst.num_variables()));
    }
}

double terminal_deviation(std::span<const double> x, const ProblemInstance& inst) {
    double soc = inst.battery().soc_initial;
    for (std::size_t t = 0; t < inst.steps(); ++t) {
        soc += inst.charge_soc_coeff() * x[inst.charge_index(t)] - inst.discharge_soc_coeff() * x[inst.discharge_index(t)];
    }
    return soc - inst.terminal_target();
}

}  // namespace

std::vector<double> throughput_surrogate(std::span<const double> x, const ProblemInstance& inst) {
    require_size(x, inst);
    std::vector<double> s(inst.steps());
    for (std::size_t t = 0; t < inst.steps(); ++t) {
        s[t] = inst.charge_soc_coeff() * x[inst.charge_index(t)] + inst.discharge_soc_coeff() * x[inst.discharge_index(t)];
    }
    return s;
}

double energy_cost(std::span<const double> x, const ProblemInstance& inst) {
    require_size(x, inst);
    const auto& day = inst.day();
    const double tau = day.grid().step_hours();
    double cost = 0.0;
    for (std::size_t t = 0; t < inst.steps(); ++t) {
        const double net = x[inst.charge_index(t)] - x[inst.discharge_index(t)] + day.load()[t];
        cost += net * day.prices()[t] * tau;
    }
    return cost;
}

double plet_surrogate(std::span<const double> x, const ProblemInstance& inst) {
    const auto& bat = inst.battery();
    double total = 0.0;
    for (double s : throughput_surrogate(x, inst)) {
        total += plet_surrogate_term(s, bat.k_p, inst.options().smoothing_eps, bat.c_life);
    }
    return total;
}

double objective_value(std::span<const double> x, const ProblemInstance& inst) {
    double value = energy_cost(x, inst);
    if (inst.weight() != 0.0) value += inst.weight() * plet_surrogate(x, inst);
    if (inst.options().terminal_soft_weight) {
        value += *inst.options().terminal_soft_weight * std::abs(terminal_deviation(x, inst));
    }
    return value;
}

std::vector<double> objective_gradient(std::span<const double> x, const ProblemInstance& inst) {
    require_size(x, inst);
    const auto& day = inst.day();
    const auto& bat = inst.battery();
    const double tau = day.grid().step_hours();
    const double eps = inst.options().smoothing_eps;

    std::vector<double> grad(inst.num_variables());
    const auto s = throughput_surrogate(x, inst);
    for (std::size_t t = 0; t < inst.steps(); ++t) {
        const double price_term = day.prices()[t] * tau;
        double slope = 0.0;
        if (inst.weight() != 0.0) slope = inst.weight() * plet_surrogate_slope(s[t], bat.k_p, eps, bat.c_life);
        grad[inst.charge_index(t)] = price_term + slope * inst.charge_soc_coeff();
        grad[inst.discharge_index(t)] = -price_term + slope * inst.discharge_soc_coeff();
    }
    if (inst.options().terminal_soft_weight) {
        const double dev = terminal_deviation(x, inst);
        const double w = dev == 0.0 ? 0.0 : std::copysign(*inst.options().terminal_soft_weight, dev);
        for (std::size_t t = 0; t < inst.steps(); ++t) {
            grad[inst.charge_index(t)] += w * inst.charge_soc_coeff();
            grad[inst.discharge_index(t)] -= w * inst.discharge_soc_coeff();
        }
    }
    return grad;
}

CostBreakdown cost_breakdown(const DispatchSchedule& schedule, const DayInputs& day, const BatteryParams& bat) {
    const GridExchange ex = grid_exchange(schedule, day.load());
    const double tau = day.grid().step_hours();

    CostBreakdown out;
    for (std::size_t t = 0; t < day.steps(); ++t) {
        out.energy_cost += (ex.p_in[t] - ex.p_out[t]) * day.prices()[t] * tau;
        out.baseline_cost += day.load()[t] * day.prices()[t] * tau;
    }
    out.arbitrage_revenue = out.baseline_cost - out.energy_cost;

    const SocTrajectory traj = soc_trajectory(schedule, bat, day.grid());
    out.plet_loss = plet_accumulated_loss(traj, bat).total_loss;
    out.degradation_cost = penalty_weight(bat) * out.plet_loss;
    out.total_objective = out.energy_cost + out.degradation_cost;
    return out;
}

std::vector<std::size_t> simultaneity_flags(const DispatchSchedule& schedule, const BatteryParams& bat,
                                            double rel_tol) {
    std::vector<std::size_t> flags;
    const double threshold = rel_tol * bat.p_max_mw;
    for (std::size_t t = 0; t < schedule.size(); ++t) {
        if (std::min(schedule.p_ch[t], schedule.p_dis[t]) > threshold) flags.push_back(t + 1);
    }
    return flags;
}

}  // namespace fcsd
