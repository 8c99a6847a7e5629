#include "fcsd/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "fcsd/csv_io.hpp"
#include "fcsd/degradation.hpp"

namespace fcsd {

std::size_t soc_reversals(const SocTrajectory& traj, double deadband) {
    std::size_t count = 0;
    int last = 0;
    for (std::size_t t = 1; t < traj.soc.size(); ++t) {
        const double d = traj.soc[t] - traj.soc[t - 1];
        if (std::abs(d) <= deadband) continue;
        const int sign = d > 0.0 ? 1 : -1;
        if (last != 0 && sign != last) ++count;
        last = sign;
    }
    return count;
}

unsigned sweep_threads() {
    if (const char* env = std::getenv("FCSD_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

SweepRow sweep_point(const DayInputs& day, const RunConfig& cfg, double a_k) {
    SweepRow row;
    row.a_k_dkk_per_kwh = a_k;
    try {
        BatteryParams bat = cfg.battery;
        bat.a_k_dkk_per_kwh = a_k;
        const ProblemInstance inst = build_problem(day, bat, cfg.model);
        const SolveReport report = solve(inst, cfg.solve);
        const auto x = flatten(report.schedule);
        const CostBreakdown cost = cost_breakdown(report.schedule, day, bat);
        row.weight = inst.weight();
        row.energy_cost = cost.energy_cost;
        row.arbitrage_revenue = cost.arbitrage_revenue;
        row.plet_loss = cost.plet_loss;
        row.surrogate_penalty = inst.weight() * plet_surrogate(x, inst);
        row.objective = report.objective;
        row.soc_reversals = soc_reversals(soc_trajectory(report.schedule, bat, day.grid()));
        row.termination = report.termination;
        row.failed = !report.converged();
    } catch (const std::exception& e) {
        row.failed = true;
        row.termination = Termination::Infeasible;
        row.error = e.what();
    }
    return row;
}

}  // namespace

std::vector<SweepRow> sweep(const DayInputs& day, const RunConfig& cfg, const std::vector<double>& ak_values,
                            unsigned threads) {
    if (ak_values.size() < 2) throw InputError("a sweep needs at least 2 weights");
    for (double a : ak_values) {
        if (!std::isfinite(a) || a < 0.0) throw InputError(fmt::format("a_k = {} must be finite and >= 0", a));
    }
    std::vector<SweepRow> rows(ak_values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < ak_values.size();) rows[i] = sweep_point(day, cfg, ak_values[i]);
    };
    const unsigned n = std::clamp<unsigned>(threads, 1u, static_cast<unsigned>(ak_values.size()));
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << kSweepHeader << '\n';
    for (const auto& r : rows) {
        out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.a_k_dkk_per_kwh, r.weight, r.energy_cost,
                           r.arbitrage_revenue, r.plet_loss, r.surrogate_penalty, r.objective, r.soc_reversals,
                           to_string(r.termination), r.failed ? 1 : 0);
    }
}

}  // namespace fcsd
