// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "fcsd/cli.hpp"
#include "fcsd/config.hpp"
#include "fcsd/csv_io.hpp"
#include "fcsd/degradation.hpp"
#include "fcsd/rolling.hpp"
#include "fcsd/sweep.hpp"
#include "fcsd/synthetic.hpp"
#include "support.hpp"

using namespace fcsd;
using namespace fcsd::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Outcome oracle_equivalence() {
    const auto start = std::chrono::steady_clock::now();
    bool ok = true;
    double worst_above = -INFINITY, worst_below = INFINITY;
    std::string first_failure;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto li = lattice_instance(seed);
        const auto inst = build_problem(li.day, li.bat);
        const auto oracle = oracle_solve(inst, 11);
        const auto s = solve(inst);
        const double bound = oracle_grid_gap_bound(inst, 11);
        const double above = s.objective - oracle.objective;  // must be <= 1e-9
        const double slack = above + bound;                   // must be >= 0
        worst_above = std::max(worst_above, above);
        worst_below = std::min(worst_below, slack);
        const bool this_ok = oracle_lattice_aligned(inst, 11) && oracle.converged() && s.converged() &&
                             above <= 1e-9 && slack >= 0.0;
        if (!this_ok && first_failure.empty()) first_failure = fmt::format(" first failure seed {}", seed);
        ok = ok && this_ok;
    }
    const double secs = seconds_since(start);
    ok = ok && secs < 60.0;
    return {ok, fmt::format("max(solve - oracle) = {:.3e}, min(solve - oracle + bound) = {:.3e}, {:.2f} s{}",
                            worst_above, worst_below, secs, first_failure)};
}

Outcome two_period_optimum() {
    const auto start = std::chrono::steady_clock::now();
    const auto day = two_period_day();
    const auto low = solve(build_problem(day, two_period_battery(0.0)));
    const bool bang = std::abs(low.schedule.p_ch[0] - 1.0) <= 1e-9 && std::abs(low.schedule.p_dis[0]) <= 1e-9 &&
                      std::abs(low.schedule.p_ch[1]) <= 1e-9 && std::abs(low.schedule.p_dis[1] - 1.0) <= 1e-9;
    const bool low_ok = low.converged() && std::abs(low.objective + 100.0) <= 1e-6 && bang;

    const double w = 2.0 * kTwoPeriodThreshold;
    const auto high = solve(build_problem(day, two_period_battery(w)));
    const double trade = std::max({high.schedule.p_ch[0], high.schedule.p_ch[1], high.schedule.p_dis[0],
                                   high.schedule.p_dis[1]});
    const bool high_ok = high.converged() && std::abs(high.objective) <= 1e-6 && trade <= 1e-6;
    const double secs = seconds_since(start);
    return {low_ok && high_ok && secs < 1.0,
            fmt::format("W=0: objective {:.9f}, bang-bang {}; W=2W*: objective {:.9f}, max power {:.6e}; {:.3f} s",
                        low.objective, bang ? "yes" : "no", high.objective, trade, secs)};
}

Outcome penalty_monotonicity() {
    const auto start = std::chrono::steady_clock::now();
    const auto day = gen_synthetic_day(42, ProfileKind::Fcs).day;
    const RunConfig cfg;  // capacity-scaled weight W = a_k * 1000 * C_bat
    const std::vector<double> ak{0.0, 1.0, 10.0, 1000.0, 10000.0};
    const auto rows = sweep(day, cfg, ak);
    bool ok = true;
    std::string trace;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ok = ok && !rows[i].failed && rows[i].termination == Termination::Converged;
        trace += fmt::format("{}{}:{:.4e}/{:.2f}/{}", i ? " " : "", ak[i], rows[i].plet_loss, rows[i].energy_cost,
                             rows[i].soc_reversals);
        if (i == 0) continue;
        const double plet_tol = 1e-6 * std::max(1.0, std::abs(rows[i - 1].plet_loss));
        const double cost_tol = 1e-6 * std::max(1.0, std::abs(rows[i - 1].energy_cost));
        ok = ok && rows[i].plet_loss <= rows[i - 1].plet_loss + plet_tol;
        ok = ok && rows[i].energy_cost >= rows[i - 1].energy_cost - cost_tol;
    }
    ok = ok && 2 * rows.back().soc_reversals <= rows.front().soc_reversals;
    const double secs = seconds_since(start);
    return {ok && secs < 30.0, fmt::format("a_k:plet/energy/reversals {} ; {:.2f} s", trace, secs)};
}

Outcome constraint_satisfaction() {
    const auto start = std::chrono::steady_clock::now();
    int clean = 0, converged = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto ri = random_instance(seed);
        const auto r = solve(build_problem(ri.day, ri.bat));
        converged += r.converged();
        clean += validate_feasibility(r.schedule, ri.bat, ri.day.grid(), 1e-6).empty();
    }
    const double secs = seconds_since(start);
    return {clean == 100 && secs < 300.0,
            fmt::format("{}/100 feasible at 1e-6, {}/100 converged, {:.2f} s", clean, converged, secs)};
}

Outcome gradient_check() {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto ri = random_instance(seed);
        const auto inst = build_problem(ri.day, ri.bat);
        Rng rng(seed + 1000);
        const auto x = rng.vec(inst.num_variables(), 0.0, inst.upper_bound());
        const auto g = objective_gradient(x, inst);
        double diff = 0.0, norm = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
            auto xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd = (objective_value(xp, inst) - objective_value(xm, inst)) / (2 * h);
            diff += (g[i] - fd) * (g[i] - fd);
            norm += std::max(g[i] * g[i], fd * fd);
        }
        worst = std::max(worst, std::sqrt(diff / norm));
    }
    return {worst <= 1e-6, fmt::format("worst relative error {:.3e} over 100 points", worst)};
}

Outcome rolling_consistency() {
    const auto start = std::chrono::steady_clock::now();
    const auto day = gen_synthetic_day(42, ProfileKind::Fcs).day;
    const RunConfig cfg;
    const auto one = solve(build_problem(day, cfg.battery, cfg.model), cfg.solve);
    const auto rolled = roll(day, cfg.battery, static_forecasts(day), cfg.rolling());
    const double rel = std::abs(rolled.realized_objective - one.objective) / std::abs(one.objective);
    const double secs = seconds_since(start);
    return {one.converged() && rel <= 1e-3 && secs < 60.0,
            fmt::format("one-shot {:.6f}, rolled {:.6f}, relative difference {:.3e}, {} re-solves, {:.2f} s",
                        one.objective, rolled.realized_objective, rel, rolled.reports.size(), secs)};
}

Outcome degradation_fidelity() {
    BatteryParams b;
    b.c_life = 12500.0;
    b.k_p = 1.15;
    const double step = plet_step_loss(1.0, b);
    const double acc = plet_accumulated_loss(SocTrajectory{{0.0, 0.5, 0.0}}, b).total_loss;
    const double reference = 7.210003700886641947648048124738750242992e-05;
    const double rel = std::abs(acc - reference) / reference;
    return {step == 8.0e-5 && rel <= 1e-15,
            fmt::format("step loss {:.17g}, accumulated {:.17g}, relative error {:.3e}", step, acc, rel)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome io_round_trip() {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto ri = random_instance(seed);
        const auto r = solve(build_problem(ri.day, ri.bat));
        const auto table = make_schedule_table(regular_timestamps(kSyntheticStart, 48, 0.5), ri.day, r.schedule, ri.bat);
        std::ostringstream out;
        write_schedule_csv(out, table);
        std::istringstream in(out.str());
        const auto back = read_schedule_csv(in);
        for (std::size_t t = 0; t < 48; ++t) {
            worst = std::max({worst, std::abs(back.schedule.p_ch[t] - table.schedule.p_ch[t]),
                              std::abs(back.schedule.p_dis[t] - table.schedule.p_dis[t]),
                              std::abs(back.soc[t] - table.soc[t]), std::abs(back.prices[t] - table.prices[t]),
                              std::abs(back.load[t] - table.load[t])});
        }
    }

    const fs::path root = fs::temp_directory_path() / "fcsd_acceptance";
    fs::remove_all(root);
    std::ostringstream sink;
    bool ran = true;
    for (const char* run : {"a", "b"}) {
        const fs::path dir = root / run;
        const auto p = (dir / "prices.csv").string(), l = (dir / "load.csv").string();
        ran = ran && cli_main({"gen", "--seed", "42", "--out-dir", dir.string()}, sink, sink) == kExitOk;
        ran = ran && cli_main({"solve", "--prices", p, "--load", l, "--set", "a_k_dkk_per_kwh=10", "--out",
                               (dir / "schedule.csv").string()},
                              sink, sink) == kExitOk;
        ran = ran && cli_main({"roll", "--prices", p, "--load", l, "--out", (dir / "rolled.csv").string()}, sink,
                              sink) == kExitOk;
        ran = ran && cli_main({"sweep", "--prices", p, "--load", l, "--a-k", "0,1,10", "--out",
                               (dir / "sweep.csv").string()},
                              sink, sink) == kExitOk;
    }
    bool identical = ran;
    for (const char* name : {"prices.csv", "load.csv", "schedule.csv", "rolled.csv", "sweep.csv"}) {
        identical = identical && slurp(root / "a" / name) == slurp(root / "b" / name) &&
                    !slurp(root / "a" / name).empty();
    }
    fs::remove_all(root);
    return {worst <= 1e-12 && identical,
            fmt::format("max round-trip difference {:.3e}; repeated gen/solve/roll/sweep outputs {}", worst,
                        identical ? "byte-identical" : "differ or failed")};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"oracle equivalence", oracle_equivalence},
        {"two-period analytic optimum", two_period_optimum},
        {"penalty monotonicity", penalty_monotonicity},
        {"constraint satisfaction", constraint_satisfaction},
        {"gradient check", gradient_check},
        {"rolling-horizon consistency", rolling_consistency},
        {"degradation formula fidelity", degradation_fidelity},
        {"I/O round-trip and determinism", io_round_trip},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, fmt::format("exception: {}", e.what())};
        }
        failures += !o.pass;
        fmt::print("{} criterion {} ({}): {}\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
