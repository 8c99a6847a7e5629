#include "fcsd/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "fcsd/audit.hpp"
#include "fcsd/csv_io.hpp"
#include "fcsd/sweep.hpp"
#include "fcsd/synthetic.hpp"

namespace fcsd {

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(fmt::format("cannot open {}", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << content)) throw InputError(fmt::format("cannot write {}", path));
}

struct Common {
    std::string prices;
    std::string load;
    std::string config;
    std::vector<std::string> overrides;
};

RunConfig make_config(const Common& c) {
    RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
    for (const auto& o : c.overrides) apply_override(cfg, o);
    cfg.battery.validate();
    return cfg;
}

// Digest over the input files (length-prefixed, in argument order) and the
// effective configuration, so equal digests mean equal runs.
json metadata(std::string_view command, const std::vector<std::string>& inputs, const std::optional<RunConfig>& cfg) {
    std::string blob;
    json files = json::array();
    for (const auto& path : inputs) {
        const std::string content = read_file(path);
        blob += fmt::format("{}\n", content.size());
        blob += content;
        files.push_back(path);
    }
    json meta = {{"tool", "fcsd"}, {"version", FCSD_VERSION}, {"command", command}, {"inputs", files}};
    if (cfg) {
        const json config = config_to_json(*cfg);
        blob += config.dump();
        meta["config"] = config;
        meta["assumed_defaults"] = assumed_defaults(*cfg);
        meta["warnings"] = cfg->battery.validate();
    }
    meta["inputs_digest"] = "sha256:" + sha256_hex(blob);
    return meta;
}

json solver_json(const SolveReport& r) {
    json j = {{"termination", std::string(to_string(r.termination))},
              {"objective", r.objective},
              {"iterations", r.iterations},
              {"feasibility_residual", r.feasibility_residual},
              {"optimality_residual", r.optimality_residual},
              {"polished", r.polished},
              {"simultaneity_flags", r.simultaneity_flags}};
    if (r.certificate) {
        j["certificate"] = {{"required_change", r.certificate->required_change},
                            {"reachable_low", r.certificate->reachable_low},
                            {"reachable_high", r.certificate->reachable_high},
                            {"message", r.certificate->message}};
    }
    return j;
}

json summary_json(const CostBreakdown& cost, const json& meta) {
    json j = cost_to_json(cost);
    j["metadata"] = meta;
    return j;
}

std::string schedule_csv(const std::vector<std::int64_t>& timestamps, const DayInputs& day,
                         const DispatchSchedule& schedule, const BatteryParams& bat) {
    std::ostringstream ss;
    write_schedule_csv(ss, make_schedule_table(timestamps, day, schedule, bat));
    return ss.str();
}

int exit_for(Termination t) {
    switch (t) {
    case Termination::Converged:
        return kExitOk;
    case Termination::Infeasible:
        return kExitInput;
    case Termination::MaxIterations:
        return kExitSolver;
    }
    return kExitSolver;
}

void emit(std::ostream& out, const json& doc) { out << doc.dump(2) << '\n'; }

int run_solve(const Common& c, const std::string& out_path, const std::string& summary_path, std::ostream& out,
              std::ostream& err) {
    const RunConfig cfg = make_config(c);
    const TimedDay td = load_day(c.prices, c.load, cfg.step_hours);
    const json meta = metadata("solve", {c.prices, c.load}, cfg);
    const ProblemInstance inst = build_problem(td.day, cfg.battery, cfg.model);
    const SolveReport report = solve(inst, cfg.solve);
    const CostBreakdown cost = cost_breakdown(report.schedule, td.day, cfg.battery);

    json summary = summary_json(cost, meta);
    summary["solver"] = solver_json(report);
    if (!out_path.empty()) write_file(out_path, schedule_csv(td.timestamps, td.day, report.schedule, cfg.battery));
    if (!summary_path.empty()) write_file(summary_path, summary.dump(2) + "\n");
    emit(out, summary);
    if (report.certificate) err << "error: infeasible instance: " << report.certificate->message << '\n';
    if (report.termination == Termination::MaxIterations) {
        err << fmt::format("error: solver did not converge (feasibility residual {}, optimality residual {})\n",
                           report.feasibility_residual, report.optimality_residual);
    }
    return exit_for(report.termination);
}

int run_roll(const Common& c, const std::string& out_path, const std::string& summary_path, std::ostream& out,
             std::ostream& err) {
    const RunConfig cfg = make_config(c);
    const TimedDay td = load_day(c.prices, c.load, cfg.step_hours);
    const json meta = metadata("roll", {c.prices, c.load}, cfg);
    const RollingResult res = roll(td.day, cfg.battery, static_forecasts(td.day), cfg.rolling());

    int code = kExitOk;
    json steps = json::array();
    for (std::size_t t = 0; t < res.reports.size(); ++t) {
        const auto& r = res.reports[t];
        steps.push_back({{"step", t + 1},
                         {"termination", std::string(to_string(r.termination))},
                         {"planned_objective", res.planned_objectives[t]},
                         {"incurred_objective", res.incurred_objective[t]},
                         {"iterations", r.iterations}});
        if (!r.converged()) code = kExitSolver;
    }
    json summary = summary_json(res.cost, meta);
    summary["realized_objective"] = res.realized_objective;
    summary["relaxed_steps"] = res.relaxed_steps;
    summary["steps"] = steps;
    if (!out_path.empty()) write_file(out_path, schedule_csv(td.timestamps, td.day, res.schedule, cfg.battery));
    if (!summary_path.empty()) write_file(summary_path, summary.dump(2) + "\n");
    emit(out, summary);
    if (code != kExitOk) err << "error: at least one rolling re-solve did not converge\n";
    return code;
}

int run_sweep(const Common& c, const std::vector<double>& ak, const std::string& out_path, std::ostream& out,
              std::ostream& err) {
    const RunConfig cfg = make_config(c);
    const TimedDay td = load_day(c.prices, c.load, cfg.step_hours);
    const json meta = metadata("sweep", {c.prices, c.load}, cfg);
    const auto rows = sweep(td.day, cfg, ak);
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    if (!out_path.empty()) write_file(out_path, csv.str());

    int code = kExitOk;
    json jrows = json::array();
    for (const auto& r : rows) {
        json row = {{"a_k_dkk_per_kwh", r.a_k_dkk_per_kwh}, {"weight", r.weight},
                    {"energy_cost", r.energy_cost},         {"arbitrage_revenue", r.arbitrage_revenue},
                    {"plet_loss", r.plet_loss},             {"surrogate_penalty", r.surrogate_penalty},
                    {"objective", r.objective},             {"soc_reversals", r.soc_reversals},
                    {"termination", std::string(to_string(r.termination))}, {"failed", r.failed}};
        if (!r.error.empty()) row["error"] = r.error;
        jrows.push_back(row);
        if (r.failed) {
            code = kExitSolver;
            err << fmt::format("error: sweep point a_k = {} failed: {}\n", r.a_k_dkk_per_kwh,
                               r.error.empty() ? std::string(to_string(r.termination)) : r.error);
        }
    }
    emit(out, {{"metadata", meta}, {"rows", jrows}});
    return code;
}

int run_gen(std::uint64_t seed, const std::string& kind, const std::string& dir, std::ostream& out) {
    const SyntheticDay day = gen_synthetic_day(seed, profile_kind_from_string(kind));
    const SyntheticFiles files = write_synthetic_day(day, dir);
    json meta = metadata("gen", {files.prices.string(), files.load.string()}, std::nullopt);
    meta["seed"] = seed;
    meta["kind"] = kind;
    emit(out, {{"metadata", meta}});
    return kExitOk;
}

int run_audit(const Common& c, const std::string& schedule_path, const std::string& out_path, std::ostream& out) {
    const RunConfig cfg = make_config(c);
    const ScheduleTable table = read_schedule_csv(schedule_path);
    std::vector<std::string> inputs{schedule_path};
    DayInputs day = [&] {
        if (c.prices.empty() != c.load.empty()) throw InputError("--prices and --load must be given together");
        if (!c.prices.empty()) {
            inputs.push_back(c.prices);
            inputs.push_back(c.load);
            return load_day(c.prices, c.load, cfg.step_hours).day;
        }
        return DayInputs(TimeGrid(table.timestamps.size(), cfg.step_hours), PriceSeries(table.prices),
                         LoadProfile(table.load));
    }();
    const json meta = metadata("audit", inputs, cfg);
    json doc = audit_to_json(audit(table.schedule, day, cfg));
    doc["metadata"] = meta;
    if (!out_path.empty()) write_file(out_path, doc.dump(2) + "\n");
    emit(out, doc);
    return kExitOk;
}

int run_oracle(const Common& c, int levels, const std::string& summary_path, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = make_config(c);
    const TimedDay td = load_day(c.prices, c.load, cfg.step_hours);
    const json meta = metadata("oracle", {c.prices, c.load}, cfg);
    const ProblemInstance inst = build_problem(td.day, cfg.battery, cfg.model);
    const SolveReport oracle = oracle_solve(inst, levels, cfg.solve);
    if (oracle.termination == Termination::Infeasible) {
        err << "error: no lattice schedule reaches the terminal SoC\n";
        emit(out, {{"metadata", meta}, {"oracle", solver_json(oracle)}});
        return kExitInput;
    }
    const SolveReport report = solve(inst, cfg.solve);
    const bool aligned = oracle_lattice_aligned(inst, levels);
    const double bound = oracle_grid_gap_bound(inst, levels, cfg.solve);
    const bool upper_ok = report.objective <= oracle.objective + 1e-9;
    const bool lower_ok = !aligned || report.objective >= oracle.objective - bound;
    json doc = {{"metadata", meta},
                {"levels", levels},
                {"oracle_objective", oracle.objective},
                {"solve_objective", report.objective},
                {"grid_gap_bound", bound},
                {"lattice_aligned", aligned},
                {"within_bound", upper_ok && lower_ok},
                {"oracle", solver_json(oracle)},
                {"solver", solver_json(report)}};
    if (!summary_path.empty()) write_file(summary_path, doc.dump(2) + "\n");
    emit(out, doc);
    if (!report.converged()) return exit_for(report.termination);
    if (!(upper_ok && lower_ok)) {
        err << fmt::format("error: solve objective {} is outside [oracle - bound, oracle] = [{}, {}]\n",
                           report.objective, oracle.objective - bound, oracle.objective);
        return kExitSolver;
    }
    return kExitOk;
}

void add_day_options(CLI::App* sub, Common& c, bool required) {
    auto* p = sub->add_option("--prices", c.prices, "Price CSV (timestamp,price_dkk_per_mwh)");
    auto* l = sub->add_option("--load", c.load, "Load CSV (timestamp,load_mw)");
    if (required) {
        p->required();
        l->required();
    }
    sub->add_option("--config", c.config, "JSON run configuration");
    sub->add_option("--set", c.overrides, "Override one config key, key=value (repeatable)");
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Battery arbitrage scheduling for a fast-charging station", "fcsd"};
    app.set_version_flag("--version", FCSD_VERSION);
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    Common c;
    std::string out_path, summary_path, schedule_path, out_dir, kind = "fcs";
    std::vector<double> ak;
    std::uint64_t seed = 42;
    int levels = 11;

    auto* solve_cmd = app.add_subcommand("solve", "One-shot optimal schedule for the day");
    add_day_options(solve_cmd, c, true);
    solve_cmd->add_option("--out", out_path, "Schedule CSV to write");
    solve_cmd->add_option("--summary", summary_path, "Summary JSON to write");

    auto* roll_cmd = app.add_subcommand("roll", "Shrinking-horizon re-optimization, committing one step at a time");
    add_day_options(roll_cmd, c, true);
    roll_cmd->add_option("--out", out_path, "Schedule CSV to write");
    roll_cmd->add_option("--summary", summary_path, "Summary JSON to write");

    auto* sweep_cmd = app.add_subcommand("sweep", "Solve once per degradation weight a_k");
    add_day_options(sweep_cmd, c, true);
    sweep_cmd->add_option("--a-k", ak, "a_k values in DKK/kWh, comma separated")->required()->delimiter(',');
    sweep_cmd->add_option("--out", out_path, "Sweep CSV to write");

    auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic day (prices.csv, load.csv)");
    gen_cmd->add_option("--seed", seed, "Generator seed")->capture_default_str();
    gen_cmd->add_option("--kind", kind, "fcs or flat")->capture_default_str();
    gen_cmd->add_option("--out-dir", out_dir, "Directory for the CSV files")->required();

    auto* audit_cmd = app.add_subcommand("audit", "Check a schedule file and compare PLET with rainflow counting");
    add_day_options(audit_cmd, c, false);
    audit_cmd->add_option("--schedule", schedule_path, "Schedule CSV as written by solve")->required();
    audit_cmd->add_option("--out", out_path, "Audit JSON to write");

    auto* oracle_cmd = app.add_subcommand("oracle", "Brute-force lattice optimum, compared with solve");
    add_day_options(oracle_cmd, c, true);
    oracle_cmd->add_option("--levels", levels, "Power levels per variable")->capture_default_str();
    oracle_cmd->add_option("--summary", summary_path, "Comparison JSON to write");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForVersion& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitInput;
    }

    try {
        if (solve_cmd->parsed()) return run_solve(c, out_path, summary_path, out, err);
        if (roll_cmd->parsed()) return run_roll(c, out_path, summary_path, out, err);
        if (sweep_cmd->parsed()) return run_sweep(c, ak, out_path, out, err);
        if (gen_cmd->parsed()) return run_gen(seed, kind, out_dir, out);
        if (audit_cmd->parsed()) return run_audit(c, schedule_path, out_path, out);
        if (oracle_cmd->parsed()) return run_oracle(c, levels, summary_path, out, err);
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}

int cli_main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return cli_main(args, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolver;
    }
}

}  // namespace fcsd
