#include "fcsd/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

namespace fcsd {

namespace {

double as_number(std::string_view key, const nlohmann::json& v) {
    if (!v.is_number()) throw InputError(fmt::format("config key '{}' must be a number, got {}", key, v.dump()));
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw InputError(fmt::format("config key '{}' must be finite", key));
    return d;
}

std::optional<double> as_optional_number(std::string_view key, const nlohmann::json& v) {
    if (v.is_null()) return std::nullopt;
    return as_number(key, v);
}

int as_int(std::string_view key, const nlohmann::json& v) {
    const double d = as_number(key, v);
    if (d != std::floor(d) || d < 0 || d > 2147483647.0) {
        throw InputError(fmt::format("config key '{}' must be a nonnegative integer, got {}", key, v.dump()));
    }
    return static_cast<int>(d);
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "c_bat_mwh",     "eta_ch",        "eta_dis",       "p_max_mw",
        "soc_0",         "soc_end",       "c_life",        "k_p",
        "a_k_dkk_per_kwh", "penalty_mode", "step_hours",   "grid_limit_mw",
        "smoothing_eps", "terminal_relaxation_weight", "tol_feasibility", "tol_optimality",
        "max_iterations", "seed",        "tie_break"};
    return keys;
}

bool is_published_default(std::string_view key) {
    return key == "p_max_mw" || key == "c_life" || key == "k_p" || key == "step_hours";
}

void apply_config_value(RunConfig& cfg, std::string_view key, const nlohmann::json& v) {
    auto& b = cfg.battery;
    if (key == "c_bat_mwh") {
        b.capacity_mwh = as_number(key, v);
    } else if (key == "eta_ch") {
        b.eta_ch = as_number(key, v);
    } else if (key == "eta_dis") {
        b.eta_dis = as_number(key, v);
    } else if (key == "p_max_mw") {
        b.p_max_mw = as_number(key, v);
    } else if (key == "soc_0") {
        b.soc_initial = as_number(key, v);
        if (!cfg.explicit_keys.count("soc_end")) b.soc_end = b.soc_initial;
    } else if (key == "soc_end") {
        b.soc_end = as_number(key, v);
    } else if (key == "c_life") {
        b.c_life = as_number(key, v);
    } else if (key == "k_p") {
        b.k_p = as_number(key, v);
    } else if (key == "a_k_dkk_per_kwh") {
        b.a_k_dkk_per_kwh = as_number(key, v);
    } else if (key == "penalty_mode") {
        if (!v.is_string()) throw InputError("config key 'penalty_mode' must be a string");
        b.penalty_mode = penalty_mode_from_string(v.get<std::string>());
    } else if (key == "step_hours") {
        cfg.step_hours = as_number(key, v);
        if (!(cfg.step_hours > 0.0)) throw InputError("step_hours must be > 0");
    } else if (key == "grid_limit_mw") {
        cfg.model.grid_limit_mw = as_optional_number(key, v);
    } else if (key == "smoothing_eps") {
        cfg.model.smoothing_eps = as_number(key, v);
        if (cfg.model.smoothing_eps < 0.0) throw InputError("smoothing_eps must be >= 0");
    } else if (key == "terminal_relaxation_weight") {
        cfg.terminal_relaxation_weight = as_number(key, v);
        if (!(cfg.terminal_relaxation_weight > 0.0)) throw InputError("terminal_relaxation_weight must be > 0");
    } else if (key == "tol_feasibility") {
        cfg.solve.tol_feasibility = as_number(key, v);
    } else if (key == "tol_optimality") {
        cfg.solve.tol_optimality = as_number(key, v);
    } else if (key == "max_iterations") {
        cfg.solve.max_iterations = as_int(key, v);
    } else if (key == "seed") {
        cfg.solve.seed = static_cast<std::uint64_t>(as_int(key, v));
    } else if (key == "tie_break") {
        cfg.solve.tie_break = as_number(key, v);
        if (cfg.solve.tie_break < 0.0) throw InputError("tie_break must be >= 0");
    } else {
        throw InputError(fmt::format("unknown config key '{}'", key));
    }
    cfg.explicit_keys.insert(std::string(key));
}

RunConfig config_from_json(const nlohmann::json& obj) {
    if (!obj.is_object()) throw InputError("config must be a JSON object");
    RunConfig cfg;
    // soc_0 first so that an explicit soc_end is not overwritten by it.
    if (obj.contains("soc_0")) apply_config_value(cfg, "soc_0", obj.at("soc_0"));
    for (const auto& [key, value] : obj.items()) {
        if (key != "soc_0") apply_config_value(cfg, key, value);
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError(fmt::format("cannot open {}", path.string()));
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return config_from_json(obj);
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw InputError(fmt::format("override '{}' is not of the form key=value", assignment));
    }
    const std::string_view key = assignment.substr(0, eq);
    const std::string text(assignment.substr(eq + 1));
    nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    apply_config_value(cfg, key, value);
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    const auto& b = cfg.battery;
    nlohmann::json j = nlohmann::json::object();
    j["c_bat_mwh"] = b.capacity_mwh;
    j["eta_ch"] = b.eta_ch;
    j["eta_dis"] = b.eta_dis;
    j["p_max_mw"] = b.p_max_mw;
    j["soc_0"] = b.soc_initial;
    j["soc_end"] = b.soc_end;
    j["c_life"] = b.c_life;
    j["k_p"] = b.k_p;
    j["a_k_dkk_per_kwh"] = b.a_k_dkk_per_kwh;
    j["penalty_mode"] = std::string(to_string(b.penalty_mode));
    j["step_hours"] = cfg.step_hours;
    j["grid_limit_mw"] = cfg.model.grid_limit_mw ? nlohmann::json(*cfg.model.grid_limit_mw) : nlohmann::json();
    j["smoothing_eps"] = cfg.model.smoothing_eps;
    j["terminal_relaxation_weight"] = cfg.terminal_relaxation_weight;
    j["tol_feasibility"] = cfg.solve.tol_feasibility;
    j["tol_optimality"] = cfg.solve.tol_optimality;
    j["max_iterations"] = cfg.solve.max_iterations;
    j["seed"] = cfg.solve.seed;
    j["tie_break"] = cfg.solve.tie_break;
    return j;
}

std::vector<std::string> assumed_defaults(const RunConfig& cfg) {
    std::vector<std::string> out;
    for (const auto& key : config_keys()) {
        if (!cfg.explicit_keys.count(key) && !is_published_default(key)) out.push_back(key);
    }
    return out;
}

}  // namespace fcsd
