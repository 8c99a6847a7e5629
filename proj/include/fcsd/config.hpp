#pragma once

// Run configuration: a flat JSON object whose keys mirror the fields below.
// Unknown keys are rejected so that a typo cannot silently fall back to a
// default.
//
//   c_bat_mwh, eta_ch, eta_dis, p_max_mw, soc_0, soc_end, c_life, k_p,
//   a_k_dkk_per_kwh, penalty_mode ("paper" | "capacity"), step_hours,
//   grid_limit_mw, smoothing_eps, terminal_relaxation_weight,
//   tol_feasibility, tol_optimality, max_iterations, seed, tie_break
//
// soc_end defaults to soc_0 when absent.

#include <filesystem>
#include <set>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "fcsd/domain.hpp"
#include "fcsd/model.hpp"
#include "fcsd/rolling.hpp"
#include "fcsd/solver.hpp"

namespace fcsd {

struct RunConfig {
    BatteryParams battery;
    double step_hours = 0.5;
    ModelOptions model;
    SolveOptions solve;
    double terminal_relaxation_weight = 1e6;
    /// Keys given explicitly by the file or an override.
    std::set<std::string> explicit_keys;

    RollingOptions rolling() const { return {model, solve, terminal_relaxation_weight}; }
};

/// Every recognized key, in emission order.
const std::vector<std::string>& config_keys();

/// Defaults taken from the published case study (P_max, C_life, k_p, 30 min
/// steps); every other default is an assumption and is listed as such.
bool is_published_default(std::string_view key);

/// Applies one key; throws InputError on an unknown key or a bad value.
void apply_config_value(RunConfig& cfg, std::string_view key, const nlohmann::json& value);

RunConfig config_from_json(const nlohmann::json& obj);
RunConfig load_config(const std::filesystem::path& path);

/// Applies "key=value" where value is a JSON literal or a bare string.
void apply_override(RunConfig& cfg, std::string_view assignment);

/// Flat object with every key; optional values that are unset are null.
nlohmann::json config_to_json(const RunConfig& cfg);

/// Keys left at an assumed (unpublished) default.
std::vector<std::string> assumed_defaults(const RunConfig& cfg);

}  // namespace fcsd
