#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fcsd/model.hpp"
#include "fcsd/solver.hpp"

namespace fcsd::testing {

// T=2, tau=0.5, C_bat=1, eta=1, P_max=1, prices [100, 300], no load,
// SoC_0 = SoC_end = 0: buy 0.5 MWh at 100, sell it at 300.
inline DayInputs two_period_day() {
    return DayInputs(TimeGrid(2, 0.5), PriceSeries({100.0, 300.0}), LoadProfile({0.0, 0.0}));
}

inline BatteryParams two_period_battery(double a_k = 0.0, PenaltyMode mode = PenaltyMode::Paper) {
    BatteryParams b;
    b.capacity_mwh = 1.0;
    b.eta_ch = 1.0;
    b.eta_dis = 1.0;
    b.p_max_mw = 1.0;
    b.soc_initial = 0.0;
    b.soc_end = 0.0;
    b.a_k_dkk_per_kwh = a_k;
    b.penalty_mode = mode;
    return b;
}

// Idle/bang-bang threshold of the two-period instance in paper mode:
// W* = 100 * C_life / (2 * 0.5^1.15), frozen from a 40-digit evaluation.
inline constexpr double kTwoPeriodThreshold = 1386961.840084806;

inline std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    double uniform(double lo, double hi) { return lo + (hi - lo) * (double(gen_() >> 11) * 0x1.0p-53); }
    std::vector<double> vec(std::size_t n, double lo, double hi) {
        std::vector<double> v(n);
        for (double& x : v) x = uniform(lo, hi);
        return v;
    }

private:
    std::mt19937_64 gen_;
};

struct RandomInstance {
    DayInputs day;
    BatteryParams bat;
};

// Feasible by construction: SoC_0 and SoC_end anywhere in [0, 1] are mutually
// reachable within 48 half-hour steps at the sampled capacity range.
inline RandomInstance random_instance(std::uint64_t seed, std::size_t steps = 48) {
    Rng rng(seed);
    auto prices = rng.vec(steps, -100.0, 700.0);
    auto load = rng.vec(steps, 0.0, 2.0);
    BatteryParams b;
    b.capacity_mwh = rng.uniform(0.5, 4.0);
    b.eta_ch = rng.uniform(0.85, 1.0);
    b.eta_dis = rng.uniform(0.85, 1.0);
    b.p_max_mw = rng.uniform(0.5, 2.0);
    b.soc_initial = rng.uniform(0.0, 1.0);
    b.soc_end = rng.uniform(0.0, 1.0);
    b.k_p = rng.uniform(1.1, 1.3);
    b.a_k_dkk_per_kwh = seed % 4 == 0 ? 0.0 : std::pow(10.0, rng.uniform(-1.0, 3.0));
    b.penalty_mode = seed % 2 ? PenaltyMode::Capacity : PenaltyMode::Paper;
    return {DayInputs(TimeGrid(steps, 0.5), PriceSeries(std::move(prices)), LoadProfile(std::move(load))), b};
}

// T=3 instance on which the oracle lattice contains every SoC it can reach:
// eta = 1, tau * P_max / C_bat a multiple of 1/(levels-1) steps that divide 1.
inline RandomInstance lattice_instance(std::uint64_t seed) {
    Rng rng(seed);
    auto prices = rng.vec(3, 0.0, 500.0);
    auto load = rng.vec(3, 0.0, 1.0);
    BatteryParams b;
    b.capacity_mwh = 1.0;
    b.eta_ch = 1.0;
    b.eta_dis = 1.0;
    b.p_max_mw = 1.0;
    // SoC grid step is 0.05; pick SoC_0 and SoC_end on it.
    b.soc_initial = std::round(rng.uniform(0.0, 20.0)) / 20.0;
    b.soc_end = std::round(rng.uniform(0.0, 20.0)) / 20.0;
    b.a_k_dkk_per_kwh = std::pow(10.0, rng.uniform(-2.0, 1.5));
    b.penalty_mode = PenaltyMode::Capacity;
    return {DayInputs(TimeGrid(3, 0.5), PriceSeries(std::move(prices)), LoadProfile(std::move(load))), b};
}

inline std::string fixture(const std::string& name) { return std::string(FCSD_FIXTURE_DIR) + "/" + name; }

}  // namespace fcsd::testing
