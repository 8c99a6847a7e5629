#include "fcsd/degradation.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace fcsd {

double plet_lifetime_throughput(double cycles, double dod, double k_p) {
    if (!(cycles >= 0.0)) throw InputError(fmt::format("cycle count must be >= 0, got {}", cycles));
    if (!(dod >= 0.0 && dod <= 1.0)) throw InputError(fmt::format("DOD must be in [0, 1], got {}", dod));
    if (!(k_p >= 1.0)) throw InputError(fmt::format("k_p must be >= 1, got {}", k_p));
    return cycles * std::pow(dod, k_p);
}

double plet_step_loss(double delta_dod, const BatteryParams& bat) {
    if (!(delta_dod >= 0.0)) throw InputError(fmt::format("SoC change must be >= 0, got {}", delta_dod));
    return std::pow(delta_dod, bat.k_p) / bat.c_life;
}

DegradationLedger plet_accumulated_loss(const SocTrajectory& traj, const BatteryParams& bat) {
    DegradationLedger ledger;
    if (traj.soc.size() < 2) return ledger;
    ledger.per_step_loss.resize(traj.soc.size() - 1);
    for (std::size_t t = 1; t < traj.soc.size(); ++t) {
        ledger.per_step_loss[t - 1] = plet_step_loss(std::abs(traj.soc[t] - traj.soc[t - 1]), bat);
    }
    for (double loss : ledger.per_step_loss) ledger.total_loss += loss;
    return ledger;
}

std::vector<double> extract_extrema(const std::vector<double>& series) {
    std::vector<double> pts;
    for (double v : series) {
        if (pts.empty() || v != pts.back()) pts.push_back(v);
    }
    if (pts.size() < 3) return pts;

    std::vector<double> out{pts.front()};
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
        const double before = pts[i] - out.back();
        const double after = pts[i + 1] - pts[i];
        if ((before > 0.0) != (after > 0.0)) out.push_back(pts[i]);
    }
    out.push_back(pts.back());
    return out;
}

namespace {

// Four-point rule: with consecutive turning points a, b, c, d, the inner
// range |c - b| is a closed cycle when it is no larger than both neighbours.
std::vector<double> four_point(const std::vector<double>& extrema, std::vector<CycleRecord>& cycles) {
    std::vector<double> stack;
    stack.reserve(extrema.size());
    for (double p : extrema) {
        stack.push_back(p);
        while (stack.size() >= 4) {
            const std::size_t n = stack.size();
            const double a = stack[n - 4], b = stack[n - 3], c = stack[n - 2], d = stack[n - 1];
            const double inner = std::abs(c - b);
            if (inner <= std::abs(b - a) && inner <= std::abs(d - c)) {
                cycles.push_back({inner, 1.0});
                stack.erase(stack.end() - 3, stack.end() - 1);
            } else {
                break;
            }
        }
    }
    return stack;
}

void count_half_cycles(const std::vector<double>& residual, std::vector<CycleRecord>& cycles) {
    for (std::size_t i = 1; i < residual.size(); ++i) {
        cycles.push_back({std::abs(residual[i] - residual[i - 1]), 0.5});
    }
}

}  // namespace

std::vector<CycleRecord> rainflow_cycles(const SocTrajectory& traj, ResidualPolicy policy) {
    std::vector<CycleRecord> cycles;
    const std::vector<double> residual = four_point(extract_extrema(traj.soc), cycles);
    if (residual.size() < 2) return cycles;

    if (policy == ResidualPolicy::HalfCycles) {
        count_half_cycles(residual, cycles);
        return cycles;
    }

    // Close the residual into a loop that starts and ends at its highest
    // point; rainflow on such a loop leaves only [max, min, max].
    std::vector<double> loop = residual;
    if (loop.front() == loop.back()) loop.pop_back();
    const auto top = std::max_element(loop.begin(), loop.end());
    std::rotate(loop.begin(), top, loop.end());
    loop.push_back(loop.front());

    const std::vector<double> rest = four_point(extract_extrema(loop), cycles);
    if (rest.size() == 3 && rest.front() == rest.back()) {
        cycles.push_back({std::abs(rest[1] - rest[0]), 1.0});
    } else {
        count_half_cycles(rest, cycles);
    }
    return cycles;
}

double rainflow_equivalent_loss(const std::vector<CycleRecord>& cycles, const BatteryParams& bat) {
    double total = 0.0;
    for (const auto& c : cycles) total += c.weight * std::pow(c.depth, bat.k_p) / bat.c_life;
    return total;
}

}  // namespace fcsd
