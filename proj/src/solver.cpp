#include "fcsd/solver.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "program.hpp"

namespace fcsd {

std::string_view to_string(Termination t) {
    switch (t) {
    case Termination::Converged:
        return "converged";
    case Termination::MaxIterations:
        return "max_iter";
    case Termination::Infeasible:
        return "infeasible";
    }
    return "unknown";
}

namespace detail {

double Program::value(const Eigen::VectorXd& x) const {
    double f = linear.dot(x);
    if (weight != 0.0) {
        for (const auto& t : terms) {
            const double s = t.charge_coeff * x[t.charge] + t.discharge_coeff * x[t.discharge];
            f += weight * plet_surrogate_term(s, k_p, eps, c_life);
        }
    }
    return f;
}

Eigen::VectorXd Program::gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g = linear;
    if (weight != 0.0) {
        for (const auto& t : terms) {
            const double s = t.charge_coeff * x[t.charge] + t.discharge_coeff * x[t.discharge];
            const double slope = weight * plet_surrogate_slope(s, k_p, eps, c_life);
            g[t.charge] += slope * t.charge_coeff;
            g[t.discharge] += slope * t.discharge_coeff;
        }
    }
    return g;
}

Eigen::MatrixXd Program::hessian(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    if (weight == 0.0) return H;
    for (const auto& t : terms) {
        double s = t.charge_coeff * x[t.charge] + t.discharge_coeff * x[t.discharge];
        // Curvature of s^k_p is unbounded at 0; interior iterates never sit there
        // exactly, but refinement steps can.
        const double floor = 1e-14 * (t.charge_coeff + t.discharge_coeff);
        if (std::abs(s) < floor) s = floor;
        const double curv = weight * plet_surrogate_curvature(s, k_p, eps, c_life);
        H(t.charge, t.charge) += curv * t.charge_coeff * t.charge_coeff;
        H(t.charge, t.discharge) += curv * t.charge_coeff * t.discharge_coeff;
        H(t.discharge, t.charge) += curv * t.charge_coeff * t.discharge_coeff;
        H(t.discharge, t.discharge) += curv * t.discharge_coeff * t.discharge_coeff;
    }
    return H;
}

double tie_break_weight(const ProblemInstance& inst, const SolveOptions& opts) {
    double pmax = 0.0;
    for (double p : inst.day().prices().values()) pmax = std::max(pmax, std::abs(p));
    return opts.tie_break * std::max(1.0, pmax * inst.battery().capacity_mwh);
}

Program build_program(const ProblemInstance& inst, const SolveOptions& opts) {
    const auto& day = inst.day();
    const auto& bat = inst.battery();
    const auto T = static_cast<Eigen::Index>(inst.steps());
    const double tau = day.grid().step_hours();
    const double pmax = bat.p_max_mw;
    const bool soft = inst.options().terminal_soft_weight.has_value();
    const double c_ch = inst.charge_soc_coeff() * pmax;
    const double c_dis = inst.discharge_soc_coeff() * pmax;

    Program prog;
    prog.schedule_vars = 2 * T;
    prog.n = 2 * T + (soft ? 2 : 0);
    prog.pmax = pmax;
    prog.k_p = bat.k_p;
    prog.eps = inst.options().smoothing_eps;
    prog.c_life = bat.c_life;

    const double tie = tie_break_weight(inst, opts);
    Eigen::VectorXd linear(prog.n);
    for (Eigen::Index t = 0; t < T; ++t) {
        const double price = day.prices()[static_cast<std::size_t>(t)] * tau * pmax;
        linear[t] = price + tie * c_ch;
        linear[T + t] = -price + tie * c_dis;
        prog.terms.push_back({t, T + t, c_ch, c_dis});
    }
    if (soft) {
        linear[2 * T] = *inst.options().terminal_soft_weight;
        linear[2 * T + 1] = *inst.options().terminal_soft_weight;
    }

    const double smax = c_ch + c_dis;
    const double penalty_scale =
        inst.weight() * plet_surrogate_slope(smax, bat.k_p, prog.eps, bat.c_life) * std::max(c_ch, c_dis);
    prog.fscale = std::max({1.0, linear.cwiseAbs().maxCoeff(), penalty_scale});
    prog.linear = linear / prog.fscale;
    prog.weight = inst.weight() / prog.fscale;

    prog.lb = Eigen::VectorXd::Zero(prog.n);
    prog.ub = Eigen::VectorXd::Ones(prog.n);
    if (soft) prog.ub.tail(2).setConstant(kInf);

    // Cumulative SoC rows; the last one carries the terminal condition.
    Eigen::MatrixXd cum = Eigen::MatrixXd::Zero(T, prog.n);
    for (Eigen::Index row = 0; row < T; ++row) {
        for (Eigen::Index s = 0; s <= row; ++s) {
            cum(row, s) = c_ch;
            cum(row, T + s) = -c_dis;
        }
    }
    const double soc0 = bat.soc_initial;
    const Eigen::Index box_rows = soft ? T : T - 1;
    const auto& limit = inst.options().grid_limit_mw;
    const Eigen::Index grid_rows = limit ? 2 * T : 0;

    prog.G = Eigen::MatrixXd::Zero(2 * box_rows + grid_rows, prog.n);
    prog.h = Eigen::VectorXd::Zero(2 * box_rows + grid_rows);
    for (Eigen::Index row = 0; row < box_rows; ++row) {
        prog.G.row(2 * row) = cum.row(row);
        prog.h[2 * row] = 1.0 - soc0;
        prog.G.row(2 * row + 1) = -cum.row(row);
        prog.h[2 * row + 1] = soc0;
    }
    if (limit) {
        for (Eigen::Index t = 0; t < T; ++t) {
            const double dem = day.load()[static_cast<std::size_t>(t)];
            const Eigen::Index r = 2 * box_rows + 2 * t;
            prog.G(r, t) = pmax;
            prog.G(r, T + t) = -pmax;
            prog.h[r] = *limit - dem;
            prog.G(r + 1, t) = -pmax;
            prog.G(r + 1, T + t) = pmax;
            prog.h[r + 1] = *limit + dem;
        }
    }

    prog.A = cum.row(T - 1);
    if (soft) {
        prog.A(0, 2 * T) = -1.0;
        prog.A(0, 2 * T + 1) = 1.0;
    }
    prog.b = Eigen::VectorXd::Constant(1, bat.soc_end - soc0);
    return prog;
}

}  // namespace detail

std::optional<ReachabilityCertificate> check_reachability(const ProblemInstance& inst) {
    if (inst.options().terminal_soft_weight) return std::nullopt;
    const auto& bat = inst.battery();
    const auto& load = inst.day().load();
    const double P = bat.p_max_mw;
    const double cc = inst.charge_soc_coeff();
    const double cd = inst.discharge_soc_coeff();
    const auto& limit = inst.options().grid_limit_mw;

    double lo = bat.soc_initial;
    double hi = bat.soc_initial;
    const double required = bat.soc_end - bat.soc_initial;
    for (std::size_t t = 0; t < inst.steps(); ++t) {
        double up = cc * P;
        double down = -cd * P;
        if (limit) {
            const double dem = load[t];
            if (dem - *limit > P) {
                return ReachabilityCertificate{
                    required, lo, hi,
                    fmt::format("step {}: load {} MW exceeds grid limit {} MW plus discharge limit {} MW", t + 1, dem,
                                *limit, P)};
            }
            up = *limit >= dem ? cc * std::min(P, *limit - dem) : -cd * (dem - *limit);
            down = *limit + dem < P ? cc * (P - *limit - dem) - cd * P : -cd * P;
        }
        lo += down;
        hi += up;
        if (t + 1 < inst.steps()) {
            lo = std::max(lo, 0.0);
            hi = std::min(hi, 1.0);
            if (lo > hi) {
                return ReachabilityCertificate{required, lo, hi,
                                               fmt::format("no SoC in [0, 1] is reachable after step {}", t + 1)};
            }
        }
    }
    const double slack = 1e-12;
    if (bat.soc_end < lo - slack || bat.soc_end > hi + slack) {
        return ReachabilityCertificate{
            required, lo, hi,
            fmt::format("SoC_end = {} is unreachable from SoC_0 = {}: required change {:+.6g}, reachable terminal "
                        "SoC range [{:.6g}, {:.6g}] (max change +{:.6g} / -{:.6g} over {} steps at P_max)",
                        bat.soc_end, bat.soc_initial, required, lo, hi, cc * P * double(inst.steps()),
                        cd * P * double(inst.steps()), inst.steps())};
    }
    return std::nullopt;
}

namespace {

using detail::kInf;
using detail::Program;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct IpmPoint {
    VectorXd x, zl, zu, s, z, y;
};

struct IpmResult {
    IpmPoint point;
    int iterations = 0;
    double dual_residual = kInf;
    double primal_residual = kInf;
    double mu = kInf;
    bool converged = false;

};

struct Direction {
    VectorXd dx, dzl, dzu, ds, dz, dy;
};

// min over t in [0, 1] of a*t + w*phi(s0 + ds*t), ds >= 0; phi convex.
double edge_minimum(const Program& p, double a, double s0, double ds) {
    auto value = [&](double t) { return a * t + p.weight * plet_surrogate_term(s0 + ds * t, p.k_p, p.eps, p.c_life); };
    auto slope = [&](double t) { return a + p.weight * ds * plet_surrogate_slope(s0 + ds * t, p.k_p, p.eps, p.c_life); };
    if (slope(0.0) >= 0.0) return value(0.0);
    if (slope(1.0) <= 0.0) return value(1.0);
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (slope(mid) < 0.0 ? lo : hi) = mid;
    }
    return std::min({value(lo), value(hi), value(0.0), value(1.0)});
}

// Lagrangian dual function at inequality multipliers z (negative entries are
// clipped) and equality multipliers y, minimizing over the variable bounds.
// Weak duality makes f(x) - dual_bound an upper bound on the suboptimality of
// any feasible x; unlike a gradient residual it stays meaningful at zero
// throughput, where the slope of s^k is unbounded in relative terms.
double dual_bound(const Program& p, const VectorXd& z_in, const VectorXd& y) {
    const VectorXd z = z_in.cwiseMax(0.0);
    VectorXd c = p.linear;
    double bound = 0.0;
    if (p.G.rows() > 0) {
        c += p.G.transpose() * z;
        bound -= z.dot(p.h);
    }
    if (p.A.rows() > 0) {
        c += p.A.transpose() * y;
        bound -= y.dot(p.b);
    }
    std::vector<bool> paired(static_cast<std::size_t>(p.n), false);
    for (const auto& t : p.terms) {
        paired[static_cast<std::size_t>(t.charge)] = true;
        paired[static_cast<std::size_t>(t.discharge)] = true;
        const double cu = c[t.charge];
        const double cv = c[t.discharge];
        const double a = t.charge_coeff;
        const double b = t.discharge_coeff;
        // Along a level set of s the Lagrangian is linear, so the minimum over
        // the unit square lies on its boundary.
        bound += std::min({edge_minimum(p, cu, 0.0, a), cv + edge_minimum(p, cu, b, a), edge_minimum(p, cv, 0.0, b),
                           cu + edge_minimum(p, cv, a, b)});
    }
    for (Index i = 0; i < p.n; ++i) {
        if (paired[static_cast<std::size_t>(i)]) continue;
        if (c[i] >= 0.0) {
            bound += c[i] * p.lb[i];
        } else if (std::isfinite(p.ub[i])) {
            bound += c[i] * p.ub[i];
        } else {
            return -kInf;
        }
    }
    return bound;
}

class InteriorPoint {
public:
    explicit InteriorPoint(const Program& prog) : p_(prog) {
        has_ub_.resize(p_.n);
        for (Index i = 0; i < p_.n; ++i) has_ub_[i] = std::isfinite(p_.ub[i]);
        n_compl_ = p_.n + static_cast<Index>(std::count(has_ub_.begin(), has_ub_.end(), true)) + p_.G.rows();
    }

    IpmResult run(int max_iter) {
        IpmPoint pt = initial_point();
        IpmResult best;
        best.point = pt;
        double best_merit = kInf;

        for (int iter = 0; iter <= max_iter; ++iter) {
            const VectorXd g = p_.gradient(pt.x);
            const VectorXd sl = pt.x - p_.lb;
            const VectorXd su = upper_slack(pt.x);
            const VectorXd rd = dual_residual(pt, g);
            const VectorXd rp = p_.G * pt.x + pt.s - p_.h;
            const VectorXd re = p_.A * pt.x - p_.b;
            const double mu = complementarity(pt, sl, su);

            const double dual_norm = rd.lpNorm<Eigen::Infinity>();
            const double primal_norm = std::max(inf_norm(rp), inf_norm(re));
            const double merit = std::max({dual_norm, primal_norm, mu});
            if (merit < best_merit) {
                best_merit = merit;
                best.point = pt;
                best.dual_residual = dual_norm;
                best.primal_residual = primal_norm;
                best.mu = mu;
            }
            best.iterations = iter;
            if (primal_norm <= kPrimalTol && mu <= kMuTol &&
                (dual_norm <= kDualTol || p_.value(pt.x) - dual_bound(p_, pt.z, pt.y) <= kGapTol)) {
                best.converged = true;
                break;
            }
            if (iter == max_iter) break;

            const MatrixXd H = p_.hessian(pt.x);
            if (!factor(pt, H, sl, su)) break;

            // Predictor.
            VectorXd rcl = pt.zl.cwiseProduct(sl);
            VectorXd rcu = masked(pt.zu.cwiseProduct(su));
            VectorXd rcs = pt.z.cwiseProduct(pt.s);
            const Direction aff = direction(pt, sl, su, rd, rp, re, rcl, rcu, rcs);
            const double alpha_aff = max_step(pt, sl, su, aff);
            const double mu_aff = complementarity_after(pt, sl, su, aff, alpha_aff);
            const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);

            // Corrector.
            rcl += aff.dx.cwiseProduct(aff.dzl) - VectorXd::Constant(p_.n, sigma * mu);
            rcu += masked(-aff.dx.cwiseProduct(aff.dzu) - VectorXd::Constant(p_.n, sigma * mu));
            rcs += aff.ds.cwiseProduct(aff.dz) - VectorXd::Constant(rcs.size(), sigma * mu);
            const Direction d = direction(pt, sl, su, rd, rp, re, rcl, rcu, rcs);
            const double alpha = std::min(1.0, 0.995 * max_step(pt, sl, su, d));
            if (!(alpha > 1e-14) || !d.dx.allFinite()) break;

            pt.x += alpha * d.dx;
            pt.zl += alpha * d.dzl;
            pt.zu += alpha * d.dzu;
            pt.s += alpha * d.ds;
            pt.z += alpha * d.dz;
            pt.y += alpha * d.dy;
        }
        return best;
    }

private:
    // Scaled units: objective O(1), variables in [0, 1], SoC rows O(1).
    static constexpr double kDualTol = 1e-11;
    static constexpr double kPrimalTol = 1e-12;
    static constexpr double kMuTol = 1e-13;
    static constexpr double kGapTol = 1e-15;

    static double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

    VectorXd masked(VectorXd v) const {
        for (Index i = 0; i < p_.n; ++i) {
            if (!has_ub_[i]) v[i] = 0.0;
        }
        return v;
    }

    VectorXd upper_slack(const VectorXd& x) const {
        VectorXd su(p_.n);
        for (Index i = 0; i < p_.n; ++i) su[i] = has_ub_[i] ? p_.ub[i] - x[i] : 1.0;
        return su;
    }

    IpmPoint initial_point() const {
        IpmPoint pt;
        pt.x.resize(p_.n);
        for (Index i = 0; i < p_.n; ++i) pt.x[i] = has_ub_[i] ? 0.5 * (p_.lb[i] + p_.ub[i]) : p_.lb[i] + 1.0;
        pt.zl = VectorXd::Ones(p_.n);
        pt.zu = masked(VectorXd::Ones(p_.n));
        pt.s = (p_.h - p_.G * pt.x).cwiseMax(1.0);
        pt.z = VectorXd::Ones(p_.G.rows());
        pt.y = VectorXd::Zero(p_.A.rows());
        return pt;
    }

    VectorXd dual_residual(const IpmPoint& pt, const VectorXd& g) const {
        return g - pt.zl + pt.zu + p_.G.transpose() * pt.z + p_.A.transpose() * pt.y;
    }

    double complementarity(const IpmPoint& pt, const VectorXd& sl, const VectorXd& su) const {
        double total = pt.zl.dot(sl) + pt.z.dot(pt.s);
        for (Index i = 0; i < p_.n; ++i) {
            if (has_ub_[i]) total += pt.zu[i] * su[i];
        }
        return total / static_cast<double>(n_compl_);
    }

    double complementarity_after(const IpmPoint& pt, const VectorXd& sl, const VectorXd& su, const Direction& d,
                                 double a) const {
        double total = (sl + a * d.dx).dot(pt.zl + a * d.dzl) + (pt.s + a * d.ds).dot(pt.z + a * d.dz);
        for (Index i = 0; i < p_.n; ++i) {
            if (has_ub_[i]) total += (su[i] - a * d.dx[i]) * (pt.zu[i] + a * d.dzu[i]);
        }
        return total / static_cast<double>(n_compl_);
    }

    bool factor(const IpmPoint& pt, const MatrixXd& H, const VectorXd& sl, const VectorXd& su) {
        MatrixXd M = H;
        for (Index i = 0; i < p_.n; ++i) {
            M(i, i) += pt.zl[i] / sl[i];
            if (has_ub_[i]) M(i, i) += pt.zu[i] / su[i];
        }
        const VectorXd w = pt.z.cwiseQuotient(pt.s);
        M.noalias() += p_.G.transpose() * (w.asDiagonal() * p_.G);
        ldlt_.compute(M);
        if (ldlt_.info() != Eigen::Success) return false;
        if (p_.A.rows() > 0) {
            minv_at_ = ldlt_.solve(p_.A.transpose());
            schur_.compute(p_.A * minv_at_);
        }
        return true;
    }

    Direction direction(const IpmPoint& pt, const VectorXd& sl, const VectorXd& su, const VectorXd& rd,
                        const VectorXd& rp, const VectorXd& re, const VectorXd& rcl, const VectorXd& rcu,
                        const VectorXd& rcs) const {
        VectorXd rhs = -rd - rcl.cwiseQuotient(sl) - p_.G.transpose() * (pt.z.cwiseProduct(rp) - rcs).cwiseQuotient(pt.s);
        for (Index i = 0; i < p_.n; ++i) {
            if (has_ub_[i]) rhs[i] += rcu[i] / su[i];
        }
        Direction d;
        const VectorXd minv_rhs = ldlt_.solve(rhs);
        if (p_.A.rows() > 0) {
            d.dy = schur_.solve(p_.A * minv_rhs + re);
            d.dx = minv_rhs - minv_at_ * d.dy;
        } else {
            d.dy = VectorXd::Zero(0);
            d.dx = minv_rhs;
        }
        d.dzl = (-rcl - pt.zl.cwiseProduct(d.dx)).cwiseQuotient(sl);
        d.dzu = VectorXd::Zero(p_.n);
        for (Index i = 0; i < p_.n; ++i) {
            if (has_ub_[i]) d.dzu[i] = (-rcu[i] + pt.zu[i] * d.dx[i]) / su[i];
        }
        d.ds = -rp - p_.G * d.dx;
        d.dz = (-rcs - pt.z.cwiseProduct(d.ds)).cwiseQuotient(pt.s);
        return d;
    }

    double max_step(const IpmPoint& pt, const VectorXd& sl, const VectorXd& su, const Direction& d) const {
        double a = 1.0 / 0.995;
        auto limit = [&a](double v, double dv) {
            if (dv < 0.0) a = std::min(a, -v / dv);
        };
        for (Index i = 0; i < p_.n; ++i) {
            limit(sl[i], d.dx[i]);
            limit(pt.zl[i], d.dzl[i]);
            if (has_ub_[i]) {
                limit(su[i], -d.dx[i]);
                limit(pt.zu[i], d.dzu[i]);
            }
        }
        for (Index j = 0; j < pt.s.size(); ++j) {
            limit(pt.s[j], d.ds[j]);
            limit(pt.z[j], d.dz[j]);
        }
        return a;
    }

    const Program& p_;
    std::vector<bool> has_ub_;
    Index n_compl_ = 0;
    Eigen::LDLT<MatrixXd> ldlt_;
    MatrixXd minv_at_;
    Eigen::LDLT<MatrixXd> schur_;
};

struct PolishResult {
    VectorXd x;
    VectorXd z, y;  // multipliers of the inequality and equality rows
    double kkt_residual = kInf;
    int iterations = 0;
    bool ok = false;
};

// Primal active-set refinement started from the interior-point estimate
// (multiplier larger than slack means active). Each pass takes a Newton step
// on the working set, stops at the first blocking constraint, and releases the
// constraint with the most wrong-signed multiplier once the step vanishes.
// Recovers exact vertices of the linear part and exact zeros of throughput,
// where the s^k term is too steep for the interior point to settle.
class ActiveSet {
public:
    ActiveSet(const Program& p, const IpmPoint& pt) : p_(p), state_(static_cast<std::size_t>(p.n), 0) {
        x_ = pt.x;
        for (Index i = 0; i < p_.n; ++i) {
            const double sl = pt.x[i] - p_.lb[i];
            const double su = std::isfinite(p_.ub[i]) ? p_.ub[i] - pt.x[i] : kInf;
            if (pt.zl[i] > sl) {
                fix(i, -1);
            } else if (std::isfinite(p_.ub[i]) && pt.zu[i] > su) {
                fix(i, 1);
            }
        }
        row_active_.assign(static_cast<std::size_t>(p_.G.rows()), false);
        for (Index j = 0; j < p_.G.rows(); ++j) row_active_[static_cast<std::size_t>(j)] = pt.z[j] > pt.s[j];
    }

    PolishResult run(int max_iter) {
        PolishResult out;
        Index releases = 0;
        for (int iter = 0; iter < max_iter; ++iter) {
            assemble();
            VectorXd dxf;
            if (!newton(dxf)) return out;
            ++out.iterations;
            if (dxf.size() > 0 && dxf.lpNorm<Eigen::Infinity>() > kStepTol && take_step(dxf)) continue;
            if (++releases > 2 * p_.n || !release_worst()) {
                out.ok = finish(out);
                return out;
            }
        }
        assemble();
        VectorXd dxf;
        if (newton(dxf)) out.ok = finish(out);
        return out;
    }

private:
    static constexpr double kSignTol = 1e-12;
    static constexpr double kStepTol = 1e-13;

    void fix(Index i, int side) {
        state_[static_cast<std::size_t>(i)] = side;
        x_[i] = side < 0 ? p_.lb[i] : p_.ub[i];
    }

    // Working rows restricted to free columns, reduced to an independent subset.
    void assemble() {
        free_.clear();
        for (Index i = 0; i < p_.n; ++i) {
            if (state_[static_cast<std::size_t>(i)] == 0) free_.push_back(i);
        }
        std::vector<Index> working;
        for (Index j = 0; j < p_.G.rows(); ++j) {
            if (row_active_[static_cast<std::size_t>(j)]) working.push_back(j);
        }
        const Index n_g = static_cast<Index>(working.size());
        const Index n_eq = n_g + p_.A.rows();
        MatrixXd E(n_eq, p_.n);
        VectorXd e(n_eq);
        std::vector<Index> origin(static_cast<std::size_t>(n_eq));  // G row index, or -(k+1) for equality row k
        for (Index r = 0; r < n_g; ++r) {
            E.row(r) = p_.G.row(working[static_cast<std::size_t>(r)]);
            e[r] = p_.h[working[static_cast<std::size_t>(r)]];
            origin[static_cast<std::size_t>(r)] = working[static_cast<std::size_t>(r)];
        }
        E.bottomRows(p_.A.rows()) = p_.A;
        e.tail(p_.A.rows()) = p_.b;
        for (Index r = 0; r < p_.A.rows(); ++r) origin[static_cast<std::size_t>(n_g + r)] = -r - 1;

        const Index nf = static_cast<Index>(free_.size());
        std::vector<Index> keep;
        if (nf > 0 && n_eq > 0) {
            MatrixXd C(n_eq, nf);
            for (Index k = 0; k < nf; ++k) C.col(k) = E.col(free_[static_cast<std::size_t>(k)]);
            Eigen::ColPivHouseholderQR<MatrixXd> qr(C.transpose());
            qr.setThreshold(1e-10);
            for (Index k = 0; k < qr.rank(); ++k) keep.push_back(qr.colsPermutation().indices()[k]);
            std::sort(keep.begin(), keep.end());
        }
        const Index nr = static_cast<Index>(keep.size());
        Es_.resize(nr, p_.n);
        es_.resize(nr);
        row_origin_.assign(static_cast<std::size_t>(nr), -1);
        for (Index k = 0; k < nr; ++k) {
            const auto src = static_cast<std::size_t>(keep[static_cast<std::size_t>(k)]);
            Es_.row(k) = E.row(static_cast<Index>(src));
            es_[k] = e[static_cast<Index>(src)];
            row_origin_[static_cast<std::size_t>(k)] = origin[src];
        }
    }

    bool newton(VectorXd& dxf) {
        const Index nf = static_cast<Index>(free_.size());
        const Index nr = Es_.rows();
        const VectorXd g = p_.gradient(x_);
        const MatrixXd H = p_.hessian(x_);
        MatrixXd K = MatrixXd::Zero(nf + nr, nf + nr);
        VectorXd rhs(nf + nr);
        for (Index a = 0; a < nf; ++a) {
            const Index ia = free_[static_cast<std::size_t>(a)];
            for (Index b = 0; b < nf; ++b) K(a, b) = H(ia, free_[static_cast<std::size_t>(b)]);
            for (Index r = 0; r < nr; ++r) {
                K(a, nf + r) = Es_(r, ia);
                K(nf + r, a) = Es_(r, ia);
            }
            rhs[a] = -g[ia];
        }
        rhs.tail(nr) = es_ - Es_ * x_;
        if (nf + nr == 0) {
            dxf.resize(0);
            lambda_.resize(0);
            return true;
        }
        if (!K.allFinite()) return false;
        Eigen::FullPivLU<MatrixXd> lu(K);
        lu.setThreshold(1e-13);
        if (lu.rank() < nf + nr) return false;
        const VectorXd sol = lu.solve(rhs);
        if (!sol.allFinite()) return false;
        dxf = sol.head(nf);
        lambda_ = sol.tail(nr);
        return true;
    }

    // Returns false when no progress was made.
    bool take_step(const VectorXd& dxf) {
        const Index nf = static_cast<Index>(free_.size());
        VectorXd dx = VectorXd::Zero(p_.n);
        for (Index k = 0; k < nf; ++k) dx[free_[static_cast<std::size_t>(k)]] = dxf[k];

        double alpha_max = 1.0;
        Index block_var = -1;
        int block_side = 0;
        Index block_row = -1;
        for (Index i : free_) {
            if (dx[i] < 0.0) {
                const double a = std::max(x_[i] - p_.lb[i], 0.0) / -dx[i];
                if (a < alpha_max) {
                    alpha_max = a;
                    block_var = i;
                    block_side = -1;
                    block_row = -1;
                }
            } else if (dx[i] > 0.0 && std::isfinite(p_.ub[i])) {
                const double a = std::max(p_.ub[i] - x_[i], 0.0) / dx[i];
                if (a < alpha_max) {
                    alpha_max = a;
                    block_var = i;
                    block_side = 1;
                    block_row = -1;
                }
            }
        }
        if (p_.G.rows() > 0) {
            const VectorXd gd = p_.G * dx;
            const VectorXd slack = p_.h - p_.G * x_;
            for (Index j = 0; j < p_.G.rows(); ++j) {
                if (row_active_[static_cast<std::size_t>(j)] || gd[j] <= 1e-14) continue;
                const double a = std::max(slack[j], 0.0) / gd[j];
                if (a < alpha_max) {
                    alpha_max = a;
                    block_row = j;
                    block_var = -1;
                }
            }
        }

        double alpha = alpha_max;
        const bool eq_feasible = Es_.rows() == 0 || (Es_ * x_ - es_).cwiseAbs().maxCoeff() <= 1e-14;
        const double slope = p_.gradient(x_).dot(dx);
        if (eq_feasible && alpha > 0.0 && slope < 0.0) {
            const double f0 = p_.value(x_);
            while (alpha > 1e-12 * alpha_max && p_.value(x_ + alpha * dx) > f0 + 1e-4 * alpha * slope) alpha *= 0.5;
        }
        x_ += alpha * dx;
        const bool blocked = alpha == alpha_max && (block_var >= 0 || block_row >= 0);
        if (blocked) {
            if (block_var >= 0) fix(block_var, block_side);
            if (block_row >= 0) row_active_[static_cast<std::size_t>(block_row)] = true;
            return true;
        }
        return alpha * dxf.lpNorm<Eigen::Infinity>() > kStepTol;
    }

    // Residual of the stationarity condition with multipliers attached to the working set.
    VectorXd reduced_gradient() const { return p_.gradient(x_) + Es_.transpose() * lambda_; }

    bool release_worst() {
        const VectorXd r = reduced_gradient();
        double worst = kSignTol;
        Index var = -1;
        Index row = -1;
        for (Index i = 0; i < p_.n; ++i) {
            const int st = state_[static_cast<std::size_t>(i)];
            const double v = st < 0 ? -r[i] : (st > 0 ? r[i] : 0.0);
            if (v > worst) {
                worst = v;
                var = i;
                row = -1;
            }
        }
        for (Index k = 0; k < Es_.rows(); ++k) {
            if (row_origin_[static_cast<std::size_t>(k)] >= 0 && -lambda_[k] > worst) {
                worst = -lambda_[k];
                row = row_origin_[static_cast<std::size_t>(k)];
                var = -1;
            }
        }
        if (var >= 0) state_[static_cast<std::size_t>(var)] = 0;
        if (row >= 0) row_active_[static_cast<std::size_t>(row)] = false;
        return var >= 0 || row >= 0;
    }

    bool finish(PolishResult& out) {
        const double tol = 1e-12;
        for (Index i = 0; i < p_.n; ++i) {
            if (x_[i] < p_.lb[i] - tol || x_[i] > p_.ub[i] + tol) return false;
            x_[i] = std::clamp(x_[i], p_.lb[i], p_.ub[i]);
        }
        if (p_.G.rows() > 0 && (p_.G * x_ - p_.h).maxCoeff() > tol) return false;
        if (p_.A.rows() > 0 && (p_.A * x_ - p_.b).cwiseAbs().maxCoeff() > tol) return false;

        const VectorXd r = reduced_gradient();
        double resid = 0.0;
        for (Index i = 0; i < p_.n; ++i) {
            const int st = state_[static_cast<std::size_t>(i)];
            resid = std::max(resid, st == 0 ? std::abs(r[i]) : (st < 0 ? -r[i] : r[i]));
        }
        for (Index k = 0; k < Es_.rows(); ++k) {
            if (row_origin_[static_cast<std::size_t>(k)] >= 0) resid = std::max(resid, -lambda_[k]);
        }
        out.x = x_;
        out.kkt_residual = resid;
        out.z = VectorXd::Zero(p_.G.rows());
        out.y = VectorXd::Zero(p_.A.rows());
        for (Index k = 0; k < Es_.rows(); ++k) {
            const Index o = row_origin_[static_cast<std::size_t>(k)];
            if (o >= 0) {
                out.z[o] = lambda_[k];
            } else {
                out.y[-o - 1] = lambda_[k];
            }
        }
        return true;
    }

    const Program& p_;
    VectorXd x_;
    std::vector<int> state_;  // -1 at lb, +1 at ub, 0 free
    std::vector<bool> row_active_;
    std::vector<Index> free_;
    MatrixXd Es_;
    VectorXd es_;
    std::vector<Index> row_origin_;
    VectorXd lambda_;
};

double feasibility_residual(const DispatchSchedule& schedule, const ProblemInstance& inst) {
    const auto violations = validate_feasibility(schedule, inst.battery(), inst.day().grid(), 0.0, inst.day().load(),
                                                 inst.options().grid_limit_mw);
    double worst = 0.0;
    for (const auto& v : violations) {
        if (v.constraint == ConstraintKind::TerminalSoc && inst.options().terminal_soft_weight) continue;
        worst = std::max(worst, v.magnitude);
    }
    return worst;
}

}  // namespace

SolveReport solve(const ProblemInstance& inst, const SolveOptions& opts) {
    if (!(opts.tol_feasibility > 0.0) || !(opts.tol_optimality > 0.0)) throw InputError("solver tolerances must be > 0");
    if (opts.max_iterations < 1) throw InputError("max_iterations must be >= 1");

    SolveReport report;
    const std::size_t T = inst.steps();
    if (auto cert = check_reachability(inst)) {
        report.schedule = DispatchSchedule::idle(T);
        report.termination = Termination::Infeasible;
        report.objective = objective_value(flatten(report.schedule), inst);
        report.feasibility_residual = feasibility_residual(report.schedule, inst);
        report.optimality_residual = kInf;
        report.certificate = std::move(cert);
        return report;
    }

    const Program prog = detail::build_program(inst, opts);
    InteriorPoint ipm(prog);
    const IpmResult res = ipm.run(std::min(opts.max_iterations, 500));
    report.iterations = res.iterations;

    VectorXd x = res.point.x;
    for (Index i = 0; i < prog.n; ++i) x[i] = std::clamp(x[i], prog.lb[i], prog.ub[i]);
    double lower = dual_bound(prog, res.point.z, res.point.y);

    const int polish_budget = std::min(400, opts.max_iterations - report.iterations);
    if (polish_budget > 0) {
        const PolishResult pol = ActiveSet(prog, res.point).run(polish_budget);
        report.iterations += pol.iterations;
        const double f_ipm = prog.value(x);
        if (pol.ok && prog.value(pol.x) <= f_ipm + 1e-13 * (1.0 + std::abs(f_ipm))) {
            x = pol.x;
            lower = std::max(lower, dual_bound(prog, pol.z, pol.y));
            report.polished = true;
        }
    }
    // Scaled objective units; the scaling makes the objective O(1).
    const double opt_resid = std::max(0.0, prog.value(x) - lower);

    std::vector<double> scaled(x.data(), x.data() + 2 * T);
    for (double& v : scaled) v *= prog.pmax;
    report.schedule = unflatten(scaled, T);
    report.objective = objective_value(scaled, inst);
    report.feasibility_residual = feasibility_residual(report.schedule, inst);
    report.optimality_residual = opt_resid;
    report.simultaneity_flags = simultaneity_flags(report.schedule, inst.battery());
    report.termination =
        (report.feasibility_residual <= opts.tol_feasibility && report.optimality_residual <= opts.tol_optimality)
            ? Termination::Converged
            : Termination::MaxIterations;
    return report;
}

}  // namespace fcsd
