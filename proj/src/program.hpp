#pragma once

// Internal dense form of a ProblemInstance shared by the interior-point
// solver and the enumeration oracle. Schedule variables are scaled by P_max
// so every bound is [0, 1]; the objective is divided by `fscale`.

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "fcsd/model.hpp"
#include "fcsd/solver.hpp"

namespace fcsd::detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct PenaltyTerm {
    Eigen::Index charge;
    Eigen::Index discharge;
    double charge_coeff;     // SoC per unit of scaled charge variable
    double discharge_coeff;  // SoC per unit of scaled discharge variable
};

struct Program {
    Eigen::Index n = 0;
    Eigen::Index schedule_vars = 0;  // 2T; trailing variables are soft-terminal slacks
    Eigen::VectorXd linear;          // scaled linear cost, tie-break included
    double weight = 0.0;             // scaled penalty weight
    double k_p = 1.0;
    double eps = 0.0;
    double c_life = 1.0;
    std::vector<PenaltyTerm> terms;
    Eigen::VectorXd lb, ub;
    Eigen::MatrixXd G;  // G x <= h
    Eigen::VectorXd h;
    Eigen::MatrixXd A;  // A x == b
    Eigen::VectorXd b;
    double fscale = 1.0;
    double pmax = 1.0;

    double value(const Eigen::VectorXd& x) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;
};

/// DKK per unit SoC of throughput used for tie-breaking.
double tie_break_weight(const ProblemInstance& inst, const SolveOptions& opts);

Program build_program(const ProblemInstance& inst, const SolveOptions& opts);

}  // namespace fcsd::detail
