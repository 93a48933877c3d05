#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <vector>

#include "gpcc/gp.hpp"
#include "gpcc/grid.hpp"
#include "gpcc/nlp.hpp"
#include "gpcc/outputs.hpp"
#include "gpcc/propagation.hpp"

namespace gpcc {

// Expected generation cost sum_k c2_k (u_k^2 + tr(Sigma_w) alpha_k^2)
// + c1_k u_k + c0_k. Unit-agnostic: u and trace_w must be expressed in the
// units the coefficients expect.
double expected_cost(const Eigen::VectorXd& u, const Eigen::VectorXd& alpha, double trace_w,
                     const Eigen::VectorXd& c2, const Eigen::VectorXd& c1,
                     const Eigen::VectorXd& c0);

struct CcOpfProblem {
    MultiGpModel model;
    Eigen::VectorXd u_min, u_max;  // p.u.
    Eigen::VectorXd c2, c1, c0;    // coefficients on per-unit quantities
    double eps_u = 0.001;
    double eps_y = 0.025;
    Eigen::VectorXd p_load0, p_res0;  // forecast injections, p.u.
    Eigen::VectorXd sigma_w;          // loads then renewables, p.u.
    std::vector<bool> is_res;
    Propagation method = Propagation::Ta1;
    double rho_balance = 1.0;  // loss factor applied in the balance equation
    Eigen::VectorXd y_min, y_max;
    std::vector<std::string> y_names;
    double base_mva = 100.0;

    int n_u() const { return static_cast<int>(u_min.size()); }
    int n_y() const { return static_cast<int>(y_min.size()); }
    double trace_w() const { return sigma_w.array().square().sum(); }
    void check() const;
};

// Assembles the problem from a case, a fitted surrogate, and the output
// layout the surrogate was trained on. Cost coefficients are rescaled so
// that the per-unit objective reproduces the MW-based cost values.
struct CcOpfSettings {
    double eps_u = 0.001;
    double eps_y = 0.025;
    double sigma_mult_load = 0.15;
    double sigma_mult_res = 0.30;
    Propagation method = Propagation::Ta1;
    bool balance_no_losses = false;  // reproduce the lossless balance form
};

CcOpfProblem make_ccopf_problem(const GridCase& grid, const MultiGpModel& model,
                                const OutputLayout& layout, const CcOpfSettings& settings);

struct ConstraintEval {
    double balance_residual = 0.0;
    Eigen::VectorXd mu_y, sigma_y;
    Eigen::VectorXd lambda_y, lambda_u;
    Eigen::VectorXd slack_y_upper, slack_y_lower;  // >= 0 when satisfied
    Eigen::VectorXd slack_u_upper, slack_u_lower;
    bool em_fallback = false;
};

ConstraintEval evaluate_constraints(const CcOpfProblem& problem, const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& alpha);

enum class CcOpfStatus { Converged, MaxIterations, Infeasible };

struct CcOpfSolution {
    Eigen::VectorXd u;      // p.u.
    Eigen::VectorXd alpha;
    Eigen::VectorXd mu_y, sigma_y;
    Eigen::VectorXd lambda_y, lambda_u;
    double cost = 0.0;  // currency units (MW-based coefficients)
    int iterations = 0;
    CcOpfStatus status = CcOpfStatus::MaxIterations;
    double kkt_stationarity = 0.0;
    double max_violation = 0.0;
    std::string diagnostics;  // binding constraints when infeasible
    Propagation method = Propagation::Ta1;
    std::vector<std::array<double, 4>> trace;  // iteration, cost, violation, step
};

struct CcOpfSolveOptions {
    double tolerance = 1e-6;
    int max_iterations = 60;
    Eigen::VectorXd u_init;      // optional
    Eigen::VectorXd alpha_init;  // optional
};

CcOpfSolution solve_ccopf(const CcOpfProblem& problem, const CcOpfSolveOptions& options = {});

std::string serialize_solution(const CcOpfSolution& solution,
                               const std::vector<std::string>& gen_names,
                               const std::vector<std::string>& y_names, double base_mva);

}  // namespace gpcc
