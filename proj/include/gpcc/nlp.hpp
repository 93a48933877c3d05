#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <string>
#include <vector>

namespace gpcc {

// Dense nonlinear program
//     min f(x)  s.t.  c_eq(x) = 0,  c_ineq(x) >= 0
// solved with a Powell-Hestenes-Rockafellar augmented Lagrangian. Inner
// minimizations use L-BFGS; multiplier/penalty updates are accepted under a
// filter on constraint violation. Problem sizes here are small (tens of
// variables), so everything is dense.
struct NlpProblem {
    int n = 0;

    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)> objective;

    // Constraint values; empty vectors mean "no constraints of this kind".
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eq;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> ineq;

    // Jacobians (rows = constraints). Required when the corresponding
    // constraint function is set.
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> eq_jacobian;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> ineq_jacobian;
};

enum class NlpStatus { Converged, MaxIterations, Infeasible, LineSearchFailure };

std::string to_string(NlpStatus status);

struct NlpOptions {
    double tolerance = 1e-8;            // stationarity of the Lagrangian
    double feasibility_tolerance = 1e-8;
    int max_outer_iterations = 60;
    int max_inner_iterations = 300;
    double initial_penalty = 10.0;
    double penalty_growth = 10.0;
    double max_penalty = 1e12;
};

struct NlpResult {
    Eigen::VectorXd x;
    double objective = 0.0;
    Eigen::VectorXd eq_multipliers;
    Eigen::VectorXd ineq_multipliers;
    int iterations = 0;            // outer (major) iterations
    int inner_iterations = 0;      // accumulated L-BFGS iterations
    double max_violation = 0.0;
    double stationarity = 0.0;     // max-norm of the Lagrangian gradient
    NlpStatus status = NlpStatus::MaxIterations;
    // One row per major iteration: iteration, objective, max violation,
    // step norm. Backing data for the solver iteration log.
    std::vector<std::array<double, 4>> trace;
};

NlpResult nlp_solve(const NlpProblem& problem, const Eigen::VectorXd& x0,
                    const NlpOptions& options = {});

// Central finite-difference Jacobian of a vector-valued function.
Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step = 1e-6);

}  // namespace gpcc
