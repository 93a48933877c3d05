#pragma once

#include <Eigen/Core>
#include <functional>

namespace gpcc {

struct LbfgsOptions {
    int max_iterations = 200;
    double grad_tolerance = 1e-8;   // on max-norm of the gradient
    double step_tolerance = 1e-14;  // on |f_new - f| / max(1, |f|)
    int history = 10;
    int max_line_search = 40;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double f = 0.0;
    Eigen::VectorXd grad;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

// Objective: f(x) with gradient written into grad. Must be finite on the
// iterates; line search backtracks away from non-finite regions.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

LbfgsResult lbfgs_minimize(const Objective& objective, const Eigen::VectorXd& x0,
                           const LbfgsOptions& options = {});

// Central finite-difference gradient of a scalar function; used by tests
// and by solvers that lack analytic derivatives.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step = 1e-6);

}  // namespace gpcc
