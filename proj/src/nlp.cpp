#include "gpcc/nlp.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "gpcc/lbfgs.hpp"

namespace gpcc {

std::string to_string(NlpStatus status) {
    switch (status) {
        case NlpStatus::Converged: return "converged";
        case NlpStatus::MaxIterations: return "max_iterations";
        case NlpStatus::Infeasible: return "infeasible";
        case NlpStatus::LineSearchFailure: return "line_search_failure";
    }
    return "unknown";
}

namespace {

double max_violation_of(const Eigen::VectorXd& ceq, const Eigen::VectorXd& cineq) {
    double v = 0.0;
    if (ceq.size() > 0) v = std::max(v, ceq.cwiseAbs().maxCoeff());
    if (cineq.size() > 0) v = std::max(v, std::max(0.0, (-cineq).maxCoeff()));
    return v;
}

}  // namespace

NlpResult nlp_solve(const NlpProblem& problem, const Eigen::VectorXd& x0,
                    const NlpOptions& options) {
    NlpResult result;
    result.x = x0;

    const bool has_eq = static_cast<bool>(problem.eq);
    const bool has_ineq = static_cast<bool>(problem.ineq);

    Eigen::VectorXd ceq = has_eq ? problem.eq(result.x) : Eigen::VectorXd();
    Eigen::VectorXd cineq = has_ineq ? problem.ineq(result.x) : Eigen::VectorXd();

    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(ceq.size());   // equality multipliers
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(cineq.size());     // >= 0

    double rho = options.initial_penalty;
    double previous_violation = max_violation_of(ceq, cineq);

    // Augmented Lagrangian value and gradient at x for the current
    // (lambda, mu, rho).
    auto augmented = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) -> double {
        Eigen::VectorXd gf(x.size());
        double value = problem.objective(x, gf);
        grad = gf;
        if (has_eq) {
            const Eigen::VectorXd c = problem.eq(x);
            const Eigen::MatrixXd J = problem.eq_jacobian(x);
            value += (-lambda.dot(c)) + 0.5 * rho * c.squaredNorm();
            grad += J.transpose() * (rho * c - lambda);
        }
        if (has_ineq) {
            const Eigen::VectorXd c = problem.ineq(x);
            const Eigen::MatrixXd J = problem.ineq_jacobian(x);
            // PHR term: 1/(2 rho) * (max(0, mu - rho c)^2 - mu^2)
            Eigen::VectorXd t = (mu - rho * c).cwiseMax(0.0);
            value += (t.squaredNorm() - mu.squaredNorm()) / (2.0 * rho);
            grad += J.transpose() * (-t);
        }
        return value;
    };

    Eigen::VectorXd x_prev = result.x;
    for (int outer = 0; outer < options.max_outer_iterations; ++outer) {
        result.iterations = outer + 1;

        LbfgsOptions inner_options;
        inner_options.max_iterations = options.max_inner_iterations;
        // Solve the subproblem a bit beyond the outer tolerance.
        inner_options.grad_tolerance = std::max(0.1 * options.tolerance, 1e-12);
        inner_options.step_tolerance = 1e-16;
        const LbfgsResult inner = lbfgs_minimize(augmented, result.x, inner_options);
        result.inner_iterations += inner.iterations;
        result.x = inner.x;

        ceq = has_eq ? problem.eq(result.x) : Eigen::VectorXd();
        cineq = has_ineq ? problem.ineq(result.x) : Eigen::VectorXd();
        const double violation = max_violation_of(ceq, cineq);

        // First-order multiplier updates.
        if (has_eq) lambda -= rho * ceq;
        if (has_ineq) mu = (mu - rho * cineq).cwiseMax(0.0);

        // Stationarity of the ordinary Lagrangian at the new multipliers.
        Eigen::VectorXd gl(result.x.size());
        problem.objective(result.x, gl);
        if (has_eq) gl -= problem.eq_jacobian(result.x).transpose() * lambda;
        if (has_ineq) gl -= problem.ineq_jacobian(result.x).transpose() * mu;
        result.stationarity = gl.cwiseAbs().maxCoeff();
        result.max_violation = violation;
        result.trace.push_back({static_cast<double>(outer + 1), inner.f, violation,
                                (result.x - x_prev).norm()});
        x_prev = result.x;

        if (violation <= options.feasibility_tolerance &&
            result.stationarity <= options.tolerance) {
            result.status = NlpStatus::Converged;
            break;
        }

        // Filter-style acceptance of the penalty level: grow rho only when
        // the violation failed to contract.
        if (violation > 0.25 * previous_violation && violation > options.feasibility_tolerance) {
            rho = std::min(rho * options.penalty_growth, options.max_penalty);
        }
        previous_violation = std::max(violation, 1e-300);

        if (rho >= options.max_penalty && violation > 1e3 * options.feasibility_tolerance) {
            result.status = NlpStatus::Infeasible;
            break;
        }
    }

    Eigen::VectorXd gf(result.x.size());
    result.objective = problem.objective(result.x, gf);
    result.eq_multipliers = lambda;
    result.ineq_multipliers = mu;
    return result;
}

Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step) {
    Eigen::VectorXd xp = x;
    Eigen::MatrixXd J;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = step * std::max(1.0, std::abs(x[j]));
        xp[j] = x[j] + h;
        const Eigen::VectorXd fp = f(xp);
        xp[j] = x[j] - h;
        const Eigen::VectorXd fm = f(xp);
        xp[j] = x[j];
        if (J.size() == 0) J.resize(fp.size(), x.size());
        J.col(j) = (fp - fm) / (2.0 * h);
    }
    if (J.size() == 0) J.resize(0, x.size());
    return J;
}

}  // namespace gpcc
