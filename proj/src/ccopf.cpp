#include "gpcc/ccopf.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gpcc/errors.hpp"
#include "gpcc/io.hpp"
#include "gpcc/quantile.hpp"

namespace gpcc {

double expected_cost(const Eigen::VectorXd& u, const Eigen::VectorXd& alpha, double trace_w,
                     const Eigen::VectorXd& c2, const Eigen::VectorXd& c1,
                     const Eigen::VectorXd& c0) {
    if (u.size() != alpha.size() || u.size() != c2.size() || u.size() != c1.size() ||
        u.size() != c0.size()) {
        throw ValidationError("expected_cost: dimension mismatch");
    }
    double cost = 0.0;
    for (Eigen::Index k = 0; k < u.size(); ++k) {
        cost += c2[k] * (u[k] * u[k] + trace_w * alpha[k] * alpha[k]) + c1[k] * u[k] + c0[k];
    }
    return cost;
}

void CcOpfProblem::check() const {
    if (!(eps_u > 0.0 && eps_u < 0.5) || !(eps_y > 0.0 && eps_y < 0.5)) {
        throw ValidationError("cc-opf: violation probabilities must lie in (0, 0.5)");
    }
    if (u_min.size() != u_max.size() || u_min.size() != c2.size()) {
        throw ValidationError("cc-opf: generator vectors disagree");
    }
    if (sigma_w.size() != p_load0.size() + p_res0.size()) {
        throw ValidationError("cc-opf: sigma_w must cover loads and renewables");
    }
    if (model.n_inputs() != n_u() + static_cast<int>(sigma_w.size())) {
        throw ValidationError("cc-opf: surrogate input dimension disagrees with the problem");
    }
    if (model.n_outputs() != n_y()) {
        throw ValidationError("cc-opf: surrogate output dimension disagrees with the limits");
    }
}

CcOpfProblem make_ccopf_problem(const GridCase& grid, const MultiGpModel& model,
                                const OutputLayout& layout, const CcOpfSettings& settings) {
    CcOpfProblem problem;
    problem.model = model;
    const int n_u = static_cast<int>(grid.generators.size());
    problem.u_min.resize(n_u);
    problem.u_max.resize(n_u);
    problem.c2.resize(n_u);
    problem.c1.resize(n_u);
    problem.c0.resize(n_u);
    for (int k = 0; k < n_u; ++k) {
        const auto& gen = grid.generators[static_cast<size_t>(k)];
        problem.u_min[k] = gen.p_min;
        problem.u_max[k] = gen.p_max;
        // Coefficients act on MW in the case data; fold the base conversion
        // in so the per-unit objective returns the same currency value.
        problem.c2[k] = gen.c2 * grid.base_mva * grid.base_mva;
        problem.c1[k] = gen.c1 * grid.base_mva;
        problem.c0[k] = gen.c0;
    }
    problem.eps_u = settings.eps_u;
    problem.eps_y = settings.eps_y;
    const int n_l = static_cast<int>(grid.loads.size());
    const int n_r = static_cast<int>(grid.renewables.size());
    problem.p_load0.resize(n_l);
    problem.p_res0.resize(n_r);
    problem.sigma_w.resize(n_l + n_r);
    problem.is_res.assign(static_cast<size_t>(n_l + n_r), false);
    for (int i = 0; i < n_l; ++i) {
        problem.p_load0[i] = grid.loads[static_cast<size_t>(i)].p_ref;
        problem.sigma_w[i] = settings.sigma_mult_load * std::abs(problem.p_load0[i]);
    }
    for (int j = 0; j < n_r; ++j) {
        problem.p_res0[j] = grid.renewables[static_cast<size_t>(j)].p_ref;
        problem.sigma_w[n_l + j] = settings.sigma_mult_res * std::abs(problem.p_res0[j]);
        problem.is_res[static_cast<size_t>(n_l + j)] = true;
    }
    problem.method = settings.method;
    problem.rho_balance = settings.balance_no_losses ? 1.0 : grid.loss_factor;
    problem.y_min.resize(layout.size());
    problem.y_max.resize(layout.size());
    for (int i = 0; i < layout.size(); ++i) {
        problem.y_min[i] = layout.entries[static_cast<size_t>(i)].lower;
        problem.y_max[i] = layout.entries[static_cast<size_t>(i)].upper;
        problem.y_names.push_back(layout.entries[static_cast<size_t>(i)].label);
    }
    problem.base_mva = grid.base_mva;
    problem.check();
    return problem;
}

namespace {

struct PropagationJacobian {
    Eigen::VectorXd mu, sigma;
    Eigen::MatrixXd dmu;     // n_y x 2 n_u (w.r.t. [u; alpha])
    Eigen::MatrixXd dsigma;  // n_y x 2 n_u
    bool em_fallback = false;
};

Eigen::VectorXd stack_input(const CcOpfProblem& problem, const Eigen::VectorXd& u) {
    Eigen::VectorXd x(problem.model.n_inputs());
    x.head(u.size()) = u;
    x.segment(u.size(), problem.p_load0.size()) = problem.p_load0;
    x.tail(problem.p_res0.size()) = problem.p_res0;
    return x;
}

InputDistribution input_distribution(const CcOpfProblem& problem, const Eigen::VectorXd& u,
                                     const Eigen::VectorXd& alpha) {
    InputDistribution dist;
    dist.mean = stack_input(problem, u);
    dist.covariance = assemble_input_cov(alpha, problem.sigma_w, problem.is_res);
    return dist;
}

// Moments and their Jacobian w.r.t. z = [u; alpha]. Analytic for TA1;
// central finite differences otherwise (the Hessian-of-Hessian terms of
// TA2/EM are not worth deriving at these problem sizes).
PropagationJacobian propagation_jacobian(const CcOpfProblem& problem, const Eigen::VectorXd& u,
                                         const Eigen::VectorXd& alpha, bool with_jacobian) {
    const int n_u = problem.n_u();
    const int n_y = problem.n_y();
    const int n_z = 2 * n_u;
    PropagationJacobian out;

    if (problem.method == Propagation::Ta1) {
        const Eigen::VectorXd x = stack_input(problem, u);
        const Eigen::MatrixXd cov = assemble_input_cov(alpha, problem.sigma_w, problem.is_res);
        const double trace_w = problem.trace_w();
        const Eigen::VectorXd var_w = problem.sigma_w.array().square();
        Eigen::VectorXd sign(problem.sigma_w.size());
        for (Eigen::Index j = 0; j < sign.size(); ++j) {
            sign[j] = problem.is_res[static_cast<size_t>(j)] ? -1.0 : 1.0;
        }

        out.mu.resize(n_y);
        out.sigma.resize(n_y);
        if (with_jacobian) {
            out.dmu = Eigen::MatrixXd::Zero(n_y, n_z);
            out.dsigma = Eigen::MatrixXd::Zero(n_y, n_z);
        }
        for (int a = 0; a < n_y; ++a) {
            const GpModel& gp = problem.model.outputs[static_cast<size_t>(a)];
            double mu_det, var_det;
            gp.predict(x, mu_det, var_det);
            const Eigen::VectorXd g = gp.mean_gradient(x);
            const double var = std::max(1e-16, var_det + g.dot(cov * g));
            const double sigma = std::sqrt(var);
            out.mu[a] = mu_det;
            out.sigma[a] = sigma;
            if (!with_jacobian) continue;

            const Eigen::VectorXd g_u = g.head(n_u);
            const Eigen::VectorXd g_d = g.tail(problem.sigma_w.size());
            const Eigen::VectorXd dvar_det = gp.variance_gradient(x);
            const Eigen::MatrixXd mean_hess = gp.mean_hessian(x);
            const Eigen::VectorXd cov_g = cov * g;
            for (int i = 0; i < n_u; ++i) {
                out.dmu(a, i) = g[i];
                // d/du_i of [var_det + g^T cov g]; only the first n_u rows of
                // the full-input Hessian move with u.
                const double dvar =
                    dvar_det[i] + 2.0 * cov_g.dot(mean_hess.col(i));
                out.dsigma(a, i) = dvar / (2.0 * sigma);
            }
            const double alpha_gu = alpha.dot(g_u);
            const double sv_gd = (sign.cwiseProduct(var_w)).dot(g_d);
            for (int k = 0; k < n_u; ++k) {
                // g^T dSigma/dalpha_k g
                const double dvar =
                    2.0 * trace_w * g_u[k] * alpha_gu + 2.0 * g_u[k] * sv_gd;
                out.dsigma(a, n_u + k) = dvar / (2.0 * sigma);
            }
        }
        return out;
    }

    const auto eval = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        const InputDistribution dist =
            input_distribution(problem, z.head(n_u), z.tail(n_u));
        const PropagatedOutput prop = propagate(problem.model, dist, problem.method);
        Eigen::VectorXd stacked(2 * n_y);
        stacked.head(n_y) = prop.mean;
        stacked.tail(n_y) = prop.variance.cwiseMax(1e-16).cwiseSqrt();
        return stacked;
    };
    Eigen::VectorXd z(n_z);
    z.head(n_u) = u;
    z.tail(n_u) = alpha;
    const InputDistribution dist = input_distribution(problem, u, alpha);
    const PropagatedOutput prop = propagate(problem.model, dist, problem.method);
    out.mu = prop.mean;
    out.sigma = prop.variance.cwiseMax(1e-16).cwiseSqrt();
    out.em_fallback = prop.em_fallback;
    if (with_jacobian) {
        const Eigen::MatrixXd J = fd_jacobian(eval, z, 1e-6);
        out.dmu = J.topRows(n_y);
        out.dsigma = J.bottomRows(n_y);
    }
    return out;
}

}  // namespace

ConstraintEval evaluate_constraints(const CcOpfProblem& problem, const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& alpha) {
    problem.check();
    const PropagationJacobian prop = propagation_jacobian(problem, u, alpha, false);
    ConstraintEval eval;
    eval.mu_y = prop.mu;
    eval.sigma_y = prop.sigma;
    eval.em_fallback = prop.em_fallback;

    const double r_y = normal_quantile(1.0 - problem.eps_y);
    const double r_u = normal_quantile(1.0 - problem.eps_u);
    const double omega_std = std::sqrt(problem.trace_w());

    eval.lambda_y = r_y * eval.sigma_y;
    eval.lambda_u = r_u * omega_std * alpha;
    eval.slack_y_upper = problem.y_max - eval.lambda_y - eval.mu_y;
    eval.slack_y_lower = eval.mu_y - eval.lambda_y - problem.y_min;
    eval.slack_u_upper = problem.u_max - eval.lambda_u - u;
    eval.slack_u_lower = u - eval.lambda_u - problem.u_min;
    eval.balance_residual =
        u.sum() - (problem.rho_balance * problem.p_load0.sum() - problem.p_res0.sum());
    return eval;
}

CcOpfSolution solve_ccopf(const CcOpfProblem& problem, const CcOpfSolveOptions& options) {
    problem.check();
    const int n_u = problem.n_u();
    const int n_y = problem.n_y();
    const int n_z = 2 * n_u;
    const double r_y = normal_quantile(1.0 - problem.eps_y);
    const double r_u = normal_quantile(1.0 - problem.eps_u);
    const double trace_w = problem.trace_w();
    const double omega_std = std::sqrt(trace_w);
    const double balance_target =
        problem.rho_balance * problem.p_load0.sum() - problem.p_res0.sum();

    NlpProblem nlp;
    nlp.n = n_z;
    nlp.objective = [&](const Eigen::VectorXd& z, Eigen::VectorXd& grad) -> double {
        const Eigen::VectorXd u = z.head(n_u);
        const Eigen::VectorXd alpha = z.tail(n_u);
        grad.resize(n_z);
        for (int k = 0; k < n_u; ++k) {
            grad[k] = 2.0 * problem.c2[k] * u[k] + problem.c1[k];
            grad[n_u + k] = 2.0 * problem.c2[k] * trace_w * alpha[k];
        }
        return expected_cost(u, alpha, trace_w, problem.c2, problem.c1, problem.c0);
    };
    nlp.eq = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        Eigen::VectorXd c(2);
        c[0] = z.tail(n_u).sum() - 1.0;
        c[1] = z.head(n_u).sum() - balance_target;
        return c;
    };
    Eigen::MatrixXd eq_jac = Eigen::MatrixXd::Zero(2, n_z);
    eq_jac.row(0).tail(n_u).setOnes();
    eq_jac.row(1).head(n_u).setOnes();
    nlp.eq_jacobian = [eq_jac](const Eigen::VectorXd&) { return eq_jac; };

    // Inequalities, all as c(z) >= 0:
    //   [alpha; u - u_min - lambda_u; u_max - u - lambda_u;
    //    mu - y_min - lambda_y; y_max - mu - lambda_y]
    const int m_ineq = n_u + 2 * n_u + 2 * n_y;
    nlp.ineq = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        const Eigen::VectorXd u = z.head(n_u);
        const Eigen::VectorXd alpha = z.tail(n_u);
        const PropagationJacobian prop = propagation_jacobian(problem, u, alpha, false);
        const Eigen::VectorXd lambda_y = r_y * prop.sigma;
        const Eigen::VectorXd lambda_u = r_u * omega_std * alpha;
        Eigen::VectorXd c(m_ineq);
        c.head(n_u) = alpha;
        c.segment(n_u, n_u) = u - problem.u_min - lambda_u;
        c.segment(2 * n_u, n_u) = problem.u_max - u - lambda_u;
        c.segment(3 * n_u, n_y) = prop.mu - problem.y_min - lambda_y;
        c.tail(n_y) = problem.y_max - prop.mu - lambda_y;
        return c;
    };
    nlp.ineq_jacobian = [&](const Eigen::VectorXd& z) -> Eigen::MatrixXd {
        const Eigen::VectorXd u = z.head(n_u);
        const Eigen::VectorXd alpha = z.tail(n_u);
        const PropagationJacobian prop = propagation_jacobian(problem, u, alpha, true);
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m_ineq, n_z);
        for (int k = 0; k < n_u; ++k) {
            J(k, n_u + k) = 1.0;                      // alpha_k
            J(n_u + k, k) = 1.0;                      // lower margin
            J(n_u + k, n_u + k) = -r_u * omega_std;
            J(2 * n_u + k, k) = -1.0;                 // upper margin
            J(2 * n_u + k, n_u + k) = -r_u * omega_std;
        }
        J.block(3 * n_u, 0, n_y, n_z) = prop.dmu - r_y * prop.dsigma;
        J.block(3 * n_u + n_y, 0, n_y, n_z) = -prop.dmu - r_y * prop.dsigma;
        return J;
    };

    // Initial point: reference-proportional dispatch scaled onto the
    // balance, uniform participation.
    Eigen::VectorXd z0(n_z);
    if (options.u_init.size() == n_u) {
        z0.head(n_u) = options.u_init;
    } else {
        Eigen::VectorXd u0 = 0.5 * (problem.u_min + problem.u_max);
        const double s = u0.sum();
        if (std::abs(s) > 1e-12) u0 *= balance_target / s;
        z0.head(n_u) = u0;
    }
    if (options.alpha_init.size() == n_u) {
        z0.tail(n_u) = options.alpha_init;
    } else {
        z0.tail(n_u).setConstant(1.0 / n_u);
    }

    NlpOptions nlp_options;
    nlp_options.tolerance = options.tolerance;
    nlp_options.feasibility_tolerance = std::min(1e-8, options.tolerance);
    nlp_options.max_outer_iterations = options.max_iterations;
    const NlpResult res = nlp_solve(nlp, z0, nlp_options);

    CcOpfSolution sol;
    sol.u = res.x.head(n_u);
    sol.alpha = res.x.tail(n_u);
    const ConstraintEval eval = evaluate_constraints(problem, sol.u, sol.alpha);
    sol.mu_y = eval.mu_y;
    sol.sigma_y = eval.sigma_y;
    sol.lambda_y = eval.lambda_y;
    sol.lambda_u = eval.lambda_u;
    sol.cost = expected_cost(sol.u, sol.alpha, trace_w, problem.c2, problem.c1, problem.c0);
    sol.iterations = res.iterations;
    sol.kkt_stationarity = res.stationarity;
    sol.max_violation = res.max_violation;
    sol.method = problem.method;
    sol.trace = res.trace;
    switch (res.status) {
        case NlpStatus::Converged: sol.status = CcOpfStatus::Converged; break;
        case NlpStatus::Infeasible: sol.status = CcOpfStatus::Infeasible; break;
        default: sol.status = CcOpfStatus::MaxIterations; break;
    }
    if (sol.status == CcOpfStatus::Infeasible) {
        std::ostringstream diag;
        diag << "binding constraints:";
        for (int i = 0; i < n_y; ++i) {
            if (eval.slack_y_upper[i] < 0.0) diag << ' ' << problem.y_names[static_cast<size_t>(i)] << "<=max";
            if (eval.slack_y_lower[i] < 0.0) diag << ' ' << problem.y_names[static_cast<size_t>(i)] << ">=min";
        }
        for (int k = 0; k < n_u; ++k) {
            if (eval.slack_u_upper[k] < 0.0) diag << " u" << (k + 1) << "<=max";
            if (eval.slack_u_lower[k] < 0.0) diag << " u" << (k + 1) << ">=min";
        }
        sol.diagnostics = diag.str();
    }
    return sol;
}

std::string serialize_solution(const CcOpfSolution& solution,
                               const std::vector<std::string>& gen_names,
                               const std::vector<std::string>& y_names, double base_mva) {
    nlohmann::ordered_json doc;
    doc["status"] = solution.status == CcOpfStatus::Converged
                        ? "converged"
                        : (solution.status == CcOpfStatus::Infeasible ? "infeasible"
                                                                      : "max_iterations");
    doc["method"] = to_string(solution.method);
    doc["cost"] = solution.cost;
    doc["iterations"] = solution.iterations;
    doc["kkt_stationarity"] = solution.kkt_stationarity;
    doc["max_violation"] = solution.max_violation;
    nlohmann::ordered_json gens = nlohmann::ordered_json::array();
    for (Eigen::Index k = 0; k < solution.u.size(); ++k) {
        nlohmann::ordered_json g;
        g["name"] = k < static_cast<Eigen::Index>(gen_names.size())
                        ? gen_names[static_cast<size_t>(k)]
                        : ("gen" + std::to_string(k + 1));
        g["u_pu"] = solution.u[k];
        g["u_mw"] = solution.u[k] * base_mva;
        g["alpha"] = solution.alpha[k];
        g["lambda_u_pu"] = solution.lambda_u[k];
        gens.push_back(g);
    }
    doc["generators"] = gens;
    nlohmann::ordered_json outputs = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < solution.mu_y.size(); ++i) {
        nlohmann::ordered_json o;
        o["name"] = i < static_cast<Eigen::Index>(y_names.size())
                        ? y_names[static_cast<size_t>(i)]
                        : ("y" + std::to_string(i + 1));
        o["mu"] = solution.mu_y[i];
        o["sigma"] = solution.sigma_y[i];
        o["lambda"] = solution.lambda_y[i];
        outputs.push_back(o);
    }
    doc["outputs"] = outputs;
    if (!solution.diagnostics.empty()) doc["diagnostics"] = solution.diagnostics;
    return doc.dump(2) + "\n";
}

}  // namespace gpcc
