#include "gpcc/pf.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "gpcc/errors.hpp"

namespace gpcc {

Eigen::MatrixXcd build_ybus(const GridCase& grid) {
    const int n = static_cast<int>(grid.buses.size());
    Eigen::MatrixXcd ybus = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        ybus(i, i) += std::complex<double>(grid.buses[i].g_shunt, grid.buses[i].b_shunt);
    }
    for (const auto& line : grid.lines) {
        const int f = grid.bus_index(line.from_bus);
        const int t = grid.bus_index(line.to_bus);
        const std::complex<double> y(line.g, line.b);
        ybus(f, f) += y;
        ybus(t, t) += y;
        ybus(f, t) -= y;
        ybus(t, f) -= y;
    }
    return ybus;
}

Injections reference_injections(const GridCase& grid) {
    const int n = static_cast<int>(grid.buses.size());
    Injections inj;
    inj.p = Eigen::VectorXd::Zero(n);
    inj.q = Eigen::VectorXd::Zero(n);
    for (const auto& gen : grid.generators) {
        inj.p[grid.bus_index(gen.bus)] += gen.p_ref;
    }
    for (const auto& load : grid.loads) {
        const int i = grid.bus_index(load.bus);
        inj.p[i] -= load.p_ref;
        inj.q[i] -= load.q_ref;
    }
    for (const auto& res : grid.renewables) {
        const int i = grid.bus_index(res.bus);
        inj.p[i] += res.p_ref;
        inj.q[i] += res.q_ref;
    }
    return inj;
}

std::vector<LineFlow> line_flows(const GridCase& grid, const Eigen::VectorXd& v,
                                 const Eigen::VectorXd& theta) {
    std::vector<LineFlow> flows;
    flows.reserve(grid.lines.size());
    for (const auto& line : grid.lines) {
        const int f = grid.bus_index(line.from_bus);
        const int t = grid.bus_index(line.to_bus);
        const double vf = v[f], vt = v[t];
        const double d = theta[f] - theta[t];
        const double cd = std::cos(d), sd = std::sin(d);
        LineFlow flow;
        flow.p_from = vf * vf * line.g - vf * vt * (line.g * cd + line.b * sd);
        flow.q_from = -vf * vf * line.b - vf * vt * (line.g * sd - line.b * cd);
        flow.p_to = vt * vt * line.g - vt * vf * (line.g * cd - line.b * sd);
        flow.q_to = -vt * vt * line.b - vt * vf * (-line.g * sd - line.b * cd);
        const double sf = std::hypot(flow.p_from, flow.q_from);
        const double st = std::hypot(flow.p_to, flow.q_to);
        flow.s = std::max(sf, st);
        flows.push_back(flow);
    }
    return flows;
}

double total_losses(const std::vector<LineFlow>& flows) {
    double loss = 0.0;
    for (const auto& f : flows) loss += f.p_from + f.p_to;
    return loss;
}

PfSolution solve_ac_pf(const GridCase& grid, const Injections& injections,
                       const PfOptions& options) {
    const int n = static_cast<int>(grid.buses.size());
    if (injections.p.size() != n || injections.q.size() != n) {
        throw ValidationError("solve_ac_pf: injection vectors must match bus count");
    }
    const Eigen::MatrixXcd ybus = build_ybus(grid);
    const Eigen::MatrixXd G = ybus.real();
    const Eigen::MatrixXd B = ybus.imag();

    const int slack = grid.slack_index();
    std::vector<int> pq;        // unknown v and theta
    std::vector<int> non_slack; // unknown theta
    for (int i = 0; i < n; ++i) {
        if (i == slack) continue;
        non_slack.push_back(i);
        if (grid.buses[i].kind == BusKind::Pq) pq.push_back(i);
    }
    const int n_theta = static_cast<int>(non_slack.size());
    const int n_v = static_cast<int>(pq.size());

    PfSolution sol;
    sol.v.resize(n);
    sol.theta.resize(n);
    if (options.v0.size() == n && options.theta0.size() == n) {
        sol.v = options.v0;
        sol.theta = options.theta0;
    } else {
        for (int i = 0; i < n; ++i) {
            sol.v[i] = grid.buses[i].v_set.value_or(1.0);
            sol.theta[i] = 0.0;
        }
    }
    // PV and slack magnitudes stay pinned at v_set.
    for (int i = 0; i < n; ++i) {
        if (grid.buses[i].kind != BusKind::Pq) sol.v[i] = *grid.buses[i].v_set;
    }
    sol.theta[slack] = 0.0;

    Eigen::VectorXd p_calc(n), q_calc(n);
    auto compute_injections = [&]() {
        for (int i = 0; i < n; ++i) {
            double pi = 0.0, qi = 0.0;
            for (int k = 0; k < n; ++k) {
                const double d = sol.theta[i] - sol.theta[k];
                const double cd = std::cos(d), sd = std::sin(d);
                pi += sol.v[k] * (G(i, k) * cd + B(i, k) * sd);
                qi += sol.v[k] * (G(i, k) * sd - B(i, k) * cd);
            }
            p_calc[i] = sol.v[i] * pi;
            q_calc[i] = sol.v[i] * qi;
        }
    };

    const int m = n_theta + n_v;
    Eigen::VectorXd mismatch(m);
    Eigen::MatrixXd jac(m, m);

    auto fill_mismatch = [&]() {
        for (int a = 0; a < n_theta; ++a) {
            mismatch[a] = injections.p[non_slack[static_cast<size_t>(a)]] -
                          p_calc[non_slack[static_cast<size_t>(a)]];
        }
        for (int a = 0; a < n_v; ++a) {
            mismatch[n_theta + a] =
                injections.q[pq[static_cast<size_t>(a)]] - q_calc[pq[static_cast<size_t>(a)]];
        }
    };

    compute_injections();
    fill_mismatch();
    sol.max_residual = mismatch.size() ? mismatch.cwiseAbs().maxCoeff() : 0.0;

    for (int iter = 0; iter < options.max_iterations && sol.max_residual > options.tolerance;
         ++iter) {
        // Standard polar Jacobian.
        for (int a = 0; a < n_theta; ++a) {
            const int i = non_slack[static_cast<size_t>(a)];
            for (int b = 0; b < n_theta; ++b) {
                const int k = non_slack[static_cast<size_t>(b)];
                if (i == k) {
                    jac(a, b) = -q_calc[i] - B(i, i) * sol.v[i] * sol.v[i];
                } else {
                    const double d = sol.theta[i] - sol.theta[k];
                    jac(a, b) = sol.v[i] * sol.v[k] *
                                (G(i, k) * std::sin(d) - B(i, k) * std::cos(d));
                }
            }
            for (int b = 0; b < n_v; ++b) {
                const int k = pq[static_cast<size_t>(b)];
                if (i == k) {
                    jac(a, n_theta + b) = p_calc[i] / sol.v[i] + G(i, i) * sol.v[i];
                } else {
                    const double d = sol.theta[i] - sol.theta[k];
                    jac(a, n_theta + b) =
                        sol.v[i] * (G(i, k) * std::cos(d) + B(i, k) * std::sin(d));
                }
            }
        }
        for (int a = 0; a < n_v; ++a) {
            const int i = pq[static_cast<size_t>(a)];
            for (int b = 0; b < n_theta; ++b) {
                const int k = non_slack[static_cast<size_t>(b)];
                if (i == k) {
                    jac(n_theta + a, b) = p_calc[i] - G(i, i) * sol.v[i] * sol.v[i];
                } else {
                    const double d = sol.theta[i] - sol.theta[k];
                    jac(n_theta + a, b) = -sol.v[i] * sol.v[k] *
                                          (G(i, k) * std::cos(d) + B(i, k) * std::sin(d));
                }
            }
            for (int b = 0; b < n_v; ++b) {
                const int k = pq[static_cast<size_t>(b)];
                if (i == k) {
                    jac(n_theta + a, n_theta + b) = q_calc[i] / sol.v[i] - B(i, i) * sol.v[i];
                } else {
                    const double d = sol.theta[i] - sol.theta[k];
                    jac(n_theta + a, n_theta + b) =
                        sol.v[i] * (G(i, k) * std::sin(d) - B(i, k) * std::cos(d));
                }
            }
        }

        Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
        const Eigen::VectorXd dx = lu.solve(mismatch);
        if (!dx.allFinite()) {
            throw SingularJacobian("solve_ac_pf: singular Jacobian at iteration " +
                                   std::to_string(iter));
        }

        for (int a = 0; a < n_theta; ++a) sol.theta[non_slack[static_cast<size_t>(a)]] += dx[a];
        for (int a = 0; a < n_v; ++a) sol.v[pq[static_cast<size_t>(a)]] += dx[n_theta + a];
        if (sol.v.minCoeff() <= 0.0) {
            throw SingularJacobian("solve_ac_pf: voltage collapsed below zero");
        }

        compute_injections();
        fill_mismatch();
        sol.max_residual = mismatch.size() ? mismatch.cwiseAbs().maxCoeff() : 0.0;
        sol.iterations = iter + 1;
    }

    sol.converged = sol.max_residual <= options.tolerance;
    sol.p = p_calc;
    sol.q = q_calc;
    sol.slack_p = p_calc[slack];
    sol.flows = line_flows(grid, sol.v, sol.theta);
    return sol;
}

}  // namespace gpcc
