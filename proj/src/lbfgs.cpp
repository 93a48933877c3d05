#include "gpcc/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace gpcc {

namespace {

bool finite(double v) { return std::isfinite(v); }

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, const Eigen::VectorXd& x0,
                           const LbfgsOptions& options) {
    const int n = static_cast<int>(x0.size());
    LbfgsResult result;
    result.x = x0;
    result.grad.resize(n);

    double f = objective(result.x, result.grad);
    result.evaluations = 1;
    if (!finite(f)) {
        result.f = f;
        return result;
    }

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    Eigen::VectorXd x_new(n), g_new(n), direction(n);

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        result.iterations = iter;
        if (result.grad.cwiseAbs().maxCoeff() <= options.grad_tolerance) {
            result.converged = true;
            break;
        }

        // Two-loop recursion.
        direction = -result.grad;
        const int m = static_cast<int>(s_hist.size());
        std::vector<double> alpha(static_cast<size_t>(m));
        for (int i = m - 1; i >= 0; --i) {
            alpha[static_cast<size_t>(i)] = rho_hist[static_cast<size_t>(i)] *
                                            s_hist[static_cast<size_t>(i)].dot(direction);
            direction -= alpha[static_cast<size_t>(i)] * y_hist[static_cast<size_t>(i)];
        }
        if (m > 0) {
            const auto& s = s_hist.back();
            const auto& y = y_hist.back();
            direction *= s.dot(y) / y.squaredNorm();
        }
        for (int i = 0; i < m; ++i) {
            const double beta = rho_hist[static_cast<size_t>(i)] *
                                y_hist[static_cast<size_t>(i)].dot(direction);
            direction += (alpha[static_cast<size_t>(i)] - beta) * s_hist[static_cast<size_t>(i)];
        }

        double dir_deriv = result.grad.dot(direction);
        if (dir_deriv >= 0.0) {  // not a descent direction; reset memory
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            direction = -result.grad;
            dir_deriv = result.grad.dot(direction);
        }

        // Backtracking Armijo line search with a curvature-based widening on
        // the first iterate.
        double step = (iter == 0) ? std::min(1.0, 1.0 / result.grad.cwiseAbs().maxCoeff()) : 1.0;
        const double c1 = 1e-4;
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int ls = 0; ls < options.max_line_search; ++ls) {
            x_new = result.x + step * direction;
            f_new = objective(x_new, g_new);
            ++result.evaluations;
            if (finite(f_new) && f_new <= f + c1 * step * dir_deriv) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        const Eigen::VectorXd s = x_new - result.x;
        const Eigen::VectorXd y = g_new - result.grad;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > options.history) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }

        const double f_change = std::abs(f - f_new) / std::max(1.0, std::abs(f));
        result.x = x_new;
        result.grad = g_new;
        f = f_new;
        if (f_change <= options.step_tolerance) {
            result.converged = true;  // stagnated; treat as a normal exit
            break;
        }
    }

    if (!result.converged && result.grad.cwiseAbs().maxCoeff() <= options.grad_tolerance) {
        result.converged = true;
    }
    result.f = f;
    return result;
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = step * std::max(1.0, std::abs(x[i]));
        xp[i] = x[i] + h;
        const double fp = f(xp);
        xp[i] = x[i] - h;
        const double fm = f(xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace gpcc
