#include "gpcc/gp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "gpcc/errors.hpp"
#include "gpcc/io.hpp"
#include "gpcc/lbfgs.hpp"
#include "gpcc/parallel.hpp"
#include "gpcc/rng.hpp"

namespace gpcc {

using nlohmann::json;
using nlohmann::ordered_json;

Eigen::VectorXd KernelParams::to_log() const {
    Eigen::VectorXd log_params(2 + lengthscale2.size());
    log_params[0] = std::log(sigma_f2);
    for (Eigen::Index d = 0; d < lengthscale2.size(); ++d) {
        log_params[1 + d] = std::log(lengthscale2[d]);
    }
    log_params[log_params.size() - 1] = std::log(sigma_n2);
    return log_params;
}

KernelParams KernelParams::from_log(const Eigen::VectorXd& log_params) {
    KernelParams params;
    const Eigen::Index d = log_params.size() - 2;
    params.sigma_f2 = std::exp(log_params[0]);
    params.lengthscale2 = log_params.segment(1, d).array().exp();
    params.sigma_n2 = std::exp(log_params[log_params.size() - 1]);
    return params;
}

double kernel_eval(const KernelParams& params, const Eigen::VectorXd& xi,
                   const Eigen::VectorXd& xj) {
    if (xi.size() != params.lengthscale2.size() || xj.size() != xi.size()) {
        throw ValidationError("kernel_eval: dimension mismatch");
    }
    const double r2 = ((xi - xj).array().square() / params.lengthscale2.array()).sum();
    return params.sigma_f2 * std::exp(-0.5 * r2);
}

namespace {

// Noise-free SE-ARD Gram matrix.
Eigen::MatrixXd gram(const KernelParams& params, const Eigen::MatrixXd& X) {
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = params.sigma_f2;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double r2 =
                ((X.row(i) - X.row(j)).transpose().array().square() /
                 params.lengthscale2.array())
                    .sum();
            K(i, j) = K(j, i) = params.sigma_f2 * std::exp(-0.5 * r2);
        }
    }
    return K;
}

// LLT with jitter escalation relative to the mean diagonal.
Eigen::LLT<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& A, double* jitter_used = nullptr) {
    const double scale = A.diagonal().mean();
    const double levels[] = {0.0, 1e-10, 1e-8, 1e-6};
    for (double level : levels) {
        Eigen::MatrixXd Aj = A;
        if (level > 0.0) Aj.diagonal().array() += level * scale;
        Eigen::LLT<Eigen::MatrixXd> llt(Aj);
        if (llt.info() == Eigen::Success) {
            if (jitter_used) *jitter_used = level * scale;
            return llt;
        }
    }
    throw FactorizationFailure("gram matrix is not positive definite after jitter escalation");
}

}  // namespace

double nll(const KernelParams& params, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
           Eigen::VectorXd* grad_log) {
    const Eigen::Index n = X.rows();
    if (n < 1 || y.size() != n) throw ValidationError("nll: inconsistent training data");

    Eigen::MatrixXd K = gram(params, X);
    Eigen::MatrixXd A = K;
    A.diagonal().array() += params.sigma_n2;

    const Eigen::LLT<Eigen::MatrixXd> llt = factorize(A);
    const Eigen::MatrixXd L = llt.matrixL();
    const Eigen::VectorXd alpha = llt.solve(y);

    double log_det = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(L(i, i));
    log_det *= 2.0;

    const double value = 0.5 * y.dot(alpha) + 0.5 * log_det +
                         0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);

    if (grad_log) {
        // dNLL/dtheta = 0.5 tr((A^-1 - alpha alpha^T) dA/dtheta)
        Eigen::MatrixXd W = llt.solve(Eigen::MatrixXd::Identity(n, n));
        W -= alpha * alpha.transpose();

        const Eigen::Index dim = params.lengthscale2.size();
        grad_log->resize(dim + 2);
        // d/d log sigma_f2: dA = K
        (*grad_log)[0] = 0.5 * (W.array() * K.array()).sum();
        // d/d log l_d^2: dA = K .* (sq dist_d / (2 l_d^2))
        for (Eigen::Index d = 0; d < dim; ++d) {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = 0; j < n; ++j) {
                    const double diff = X(i, d) - X(j, d);
                    acc += W(i, j) * K(i, j) * (diff * diff) / (2.0 * params.lengthscale2[d]);
                }
            }
            (*grad_log)[1 + d] = 0.5 * acc;
        }
        // d/d log sigma_n2: dA = sigma_n2 I
        (*grad_log)[dim + 1] = 0.5 * params.sigma_n2 * W.trace();
    }
    return value;
}

Eigen::VectorXd GpModel::standardize(const Eigen::VectorXd& x_raw) const {
    return (x_raw - x_mean).cwiseQuotient(x_scale);
}

void GpModel::predict(const Eigen::VectorXd& x_raw, double& mean, double& variance) const {
    const Eigen::VectorXd xs = standardize(x_raw);
    const Eigen::Index n = X.rows();
    Eigen::VectorXd k_star(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double r2 = ((X.row(i).transpose() - xs).array().square() /
                           params.lengthscale2.array())
                              .sum();
        k_star[i] = params.sigma_f2 * std::exp(-0.5 * r2);
    }
    mean = k_star.dot(beta) + y_mean;
    const Eigen::VectorXd w = L.triangularView<Eigen::Lower>().solve(k_star);
    variance = std::max(0.0, params.sigma_f2 - w.squaredNorm());
}

Eigen::VectorXd GpModel::mean_gradient(const Eigen::VectorXd& x_raw) const {
    const Eigen::VectorXd xs = standardize(x_raw);
    const Eigen::Index n = X.rows();
    const Eigen::Index d = xs.size();
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd diff = X.row(i).transpose() - xs;
        const double r2 = (diff.array().square() / params.lengthscale2.array()).sum();
        const double k = params.sigma_f2 * std::exp(-0.5 * r2);
        // dk/dxs = k * Lambda^-1 (x_i - xs)
        grad += (beta[i] * k) * diff.cwiseQuotient(params.lengthscale2);
    }
    return grad.cwiseQuotient(x_scale);  // chain rule through standardization
}

Eigen::MatrixXd GpModel::mean_hessian(const Eigen::VectorXd& x_raw) const {
    const Eigen::VectorXd xs = standardize(x_raw);
    const Eigen::Index n = X.rows();
    const Eigen::Index d = xs.size();
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd diff = X.row(i).transpose() - xs;
        const double r2 = (diff.array().square() / params.lengthscale2.array()).sum();
        const double k = params.sigma_f2 * std::exp(-0.5 * r2);
        const Eigen::VectorXd u = diff.cwiseQuotient(params.lengthscale2);
        hess += (beta[i] * k) * (u * u.transpose());
        hess -= (beta[i] * k) *
                Eigen::MatrixXd(params.lengthscale2.cwiseInverse().asDiagonal());
    }
    return x_scale.cwiseInverse().asDiagonal() * hess * x_scale.cwiseInverse().asDiagonal();
}

Eigen::VectorXd GpModel::variance_gradient(const Eigen::VectorXd& x_raw) const {
    const Eigen::VectorXd xs = standardize(x_raw);
    const Eigen::Index n = X.rows();
    const Eigen::Index d = xs.size();
    Eigen::VectorXd k_star(n);
    Eigen::MatrixXd dk(n, d);  // dk_i/dxs
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd diff = X.row(i).transpose() - xs;
        const double r2 = (diff.array().square() / params.lengthscale2.array()).sum();
        const double k = params.sigma_f2 * std::exp(-0.5 * r2);
        k_star[i] = k;
        dk.row(i) = k * diff.cwiseQuotient(params.lengthscale2).transpose();
    }
    const Eigen::VectorXd a = L.triangularView<Eigen::Lower>().solve(k_star);
    const Eigen::VectorXd Ainv_k =
        L.transpose().triangularView<Eigen::Upper>().solve(a);
    // d/dx (k** - k^T A^-1 k) = -2 (dk/dx)^T A^-1 k
    const Eigen::VectorXd grad = -2.0 * dk.transpose() * Ainv_k;
    return grad.cwiseQuotient(x_scale);
}

Eigen::MatrixXd GpModel::variance_hessian(const Eigen::VectorXd& x_raw) const {
    const Eigen::VectorXd xs = standardize(x_raw);
    const Eigen::Index n = X.rows();
    const Eigen::Index d = xs.size();
    Eigen::VectorXd k_star(n);
    Eigen::MatrixXd dk(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd diff = X.row(i).transpose() - xs;
        const double r2 = (diff.array().square() / params.lengthscale2.array()).sum();
        const double k = params.sigma_f2 * std::exp(-0.5 * r2);
        k_star[i] = k;
        dk.row(i) = k * diff.cwiseQuotient(params.lengthscale2).transpose();
    }
    const Eigen::VectorXd a = L.triangularView<Eigen::Lower>().solve(k_star);
    const Eigen::VectorXd Ainv_k = L.transpose().triangularView<Eigen::Upper>().solve(a);
    // A^-1 dk stored column-wise per input dimension.
    Eigen::MatrixXd Ainv_dk(n, d);
    for (Eigen::Index c = 0; c < d; ++c) {
        const Eigen::VectorXd t = L.triangularView<Eigen::Lower>().solve(dk.col(c));
        Ainv_dk.col(c) = L.transpose().triangularView<Eigen::Upper>().solve(t);
    }

    Eigen::MatrixXd hess = -2.0 * dk.transpose() * Ainv_dk;
    // Second-derivative-of-kernel term: sum_i (A^-1 k)_i d2k_i/dx2
    const Eigen::MatrixXd lambda_inv =
        Eigen::MatrixXd(params.lengthscale2.cwiseInverse().asDiagonal());
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd diff = X.row(i).transpose() - xs;
        const Eigen::VectorXd u = diff.cwiseQuotient(params.lengthscale2);
        const Eigen::MatrixXd d2k = k_star[i] * (u * u.transpose() - lambda_inv);
        hess -= 2.0 * Ainv_k[i] * d2k;
    }
    return x_scale.cwiseInverse().asDiagonal() * hess * x_scale.cwiseInverse().asDiagonal();
}

GpModel fit_gp(const Eigen::MatrixXd& X_raw, const Eigen::VectorXd& y_raw,
               const FitOptions& options) {
    const Eigen::Index n = X_raw.rows();
    const Eigen::Index d = X_raw.cols();
    if (n < 2) throw ValidationError("fit_gp: need at least two training points");

    GpModel model;
    model.x_mean = X_raw.colwise().mean();
    model.x_scale.resize(d);
    for (Eigen::Index c = 0; c < d; ++c) {
        const double var =
            (X_raw.col(c).array() - model.x_mean[c]).square().sum() / static_cast<double>(n - 1);
        model.x_scale[c] = std::max(std::sqrt(var), 1e-8);
    }
    model.y_mean = y_raw.mean();

    model.X.resize(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
        model.X.row(r) =
            (X_raw.row(r).transpose() - model.x_mean).cwiseQuotient(model.x_scale).transpose();
    }
    model.y = y_raw.array() - model.y_mean;

    const double y_var =
        std::max(model.y.squaredNorm() / static_cast<double>(n - 1), 1e-12);

    // Objective over log-parameters; the noise floor is applied via
    // clamping inside the evaluation.
    const double log_noise_floor = std::log(options.noise_floor);
    auto objective = [&](const Eigen::VectorXd& lp, Eigen::VectorXd& grad) -> double {
        Eigen::VectorXd lp_clamped = lp;
        lp_clamped[lp.size() - 1] = std::max(lp_clamped[lp.size() - 1], log_noise_floor);
        const KernelParams params = KernelParams::from_log(lp_clamped);
        Eigen::VectorXd g;
        double value;
        try {
            value = nll(params, model.X, model.y, &g);
        } catch (const FactorizationFailure&) {
            grad.setZero(lp.size());
            return std::numeric_limits<double>::infinity();
        }
        grad = g;
        if (lp[lp.size() - 1] < log_noise_floor) grad[lp.size() - 1] = 0.0;
        return value;
    };

    Eigen::VectorXd base_init(d + 2);
    base_init[0] = std::log(y_var);
    for (Eigen::Index c = 0; c < d; ++c) base_init[1 + c] = 0.0;  // unit scaled inputs
    base_init[d + 1] = std::log(std::max(1e-4 * y_var, options.noise_floor));

    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_lp;
    int succeeded = 0;
    for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
        Eigen::VectorXd lp = base_init;
        if (restart > 0) {
            Rng rng(options.seed + static_cast<std::uint64_t>(restart) * 7919ULL);
            for (Eigen::Index i = 0; i < lp.size(); ++i) lp[i] += rng.uniform(-1.5, 1.5);
        }
        LbfgsOptions lopt;
        lopt.max_iterations = options.max_evaluations;
        lopt.grad_tolerance = 1e-6;
        const LbfgsResult res = lbfgs_minimize(objective, lp, lopt);
        if (!std::isfinite(res.f)) continue;
        ++succeeded;
        if (res.f < best) {
            best = res.f;
            best_lp = res.x;
        }
    }
    if (succeeded == 0) throw AllRestartsFailed("fit_gp: every restart failed to produce a finite NLL");

    best_lp[best_lp.size() - 1] = std::max(best_lp[best_lp.size() - 1], log_noise_floor);
    model.params = KernelParams::from_log(best_lp);
    model.nll_value = best;

    Eigen::MatrixXd A = gram(model.params, model.X);
    A.diagonal().array() += model.params.sigma_n2;
    const Eigen::LLT<Eigen::MatrixXd> llt = factorize(A);
    model.L = llt.matrixL();
    model.beta = llt.solve(model.y);
    return model;
}

void MultiGpModel::predict(const Eigen::VectorXd& x_raw, Eigen::VectorXd& mean,
                           Eigen::VectorXd& variance) const {
    mean.resize(n_outputs());
    variance.resize(n_outputs());
    for (int a = 0; a < n_outputs(); ++a) {
        outputs[static_cast<size_t>(a)].predict(x_raw, mean[a], variance[a]);
    }
}

MultiGpModel fit_multi_gp(const Eigen::MatrixXd& X_raw, const Eigen::MatrixXd& Y_raw,
                          const std::vector<std::string>& x_names,
                          const std::vector<std::string>& y_names,
                          const FitOptions& options) {
    if (X_raw.rows() != Y_raw.rows()) throw ValidationError("fit_multi_gp: row count mismatch");
    MultiGpModel model;
    model.x_names = x_names;
    model.y_names = y_names;
    model.train_rows = static_cast<int>(X_raw.rows());
    model.outputs.resize(static_cast<size_t>(Y_raw.cols()));
    parallel_for(static_cast<size_t>(Y_raw.cols()), [&](size_t a) {
        FitOptions per_output = options;
        per_output.seed = options.seed + 1315423911ULL * (a + 1);
        model.outputs[a] = fit_gp(X_raw, Y_raw.col(static_cast<Eigen::Index>(a)), per_output);
    });
    return model;
}

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vec_from_json(const json& arr) {
    Eigen::VectorXd v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
}

}  // namespace

std::string serialize_multi_gp(const MultiGpModel& model) {
    ordered_json doc;
    doc["x_names"] = model.x_names;
    doc["y_names"] = model.y_names;
    doc["training_fingerprint"] = model.training_fingerprint;
    doc["train_rows"] = model.train_rows;
    doc["outputs"] = json::array();
    for (const auto& gp : model.outputs) {
        ordered_json g;
        g["sigma_f2"] = gp.params.sigma_f2;
        g["lengthscale2"] = vec_to_json(gp.params.lengthscale2);
        g["sigma_n2"] = gp.params.sigma_n2;
        g["x_mean"] = vec_to_json(gp.x_mean);
        g["x_scale"] = vec_to_json(gp.x_scale);
        g["y_mean"] = gp.y_mean;
        g["nll"] = gp.nll_value;
        json X = json::array();
        for (Eigen::Index r = 0; r < gp.X.rows(); ++r) X.push_back(vec_to_json(gp.X.row(r)));
        g["X"] = X;
        g["y"] = vec_to_json(gp.y);
        doc["outputs"].push_back(g);
    }
    return doc.dump() + "\n";
}

MultiGpModel parse_multi_gp(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("gp model: ") + e.what());
    }
    MultiGpModel model;
    model.x_names = doc.value("x_names", std::vector<std::string>{});
    model.y_names = doc.value("y_names", std::vector<std::string>{});
    model.training_fingerprint = doc.value("training_fingerprint", "");
    model.train_rows = doc.value("train_rows", 0);
    for (const auto& g : doc.at("outputs")) {
        GpModel gp;
        gp.params.sigma_f2 = g.at("sigma_f2").get<double>();
        gp.params.lengthscale2 = vec_from_json(g.at("lengthscale2"));
        gp.params.sigma_n2 = g.at("sigma_n2").get<double>();
        gp.x_mean = vec_from_json(g.at("x_mean"));
        gp.x_scale = vec_from_json(g.at("x_scale"));
        gp.y_mean = g.at("y_mean").get<double>();
        gp.nll_value = g.value("nll", 0.0);
        const auto& X = g.at("X");
        gp.X.resize(static_cast<Eigen::Index>(X.size()), gp.x_mean.size());
        for (size_t r = 0; r < X.size(); ++r) {
            gp.X.row(static_cast<Eigen::Index>(r)) = vec_from_json(X[r]).transpose();
        }
        gp.y = vec_from_json(g.at("y"));

        Eigen::MatrixXd A = gram(gp.params, gp.X);
        A.diagonal().array() += gp.params.sigma_n2;
        const Eigen::LLT<Eigen::MatrixXd> llt = factorize(A);
        gp.L = llt.matrixL();
        gp.beta = llt.solve(gp.y);
        model.outputs.push_back(std::move(gp));
    }
    return model;
}

void save_multi_gp(const MultiGpModel& model, const std::string& path) {
    write_text_file(path, serialize_multi_gp(model));
}

MultiGpModel load_multi_gp(const std::string& path) {
    return parse_multi_gp(read_text_file(path));
}

}  // namespace gpcc
