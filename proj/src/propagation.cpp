#include "gpcc/propagation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "gpcc/errors.hpp"

namespace gpcc {

Propagation propagation_from(const std::string& name) {
    if (name == "ta1") return Propagation::Ta1;
    if (name == "ta2") return Propagation::Ta2;
    if (name == "em") return Propagation::Em;
    throw DomainError("unknown propagation method: " + name);
}

std::string to_string(Propagation method) {
    switch (method) {
        case Propagation::Ta1: return "ta1";
        case Propagation::Ta2: return "ta2";
        case Propagation::Em: return "em";
    }
    return "?";
}

void InputDistribution::check() const {
    if (covariance.rows() != mean.size() || covariance.cols() != mean.size()) {
        throw ValidationError("input distribution: covariance shape mismatch");
    }
    const double asym = (covariance - covariance.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(1.0, covariance.cwiseAbs().maxCoeff())) {
        throw ValidationError("input distribution: covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10) {
        throw ValidationError("input distribution: covariance is not PSD");
    }
}

Eigen::MatrixXd assemble_input_cov(const Eigen::VectorXd& alpha, const Eigen::VectorXd& sigma_w,
                                   const std::vector<bool>& is_res) {
    const Eigen::Index n_u = alpha.size();
    const Eigen::Index n_d = sigma_w.size();
    if (static_cast<Eigen::Index>(is_res.size()) != n_d) {
        throw ValidationError("assemble_input_cov: is_res size mismatch");
    }
    if (std::abs(alpha.sum() - 1.0) > 1e-8 || alpha.minCoeff() < -1e-10) {
        throw InvalidAlpha("assemble_input_cov: alpha must be nonnegative and sum to one");
    }
    if (sigma_w.minCoeff() < 0.0) {
        throw ValidationError("assemble_input_cov: sigma_w must be nonnegative");
    }

    // Signed sensitivity of the total imbalance Omega to each fluctuation:
    // +1 for loads, -1 for renewables (u_k = u_k0 + alpha_k Omega).
    Eigen::VectorXd sign(n_d);
    for (Eigen::Index j = 0; j < n_d; ++j) sign[j] = is_res[static_cast<size_t>(j)] ? -1.0 : 1.0;

    const Eigen::VectorXd var_w = sigma_w.array().square();
    const double trace_w = var_w.sum();

    Eigen::MatrixXd cov(n_u + n_d, n_u + n_d);
    cov.topLeftCorner(n_u, n_u) = trace_w * (alpha * alpha.transpose());
    Eigen::MatrixXd cross = alpha * (sign.cwiseProduct(var_w)).transpose();
    cov.topRightCorner(n_u, n_d) = cross;
    cov.bottomLeftCorner(n_d, n_u) = cross.transpose();
    cov.bottomRightCorner(n_d, n_d) = var_w.asDiagonal();
    return cov;
}

Eigen::VectorXd ta_mean(const MultiGpModel& model, const Eigen::VectorXd& mean) {
    Eigen::VectorXd mu, var;
    model.predict(mean, mu, var);
    return mu;
}

namespace {

// Input covariance in the standardized coordinates of one GP.
Eigen::MatrixXd standardized_cov(const GpModel& gp, const Eigen::MatrixXd& cov) {
    const Eigen::VectorXd inv_scale = gp.x_scale.cwiseInverse();
    return inv_scale.asDiagonal() * cov * inv_scale.asDiagonal();
}

}  // namespace

Eigen::VectorXd ta1_variance(const MultiGpModel& model, const InputDistribution& dist) {
    Eigen::VectorXd variance(model.n_outputs());
    for (int a = 0; a < model.n_outputs(); ++a) {
        const GpModel& gp = model.outputs[static_cast<size_t>(a)];
        double mu, var;
        gp.predict(dist.mean, mu, var);
        const Eigen::VectorXd grad = gp.mean_gradient(dist.mean);
        variance[a] = std::max(0.0, var + grad.dot(dist.covariance * grad));
    }
    return variance;
}

Eigen::VectorXd ta2_variance(const MultiGpModel& model, const InputDistribution& dist) {
    Eigen::VectorXd variance = ta1_variance(model, dist);
    for (int a = 0; a < model.n_outputs(); ++a) {
        const GpModel& gp = model.outputs[static_cast<size_t>(a)];
        const Eigen::MatrixXd hess = gp.variance_hessian(dist.mean);
        variance[a] += 0.5 * (hess * dist.covariance).trace();
        variance[a] = std::max(0.0, variance[a]);
    }
    return variance;
}

PropagatedOutput em_moments(const MultiGpModel& model, const InputDistribution& dist) {
    PropagatedOutput out;
    out.method = Propagation::Em;
    out.mean.resize(model.n_outputs());
    out.variance.resize(model.n_outputs());

    for (int a = 0; a < model.n_outputs(); ++a) {
        const GpModel& gp = model.outputs[static_cast<size_t>(a)];
        const Eigen::Index n = gp.X.rows();
        const Eigen::Index d = gp.X.cols();
        const Eigen::VectorXd mu_s = gp.standardize(dist.mean);
        const Eigen::MatrixXd sigma_s = standardized_cov(gp, dist.covariance);
        const Eigen::VectorXd lambda = gp.params.lengthscale2;

        // q_i = sf2 |Sigma L^-1 + I|^{-1/2}
        //       exp(-1/2 (x_i - mu)^T (Sigma + Lambda)^-1 (x_i - mu))
        Eigen::MatrixXd sl = sigma_s;
        sl.diagonal() += lambda;
        const Eigen::LLT<Eigen::MatrixXd> llt_sl(sl);
        if (llt_sl.info() != Eigen::Success) {
            throw PropagationFailure("em_moments: Sigma + Lambda not positive definite");
        }
        double logdet_sl = 0.0;
        const Eigen::MatrixXd L_sl = llt_sl.matrixL();
        for (Eigen::Index i = 0; i < d; ++i) logdet_sl += std::log(L_sl(i, i));
        logdet_sl *= 2.0;
        const double logdet_lambda = lambda.array().log().sum();
        // |Sigma Lambda^-1 + I| = |Sigma + Lambda| / |Lambda|
        const double log_det_factor_q = logdet_sl - logdet_lambda;
        if (!std::isfinite(log_det_factor_q) || log_det_factor_q > 700.0) {
            // Determinant factor underflows exp(-x/2); fall back to TA2.
            const Eigen::VectorXd mt = ta_mean(model, dist.mean);
            const Eigen::VectorXd vt = ta2_variance(model, dist);
            out.mean = mt;
            out.variance = vt;
            out.em_fallback = true;
            return out;
        }

        Eigen::VectorXd q(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd diff = gp.X.row(i).transpose() - mu_s;
            const double quad = diff.dot(llt_sl.solve(diff));
            q[i] = gp.params.sigma_f2 * std::exp(-0.5 * log_det_factor_q - 0.5 * quad);
        }
        const double mean_centered = q.dot(gp.beta);
        out.mean[a] = mean_centered + gp.y_mean;

        // Q_ij = k_i(mu) k_j(mu) / |2 Sigma L^-1 + I|^{1/2}
        //        exp((z_ij - mu)^T (Sigma + Lambda/2)^-1 Sigma Lambda^-1 (z_ij - mu))
        Eigen::MatrixXd shl = sigma_s;
        shl.diagonal() += 0.5 * lambda;
        const Eigen::LLT<Eigen::MatrixXd> llt_shl(shl);
        if (llt_shl.info() != Eigen::Success) {
            throw PropagationFailure("em_moments: Sigma + Lambda/2 not positive definite");
        }
        Eigen::MatrixXd two_sl = 2.0 * sigma_s;
        two_sl.diagonal() += lambda;
        const Eigen::LLT<Eigen::MatrixXd> llt_two(two_sl);
        double logdet_two = 0.0;
        const Eigen::MatrixXd L_two = llt_two.matrixL();
        for (Eigen::Index i = 0; i < d; ++i) logdet_two += std::log(L_two(i, i));
        logdet_two *= 2.0;
        const double log_det_factor_Q = logdet_two - logdet_lambda;  // |2SL^-1+I|

        // M = (Sigma + Lambda/2)^-1 Sigma Lambda^-1, symmetrized.
        Eigen::MatrixXd M = llt_shl.solve(sigma_s) * lambda.cwiseInverse().asDiagonal();
        M = 0.5 * (M + M.transpose());

        Eigen::VectorXd k_mu(n);
        Eigen::MatrixXd A(n, d);  // rows a_i = x_i - mu
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd diff = gp.X.row(i).transpose() - mu_s;
            A.row(i) = diff.transpose();
            const double r2 = (diff.array().square() / lambda.array()).sum();
            k_mu[i] = gp.params.sigma_f2 * std::exp(-0.5 * r2);
        }
        const Eigen::MatrixXd MA = A * M;  // rows M a_i (M symmetric)
        Eigen::VectorXd mquad(n);
        for (Eigen::Index i = 0; i < n; ++i) mquad[i] = A.row(i).dot(MA.row(i));

        Eigen::MatrixXd Q(n, n);
        const double det_scale_Q = std::exp(-0.5 * log_det_factor_Q);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double e =
                    0.25 * (mquad[i] + mquad[j] + 2.0 * A.row(i).dot(MA.row(j)));
                const double value = k_mu[i] * k_mu[j] * det_scale_Q * std::exp(e);
                Q(i, j) = value;
                Q(j, i) = value;
            }
        }

        // A^-1 Q via the cached factor.
        const Eigen::MatrixXd W0 = gp.L.triangularView<Eigen::Lower>().solve(Q);
        const Eigen::MatrixXd Ainv_Q =
            gp.L.transpose().triangularView<Eigen::Upper>().solve(W0);
        const double variance = gp.params.sigma_f2 - Ainv_Q.trace() +
                                gp.beta.dot(Q * gp.beta) - mean_centered * mean_centered;
        out.variance[a] = std::max(0.0, variance);
    }
    return out;
}

PropagatedOutput propagate(const MultiGpModel& model, const InputDistribution& dist,
                           Propagation method) {
    dist.check();
    PropagatedOutput out;
    out.method = method;
    switch (method) {
        case Propagation::Ta1:
            out.mean = ta_mean(model, dist.mean);
            out.variance = ta1_variance(model, dist);
            break;
        case Propagation::Ta2:
            out.mean = ta_mean(model, dist.mean);
            out.variance = ta2_variance(model, dist);
            break;
        case Propagation::Em:
            out = em_moments(model, dist);
            break;
    }
    return out;
}

}  // namespace gpcc
