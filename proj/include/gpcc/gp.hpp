#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace gpcc {

// SE-ARD kernel hyperparameters. Length scales are kept squared (the
// diagonal of Lambda).
struct KernelParams {
    double sigma_f2 = 1.0;
    Eigen::VectorXd lengthscale2;  // l_d^2 per input dimension
    double sigma_n2 = 1e-4;

    Eigen::VectorXd to_log() const;
    static KernelParams from_log(const Eigen::VectorXd& log_params);
};

double kernel_eval(const KernelParams& params, const Eigen::VectorXd& xi,
                   const Eigen::VectorXd& xj);

// Negative log marginal likelihood and its gradient in log-parameter space.
// X rows are training points. Throws FactorizationFailure when the Gram
// matrix cannot be factorized even after jitter escalation.
double nll(const KernelParams& params, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
           Eigen::VectorXd* grad_log = nullptr);

// One trained single-output GP. Inputs are standardized and the target is
// centered internally; predictions are reported in original units.
struct GpModel {
    KernelParams params;
    Eigen::MatrixXd X;   // standardized training inputs
    Eigen::VectorXd y;   // centered training targets
    Eigen::MatrixXd L;   // lower factor of K + sigma_n2 I (+ jitter used)
    Eigen::VectorXd beta;

    Eigen::VectorXd x_mean, x_scale;  // standardization constants
    double y_mean = 0.0;
    double nll_value = 0.0;

    Eigen::VectorXd standardize(const Eigen::VectorXd& x_raw) const;

    // Latent mean and variance at a deterministic input (original units).
    void predict(const Eigen::VectorXd& x_raw, double& mean, double& variance) const;

    // Gradient of the predictive mean w.r.t. the raw input.
    Eigen::VectorXd mean_gradient(const Eigen::VectorXd& x_raw) const;
    // Hessian of the predictive mean w.r.t. the raw input.
    Eigen::MatrixXd mean_hessian(const Eigen::VectorXd& x_raw) const;
    // Gradient and Hessian of the predictive variance w.r.t. the raw input.
    Eigen::VectorXd variance_gradient(const Eigen::VectorXd& x_raw) const;
    Eigen::MatrixXd variance_hessian(const Eigen::VectorXd& x_raw) const;
};

struct FitOptions {
    int restarts = 5;
    int max_evaluations = 200;
    std::uint64_t seed = 7;
    double noise_floor = 1e-10;
};

// Multi-restart quasi-Newton minimization of the NLL over log-parameters.
GpModel fit_gp(const Eigen::MatrixXd& X_raw, const Eigen::VectorXd& y_raw,
               const FitOptions& options = {});

struct MultiGpModel {
    std::vector<GpModel> outputs;
    std::vector<std::string> x_names;
    std::vector<std::string> y_names;
    std::string training_fingerprint;
    int train_rows = 0;

    int n_outputs() const { return static_cast<int>(outputs.size()); }
    int n_inputs() const {
        return outputs.empty() ? 0 : static_cast<int>(outputs.front().x_mean.size());
    }

    void predict(const Eigen::VectorXd& x_raw, Eigen::VectorXd& mean,
                 Eigen::VectorXd& variance) const;
};

// Fits one GP per column of Y; parallel across outputs, deterministic.
MultiGpModel fit_multi_gp(const Eigen::MatrixXd& X_raw, const Eigen::MatrixXd& Y_raw,
                          const std::vector<std::string>& x_names,
                          const std::vector<std::string>& y_names,
                          const FitOptions& options = {});

// JSON serialization; the Cholesky factor is recomputed on load.
std::string serialize_multi_gp(const MultiGpModel& model);
MultiGpModel parse_multi_gp(const std::string& text);
void save_multi_gp(const MultiGpModel& model, const std::string& path);
MultiGpModel load_multi_gp(const std::string& path);

}  // namespace gpcc
