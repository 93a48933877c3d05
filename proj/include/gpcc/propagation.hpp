#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "gpcc/gp.hpp"

namespace gpcc {

enum class Propagation { Ta1, Ta2, Em };

Propagation propagation_from(const std::string& name);
std::string to_string(Propagation method);

// Gaussian description of the test input [u, p_l, p_rs].
struct InputDistribution {
    Eigen::VectorXd mean;        // raw units
    Eigen::MatrixXd covariance;  // raw units; symmetric PSD

    void check() const;  // symmetry and PSD tolerance checks
};

struct PropagatedOutput {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
    Propagation method = Propagation::Ta1;
    bool em_fallback = false;  // EM hit an ill-conditioned determinant, used TA2
};

// Structured input covariance induced by the affine recourse u + alpha Omega
// over independent injection fluctuations. sigma_w orders loads first then
// renewables; is_res flags the renewable entries (their fluctuation enters
// the total imbalance with a negative sign).
Eigen::MatrixXd assemble_input_cov(const Eigen::VectorXd& alpha, const Eigen::VectorXd& sigma_w,
                                   const std::vector<bool>& is_res);

// First-order mean: the deterministic prediction at the input mean.
Eigen::VectorXd ta_mean(const MultiGpModel& model, const Eigen::VectorXd& mean);

Eigen::VectorXd ta1_variance(const MultiGpModel& model, const InputDistribution& dist);
Eigen::VectorXd ta2_variance(const MultiGpModel& model, const InputDistribution& dist);

// Exact moment matching for the SE-ARD kernel with zero prior mean.
// Falls back to TA2 (with the flag set) when the determinant factor
// underflows.
PropagatedOutput em_moments(const MultiGpModel& model, const InputDistribution& dist);

PropagatedOutput propagate(const MultiGpModel& model, const InputDistribution& dist,
                           Propagation method);

}  // namespace gpcc
