#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "gpcc/grid.hpp"
#include "gpcc/outputs.hpp"
#include "gpcc/rng.hpp"

namespace gpcc {

// Log-normal factor: parameters of the underlying normal.
struct LogNormalSpec {
    double mu = 0.0;
    double sigma = 0.0;
};

struct SamplingConfig {
    LogNormalSpec load_corr{-1.0, 0.1};   // shared across loads per sample
    LogNormalSpec load_uncorr{1.0, 0.05}; // independent per load
    LogNormalSpec res_corr{0.2, 0.4};     // shared across renewables per sample
    LogNormalSpec res_uncorr{-0.2, 0.3};  // independent per renewable
    double psi_lo = 0.8;  // generation jitter, uniform
    double psi_hi = 1.2;
    double noise_sigma = 1e-4;  // output measurement noise, p.u.
    std::uint64_t seed = 1;

    void check() const;
};

struct Dataset {
    Eigen::MatrixXd X;  // N x (n_u + n_L + n_R), p.u.
    Eigen::MatrixXd Y;  // N x n_y, p.u.
    std::vector<std::string> x_names;
    std::vector<std::string> y_names;
    std::uint64_t seed = 0;
    std::string case_fingerprint;
    int dropped_rows = 0;  // PF-divergent draws replaced by fresh ones

    int rows() const { return static_cast<int>(X.rows()); }
    std::string fingerprint() const;
};

// Active powers of loads and renewables: one row per sample, columns
// [loads..., renewables...], each reference value scaled by the product of
// a shared correlated factor and an element-local factor.
Eigen::MatrixXd sample_injections(const GridCase& grid, const SamplingConfig& config, int n);

// Two-step balanced generation sample for one row of injections. The
// returned row satisfies sum(u) + sum(p_rs) = loss_factor * sum(p_l)
// exactly.
Eigen::VectorXd sample_generation(const GridCase& grid, const SamplingConfig& config,
                                  const Eigen::VectorXd& load_row,
                                  const Eigen::VectorXd& res_row, Rng& rng);

// Full labeled dataset: inputs sampled per the config, outputs from the
// AC power flow plus Gaussian measurement noise. Rows whose power flow
// fails to converge are dropped and redrawn; more than 20% failures abort.
Dataset build_dataset(const GridCase& grid, const SamplingConfig& config, int n,
                      const OutputSpec& spec);

// Column-annotated CSV plus a JSON metadata sidecar (written at
// path + ".meta.json").
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace gpcc
