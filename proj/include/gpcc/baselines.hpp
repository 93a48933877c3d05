#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "gpcc/ccopf.hpp"
#include "gpcc/gp.hpp"
#include "gpcc/grid.hpp"
#include "gpcc/outputs.hpp"
#include "gpcc/pf.hpp"

namespace gpcc {

// Gaussian fluctuation description used by validation and the scenario
// baseline: independent zero-mean deviations, loads first then renewables.
struct FluctuationSpec {
    Eigen::VectorXd sigma;  // p.u.
    std::vector<bool> is_res;

    static FluctuationSpec from_case(const GridCase& grid, double mult_load = 0.15,
                                     double mult_res = 0.30);
    double omega_of(const Eigen::VectorXd& w) const;  // total imbalance seen by generators
};

struct ScenarioSet {
    Eigen::MatrixXd omega;  // S x n_d sampled deviations
    std::uint64_t seed = 0;

    static ScenarioSet draw(const FluctuationSpec& spec, int count, std::uint64_t seed);
};

struct AcOpfOptions {
    double tolerance = 1e-6;
    int max_iterations = 60;
    Eigen::VectorXd u_init;  // optional warm start for the non-slack dispatch
};

struct AcOpfResult {
    Eigen::VectorXd u;       // per generator, slack entry is the realized output
    double cost = 0.0;       // currency units
    bool converged = false;
    int iterations = 0;
    double max_violation = 0.0;
};

// Deterministic AC-OPF against the true power-flow constraints; derivatives
// by finite differences. `deviation` shifts loads/renewables off their
// reference values (loads first, then renewables).
AcOpfResult ac_opf(const GridCase& grid, const Eigen::VectorXd& deviation = Eigen::VectorXd(),
                   const AcOpfOptions& options = {});

struct FullRecourseResult {
    double mean_cost = 0.0;
    std::vector<double> costs;
    int failures = 0;
};

FullRecourseResult full_recourse(const GridCase& grid, const ScenarioSet& scenarios,
                                 const AcOpfOptions& options = {});

struct ScenarioCcOpfOptions {
    double tolerance = 1e-6;
    int max_major_iterations = 40;
};

struct ScenarioCcOpfResult {
    Eigen::VectorXd u;      // nominal dispatch per generator
    Eigen::VectorXd alpha;  // participation factors, sum to one
    double cost = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string diagnostics;
};

// Scenario CC-OPF: one program over (u, alpha) enforcing AC feasibility of
// the affine recourse on every sampled scenario. Solved by successive
// linearization: per-major-iteration finite-difference sensitivities around
// the incumbent, a trust-region QP step, and acceptance under a merit
// filter on (cost, violation).
ScenarioCcOpfResult scenario_cc_opf(const GridCase& grid, const ScenarioSet& scenarios,
                                    const ScenarioCcOpfOptions& options = {});

struct ValidationReport {
    std::vector<std::string> names;
    Eigen::VectorXd y_base;            // outputs at the nominal dispatch
    Eigen::VectorXd emp_mean, emp_std;
    Eigen::VectorXd emp_q_low, emp_q_high;  // 0.27% / 99.73% empirical quantiles
    Eigen::VectorXd violation_rate;    // per output constraint
    double joint_violation = 0.0;      // any monitored output outside its limits
    double input_violation = 0.0;      // recourse dispatch outside generator boxes
    double pf_failure_rate = 0.0;
    int samples = 0;
    std::uint64_t seed = 0;
};

// Monte-Carlo validation of a dispatch with affine recourse against the
// AC power flow. Throws TooManyFailures when more than 5% of samples
// diverge.
ValidationReport mc_validate(const GridCase& grid, const Eigen::VectorXd& u,
                             const Eigen::VectorXd& alpha, const FluctuationSpec& spec,
                             int samples, std::uint64_t seed,
                             const OutputSpec& output_spec = OutputSpec::defaults());

// Predictions of a fitted surrogate over a labeled dataset slice.
struct RmseReport {
    Eigen::VectorXd per_output;
    double average = 0.0;
};

RmseReport rmse_report(const MultiGpModel& model, const Eigen::MatrixXd& X,
                       const Eigen::MatrixXd& Y);

}  // namespace gpcc
