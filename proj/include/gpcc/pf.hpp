#pragma once

#include <Eigen/Core>
#include <complex>
#include <vector>

#include "gpcc/grid.hpp"

namespace gpcc {

// Net scheduled injections by bus position (generation minus consumption,
// p.u.). The slack entry of p is ignored; q is ignored at PV and slack
// buses.
struct Injections {
    Eigen::VectorXd p;
    Eigen::VectorXd q;
};

struct PfOptions {
    double tolerance = 1e-8;  // max power mismatch, p.u.
    int max_iterations = 30;
    // Optional warm start (voltage magnitudes and angles per bus).
    Eigen::VectorXd v0;
    Eigen::VectorXd theta0;
};

struct LineFlow {
    double p_from = 0.0, q_from = 0.0;  // leaving the from bus
    double p_to = 0.0, q_to = 0.0;      // leaving the to bus
    double s = 0.0;                     // max of the two directed apparent flows
};

struct PfSolution {
    Eigen::VectorXd v;      // p.u. per bus
    Eigen::VectorXd theta;  // radians per bus
    Eigen::VectorXd p;      // realized net active injection per bus
    Eigen::VectorXd q;      // realized net reactive injection per bus
    std::vector<LineFlow> flows;
    double slack_p = 0.0;   // realized net active injection at the slack bus
    bool converged = false;
    int iterations = 0;
    double max_residual = 0.0;
};

// Reference injections implied by the case data: generators at p_ref,
// loads/renewables at their reference powers.
Injections reference_injections(const GridCase& grid);

// Newton-Raphson in polar coordinates; flat start unless a warm start is
// supplied. Throws SingularJacobian at a degenerate operating point;
// returns converged=false with diagnostics when the iteration cap is hit.
PfSolution solve_ac_pf(const GridCase& grid, const Injections& injections,
                       const PfOptions& options = {});

// Directed branch flows from a voltage solution.
std::vector<LineFlow> line_flows(const GridCase& grid, const Eigen::VectorXd& v,
                                 const Eigen::VectorXd& theta);

// Bus admittance matrix (dense; systems here are small).
Eigen::MatrixXcd build_ybus(const GridCase& grid);

// Total series losses, sum over lines of (p_from + p_to).
double total_losses(const std::vector<LineFlow>& flows);

}  // namespace gpcc
