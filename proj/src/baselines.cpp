#include "gpcc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gpcc/errors.hpp"
#include "gpcc/nlp.hpp"
#include "gpcc/parallel.hpp"
#include "gpcc/rng.hpp"

namespace gpcc {

FluctuationSpec FluctuationSpec::from_case(const GridCase& grid, double mult_load,
                                           double mult_res) {
    FluctuationSpec spec;
    const int n_l = static_cast<int>(grid.loads.size());
    const int n_r = static_cast<int>(grid.renewables.size());
    spec.sigma.resize(n_l + n_r);
    spec.is_res.assign(static_cast<size_t>(n_l + n_r), false);
    for (int i = 0; i < n_l; ++i) {
        spec.sigma[i] = mult_load * std::abs(grid.loads[static_cast<size_t>(i)].p_ref);
    }
    for (int j = 0; j < n_r; ++j) {
        spec.sigma[n_l + j] = mult_res * std::abs(grid.renewables[static_cast<size_t>(j)].p_ref);
        spec.is_res[static_cast<size_t>(n_l + j)] = true;
    }
    return spec;
}

double FluctuationSpec::omega_of(const Eigen::VectorXd& w) const {
    double omega = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        omega += is_res[static_cast<size_t>(j)] ? -w[j] : w[j];
    }
    return omega;
}

ScenarioSet ScenarioSet::draw(const FluctuationSpec& spec, int count, std::uint64_t seed) {
    if (count < 1) throw ValidationError("scenario set: count must be >= 1");
    ScenarioSet set;
    set.seed = seed;
    set.omega.resize(count, spec.sigma.size());
    for (int s = 0; s < count; ++s) {
        Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(s));
        for (Eigen::Index j = 0; j < spec.sigma.size(); ++j) {
            set.omega(s, j) = rng.normal(0.0, spec.sigma[j]);
        }
    }
    return set;
}

namespace {

// Everything the true-physics evaluations need about the case, resolved
// once.
struct CaseView {
    const GridCase* grid = nullptr;
    OutputLayout layout;
    int n_bus = 0;
    int n_gen = 0;
    int slack_gen = -1;  // generator sitting on the slack bus
    std::vector<int> gen_bus;
    std::vector<int> load_bus;
    std::vector<int> res_bus;
    Eigen::VectorXd gamma_load, gamma_res;

    explicit CaseView(const GridCase& g, const OutputSpec& spec = OutputSpec::defaults())
        : grid(&g), layout(build_output_layout(g, spec)) {
        n_bus = static_cast<int>(g.buses.size());
        n_gen = static_cast<int>(g.generators.size());
        const int slack_bus = g.slack_index();
        for (int k = 0; k < n_gen; ++k) {
            gen_bus.push_back(g.bus_index(g.generators[static_cast<size_t>(k)].bus));
            if (gen_bus.back() == slack_bus) slack_gen = k;
        }
        if (slack_gen < 0) throw ValidationError("case has no generator at the slack bus");
        gamma_load.resize(static_cast<Eigen::Index>(g.loads.size()));
        for (size_t i = 0; i < g.loads.size(); ++i) {
            load_bus.push_back(g.bus_index(g.loads[i].bus));
            gamma_load[static_cast<Eigen::Index>(i)] = g.loads[i].gamma();
        }
        gamma_res.resize(static_cast<Eigen::Index>(g.renewables.size()));
        for (size_t j = 0; j < g.renewables.size(); ++j) {
            res_bus.push_back(g.bus_index(g.renewables[j].bus));
            gamma_res[static_cast<Eigen::Index>(j)] = g.renewables[j].gamma();
        }
    }

    int n_load() const { return static_cast<int>(load_bus.size()); }
    int n_res() const { return static_cast<int>(res_bus.size()); }

    // PF at a given PV-generator dispatch and injection deviation. `u` has
    // one entry per generator; the slack entry is ignored by the solver and
    // replaced with the realized value on return.
    struct Evaluation {
        PfSolution sol;
        Eigen::VectorXd y;
        double slack_gen_p = 0.0;
        bool ok = false;
    };

    Evaluation evaluate(const Eigen::VectorXd& u, const Eigen::VectorXd& deviation,
                        const PfOptions& pf_options = {}) const {
        Evaluation ev;
        Injections inj;
        inj.p = Eigen::VectorXd::Zero(n_bus);
        inj.q = Eigen::VectorXd::Zero(n_bus);
        Eigen::VectorXd q_cons = Eigen::VectorXd::Zero(n_bus);
        for (int k = 0; k < n_gen; ++k) inj.p[gen_bus[static_cast<size_t>(k)]] += u[k];
        double load_at_slack_p = 0.0;
        for (int i = 0; i < n_load(); ++i) {
            const double p = grid->loads[static_cast<size_t>(i)].p_ref +
                             (deviation.size() ? deviation[i] : 0.0);
            const double q = gamma_load[i] * p;
            inj.p[load_bus[static_cast<size_t>(i)]] -= p;
            inj.q[load_bus[static_cast<size_t>(i)]] -= q;
            q_cons[load_bus[static_cast<size_t>(i)]] += q;
        }
        for (int j = 0; j < n_res(); ++j) {
            const double p = grid->renewables[static_cast<size_t>(j)].p_ref +
                             (deviation.size() ? deviation[n_load() + j] : 0.0);
            const double q = gamma_res[j] * p;
            inj.p[res_bus[static_cast<size_t>(j)]] += p;
            inj.q[res_bus[static_cast<size_t>(j)]] += q;
            q_cons[res_bus[static_cast<size_t>(j)]] -= q;
        }
        // Net load at the slack bus, to recover the machine output from the
        // realized net injection.
        const int slack_bus = gen_bus[static_cast<size_t>(slack_gen)];
        load_at_slack_p = -(inj.p[slack_bus] - u[slack_gen]);

        try {
            ev.sol = solve_ac_pf(*grid, inj, pf_options);
        } catch (const SingularJacobian&) {
            ev.ok = false;
            return ev;
        }
        if (!ev.sol.converged) {
            ev.ok = false;
            return ev;
        }
        ev.y = extract_outputs(*grid, ev.sol, layout, q_cons);
        ev.slack_gen_p = ev.sol.p[slack_bus] + load_at_slack_p;
        ev.ok = true;
        return ev;
    }
};

double dispatch_cost(const GridCase& grid, const Eigen::VectorXd& u_pu) {
    double cost = 0.0;
    for (size_t k = 0; k < grid.generators.size(); ++k) {
        const auto& gen = grid.generators[k];
        const double p_mw = u_pu[static_cast<Eigen::Index>(k)] * grid.base_mva;
        cost += gen.c2 * p_mw * p_mw + gen.c1 * p_mw + gen.c0;
    }
    return cost;
}

}  // namespace

AcOpfResult ac_opf(const GridCase& grid, const Eigen::VectorXd& deviation,
                   const AcOpfOptions& options) {
    const CaseView view(grid);
    const int n_gen = view.n_gen;
    const int n_free = n_gen - 1;  // slack output is determined by the network

    // Decision vector: dispatch of non-slack generators.
    std::vector<int> free_gens;
    for (int k = 0; k < n_gen; ++k) {
        if (k != view.slack_gen) free_gens.push_back(k);
    }

    auto expand = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(n_gen);
        for (int i = 0; i < n_free; ++i) u[free_gens[static_cast<size_t>(i)]] = x[i];
        u[view.slack_gen] = grid.generators[static_cast<size_t>(view.slack_gen)].p_ref;
        return u;
    };

    // Warm-started PF: reuse the previous voltage solution across evaluations.
    PfOptions pf_options;
    auto evaluate = [&](const Eigen::VectorXd& x) -> CaseView::Evaluation {
        CaseView::Evaluation ev = view.evaluate(expand(x), deviation, pf_options);
        if (ev.ok) {
            pf_options.v0 = ev.sol.v;
            pf_options.theta0 = ev.sol.theta;
        }
        return ev;
    };

    // Objective: total cost with the slack machine at its realized output.
    auto cost_of = [&](const Eigen::VectorXd& x) -> double {
        CaseView::Evaluation ev = evaluate(x);
        if (!ev.ok) return 1e12;
        Eigen::VectorXd u = expand(x);
        u[view.slack_gen] = ev.slack_gen_p;
        return dispatch_cost(grid, u);
    };
    // Constraints (>= 0): box on free gens, box on realized slack output,
    // output limits.
    const int n_y = view.layout.size();
    const int m = 2 * n_free + 2 + 2 * n_y;
    auto constraints_of = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        CaseView::Evaluation ev = evaluate(x);
        Eigen::VectorXd c(m);
        if (!ev.ok) {
            c.setConstant(-1.0);
            return c;
        }
        for (int i = 0; i < n_free; ++i) {
            const auto& gen = grid.generators[static_cast<size_t>(free_gens[static_cast<size_t>(i)])];
            c[2 * i] = x[i] - gen.p_min;
            c[2 * i + 1] = gen.p_max - x[i];
        }
        const auto& slack_gen = grid.generators[static_cast<size_t>(view.slack_gen)];
        c[2 * n_free] = ev.slack_gen_p - slack_gen.p_min;
        c[2 * n_free + 1] = slack_gen.p_max - ev.slack_gen_p;
        for (int i = 0; i < n_y; ++i) {
            const auto& e = view.layout.entries[static_cast<size_t>(i)];
            c[2 * n_free + 2 + 2 * i] = ev.y[i] - e.lower;
            c[2 * n_free + 2 + 2 * i + 1] = e.upper - ev.y[i];
        }
        return c;
    };

    Eigen::VectorXd x0(n_free);
    for (int i = 0; i < n_free; ++i) {
        x0[i] = options.u_init.size() == n_gen
                    ? options.u_init[free_gens[static_cast<size_t>(i)]]
                    : grid.generators[static_cast<size_t>(free_gens[static_cast<size_t>(i)])].p_ref;
    }

    AcOpfResult result;
    if (n_free == 0) {  // single generator at the slack bus
        CaseView::Evaluation ev = evaluate(x0);
        result.converged = ev.ok;
        result.u = Eigen::VectorXd::Zero(n_gen);
        if (ev.ok) {
            result.u[view.slack_gen] = ev.slack_gen_p;
            result.cost = dispatch_cost(grid, result.u);
        }
        return result;
    }

    NlpProblem nlp;
    nlp.n = n_free;
    nlp.objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) -> double {
        grad = fd_gradient(cost_of, x, 1e-6);
        return cost_of(x);
    };
    nlp.ineq = constraints_of;
    nlp.ineq_jacobian = [&](const Eigen::VectorXd& x) { return fd_jacobian(constraints_of, x, 1e-6); };

    NlpOptions nlp_options;
    nlp_options.tolerance = options.tolerance;
    nlp_options.feasibility_tolerance = 1e-8;
    nlp_options.max_outer_iterations = options.max_iterations;
    const NlpResult res = nlp_solve(nlp, x0, nlp_options);

    CaseView::Evaluation ev = evaluate(res.x);
    result.converged = res.status == NlpStatus::Converged && ev.ok;
    result.iterations = res.iterations;
    result.max_violation = res.max_violation;
    result.u = expand(res.x);
    if (ev.ok) result.u[view.slack_gen] = ev.slack_gen_p;
    result.cost = dispatch_cost(grid, result.u);
    return result;
}

FullRecourseResult full_recourse(const GridCase& grid, const ScenarioSet& scenarios,
                                 const AcOpfOptions& options) {
    FullRecourseResult result;
    const int count = static_cast<int>(scenarios.omega.rows());
    result.costs.assign(static_cast<size_t>(count), 0.0);
    std::vector<char> ok(static_cast<size_t>(count), 0);

    // Base solution shared as the warm start of every scenario solve.
    const AcOpfResult base = ac_opf(grid, Eigen::VectorXd(), options);
    AcOpfOptions warm = options;
    if (base.converged) warm.u_init = base.u;

    parallel_for(static_cast<size_t>(count), [&](size_t s) {
        const AcOpfResult r = ac_opf(grid, scenarios.omega.row(static_cast<Eigen::Index>(s)).transpose(), warm);
        ok[s] = r.converged ? 1 : 0;
        result.costs[s] = r.cost;
    });

    double sum = 0.0;
    int good = 0;
    for (int s = 0; s < count; ++s) {
        if (ok[static_cast<size_t>(s)]) {
            sum += result.costs[static_cast<size_t>(s)];
            ++good;
        } else {
            ++result.failures;
        }
    }
    result.mean_cost = good > 0 ? sum / good : 0.0;
    return result;
}

ScenarioCcOpfResult scenario_cc_opf(const GridCase& grid, const ScenarioSet& scenarios,
                                    const ScenarioCcOpfOptions& options) {
    const CaseView view(grid);
    const int n_gen = view.n_gen;
    const int S = static_cast<int>(scenarios.omega.rows());
    const int n_y = view.layout.size();
    FluctuationSpec spec;  // only omega_of is needed; signs from the case
    spec.sigma = Eigen::VectorXd::Zero(scenarios.omega.cols());
    spec.is_res.assign(static_cast<size_t>(scenarios.omega.cols()), false);
    for (int j = view.n_load(); j < view.n_load() + view.n_res(); ++j) {
        spec.is_res[static_cast<size_t>(j)] = true;
    }

    // Variables z = [u (non-slack); alpha (all gens)]; the slack machine
    // absorbs the residual per scenario and alpha_slack completes the
    // simplex implicitly through the recourse physics, but it is kept as an
    // explicit variable so the reported factors sum to one.
    std::vector<int> free_gens;
    for (int k = 0; k < n_gen; ++k) {
        if (k != view.slack_gen) free_gens.push_back(k);
    }
    const int n_free = static_cast<int>(free_gens.size());
    const int n_z = n_free + n_gen;

    auto expand_u = [&](const Eigen::VectorXd& z) {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(n_gen);
        for (int i = 0; i < n_free; ++i) u[free_gens[static_cast<size_t>(i)]] = z[i];
        u[view.slack_gen] = grid.generators[static_cast<size_t>(view.slack_gen)].p_ref;
        return u;
    };
    auto alpha_of = [&](const Eigen::VectorXd& z) {
        return Eigen::VectorXd(z.tail(n_gen));
    };

    std::vector<double> omegas(static_cast<size_t>(S));
    for (int s = 0; s < S; ++s) {
        omegas[static_cast<size_t>(s)] = spec.omega_of(scenarios.omega.row(s).transpose());
    }

    // Per-scenario constraint stack (>= 0): recourse box on PV gens,
    // realized slack box, output limits.
    const int per_scenario = 2 * n_free + 2 + 2 * n_y;
    const int m = S * per_scenario;

    PfOptions pf_options;
    auto scenario_constraints = [&](const Eigen::VectorXd& z, int s) -> Eigen::VectorXd {
        const Eigen::VectorXd alpha = alpha_of(z);
        const double omega = omegas[static_cast<size_t>(s)];
        Eigen::VectorXd u = expand_u(z);
        Eigen::VectorXd u_rec = u + alpha * omega;
        const CaseView::Evaluation ev =
            view.evaluate(u_rec, scenarios.omega.row(s).transpose(), pf_options);
        Eigen::VectorXd c(per_scenario);
        if (!ev.ok) {
            c.setConstant(-1.0);
            return c;
        }
        for (int i = 0; i < n_free; ++i) {
            const auto& gen =
                grid.generators[static_cast<size_t>(free_gens[static_cast<size_t>(i)])];
            c[2 * i] = u_rec[free_gens[static_cast<size_t>(i)]] - gen.p_min;
            c[2 * i + 1] = gen.p_max - u_rec[free_gens[static_cast<size_t>(i)]];
        }
        const auto& slack_gen = grid.generators[static_cast<size_t>(view.slack_gen)];
        c[2 * n_free] = ev.slack_gen_p - slack_gen.p_min;
        c[2 * n_free + 1] = slack_gen.p_max - ev.slack_gen_p;
        for (int i = 0; i < n_y; ++i) {
            const auto& e = view.layout.entries[static_cast<size_t>(i)];
            c[2 * n_free + 2 + 2 * i] = ev.y[i] - e.lower;
            c[2 * n_free + 2 + 2 * i + 1] = e.upper - ev.y[i];
        }
        return c;
    };
    auto all_constraints = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        Eigen::VectorXd c(m);
        for (int s = 0; s < S; ++s) c.segment(s * per_scenario, per_scenario) =
            scenario_constraints(z, s);
        return c;
    };

    const double trace_w_mw = [&] {
        const FluctuationSpec fs = FluctuationSpec::from_case(grid);
        return fs.sigma.array().square().sum() * grid.base_mva * grid.base_mva;
    }();
    // Expected cost with the alpha recourse term. The slack machine's base
    // output enters through `slack_base`, linearized around the incumbent
    // between major iterations (a unit of free dispatch displaces a unit of
    // slack output, losses aside).
    auto cost_model = [&](const Eigen::VectorXd& z, double slack_base,
                          const Eigen::VectorXd& z_ref) -> double {
        Eigen::VectorXd u = expand_u(z);
        u[view.slack_gen] = slack_base - (z.head(n_free) - z_ref.head(n_free)).sum();
        const Eigen::VectorXd alpha = alpha_of(z);
        double cost = dispatch_cost(grid, u);
        for (int k = 0; k < n_gen; ++k) {
            cost += grid.generators[static_cast<size_t>(k)].c2 * trace_w_mw * alpha[k] * alpha[k];
        }
        return cost;
    };
    auto cost_true = [&](const Eigen::VectorXd& z, double* slack_out = nullptr) -> double {
        const CaseView::Evaluation ev = view.evaluate(expand_u(z), Eigen::VectorXd(), pf_options);
        const double slack_base =
            ev.ok ? ev.slack_gen_p : grid.generators[static_cast<size_t>(view.slack_gen)].p_ref;
        if (slack_out) *slack_out = slack_base;
        return cost_model(z, slack_base, z);
    };

    // Initial point: base-case OPF dispatch, uniform participation.
    Eigen::VectorXd z(n_z);
    {
        const AcOpfResult base = ac_opf(grid);
        for (int i = 0; i < n_free; ++i) z[i] = base.u[free_gens[static_cast<size_t>(i)]];
        z.tail(n_gen).setConstant(1.0 / n_gen);
    }

    ScenarioCcOpfResult result;
    double trust = 0.1;  // step bound in p.u.
    double best_merit = std::numeric_limits<double>::infinity();
    Eigen::VectorXd c_now = all_constraints(z);
    double viol_now = std::max(0.0, (-c_now).maxCoeff());
    double slack_now = 0.0;
    double cost_now = cost_true(z, &slack_now);

    for (int major = 0; major < options.max_major_iterations; ++major) {
        result.iterations = major + 1;

        // Finite-difference sensitivities of every scenario stack around z.
        const Eigen::MatrixXd J = fd_jacobian(all_constraints, z, 1e-5);

        // Trust-region QP: quadratic cost model, linearized constraints,
        // simplex conditions on alpha, |dz| <= trust.
        const Eigen::VectorXd z_ref = z;
        const double slack_ref = slack_now;
        NlpProblem qp;
        qp.n = n_z;
        qp.objective = [&, z_ref, slack_ref](const Eigen::VectorXd& dz,
                                             Eigen::VectorXd& grad) -> double {
            const Eigen::VectorXd zt = z_ref + dz;
            const double f = cost_model(zt, slack_ref, z_ref);
            grad = fd_gradient(
                [&](const Eigen::VectorXd& d) { return cost_model(z_ref + d, slack_ref, z_ref); },
                dz, 1e-7);
            return f;
        };
        qp.eq = [&](const Eigen::VectorXd& dz) -> Eigen::VectorXd {
            Eigen::VectorXd c(1);
            c[0] = (z + dz).tail(n_gen).sum() - 1.0;
            return c;
        };
        Eigen::MatrixXd eq_jac = Eigen::MatrixXd::Zero(1, n_z);
        eq_jac.row(0).tail(n_gen).setOnes();
        qp.eq_jacobian = [eq_jac](const Eigen::VectorXd&) { return eq_jac; };
        qp.ineq = [&](const Eigen::VectorXd& dz) -> Eigen::VectorXd {
            Eigen::VectorXd c(m + n_gen + 2 * n_z);
            c.head(m) = c_now + J * dz;
            c.segment(m, n_gen) = (z + dz).tail(n_gen);  // alpha >= 0
            c.segment(m + n_gen, n_z) = dz.array() + trust;
            c.tail(n_z) = trust - dz.array();
            return c;
        };
        qp.ineq_jacobian = [&](const Eigen::VectorXd&) -> Eigen::MatrixXd {
            Eigen::MatrixXd Jq = Eigen::MatrixXd::Zero(m + n_gen + 2 * n_z, n_z);
            Jq.topRows(m) = J;
            Jq.block(m, n_free, n_gen, n_gen).setIdentity();
            Jq.block(m + n_gen, 0, n_z, n_z).setIdentity();
            Jq.bottomRows(n_z) = -Eigen::MatrixXd::Identity(n_z, n_z);
            return Jq;
        };

        NlpOptions qp_options;
        qp_options.tolerance = 1e-7;
        qp_options.feasibility_tolerance = 1e-9;
        qp_options.max_outer_iterations = 40;
        const NlpResult step = nlp_solve(qp, Eigen::VectorXd::Zero(n_z), qp_options);

        const Eigen::VectorXd z_try = z + step.x;
        const Eigen::VectorXd c_try = all_constraints(z_try);
        const double viol_try = std::max(0.0, (-c_try).maxCoeff());
        double slack_try = 0.0;
        const double cost_try = cost_true(z_try, &slack_try);

        // Merit filter: require progress in violation or in cost at no
        // violation expense.
        const double merit_try = cost_try + 1e4 * grid.base_mva * viol_try;
        const bool accept = merit_try <= best_merit + 1e-9;
        if (accept) {
            best_merit = merit_try;
            const double step_norm = step.x.cwiseAbs().maxCoeff();
            z = z_try;
            c_now = c_try;
            viol_now = viol_try;
            cost_now = cost_try;
            slack_now = slack_try;
            if (step_norm >= 0.9 * trust) trust = std::min(1.0, 2.0 * trust);
            if (viol_now <= options.tolerance && step_norm <= 1e-7) {
                result.converged = true;
                break;
            }
        } else {
            trust *= 0.5;
            if (trust < 1e-8) break;
        }
        if (viol_now <= 1e-10 && trust < 1e-6) {
            result.converged = true;
            break;
        }
    }

    if (viol_now <= 10 * options.tolerance) result.converged = true;
    result.u = expand_u(z);
    // Report the realized base slack output as the nominal slack dispatch.
    const CaseView::Evaluation base_ev = view.evaluate(result.u, Eigen::VectorXd(), pf_options);
    if (base_ev.ok) result.u[view.slack_gen] = base_ev.slack_gen_p;
    result.alpha = alpha_of(z);
    result.cost = cost_now;
    if (!result.converged) {
        std::ostringstream diag;
        diag << "max violation " << viol_now << " after " << result.iterations << " majors";
        result.diagnostics = diag.str();
    }
    return result;
}

ValidationReport mc_validate(const GridCase& grid, const Eigen::VectorXd& u,
                             const Eigen::VectorXd& alpha, const FluctuationSpec& spec,
                             int samples, std::uint64_t seed, const OutputSpec& output_spec) {
    const CaseView view(grid, output_spec);
    const int n_y = view.layout.size();
    const int n_d = static_cast<int>(spec.sigma.size());

    ValidationReport report;
    report.samples = samples;
    report.seed = seed;
    for (const auto& e : view.layout.entries) report.names.push_back(e.label);

    {
        const CaseView::Evaluation base = view.evaluate(u, Eigen::VectorXd());
        if (!base.ok) throw ValidationError("mc_validate: base dispatch does not solve");
        report.y_base = base.y;
    }

    Eigen::MatrixXd Y(samples, n_y);
    std::vector<char> ok(static_cast<size_t>(samples), 0);
    std::vector<char> violated(static_cast<size_t>(samples), 0);
    std::vector<char> input_violated(static_cast<size_t>(samples), 0);

    parallel_for(static_cast<size_t>(samples), [&](size_t s) {
        Rng rng = Rng::derive(seed, s);
        Eigen::VectorXd w(n_d);
        for (int j = 0; j < n_d; ++j) w[j] = rng.normal(0.0, spec.sigma[j]);
        const double omega = spec.omega_of(w);
        const Eigen::VectorXd u_rec = u + alpha * omega;
        const CaseView::Evaluation ev = view.evaluate(u_rec, w);
        if (!ev.ok) return;
        ok[s] = 1;
        Y.row(static_cast<Eigen::Index>(s)) = ev.y;

        bool any = false;
        for (int i = 0; i < n_y; ++i) {
            const auto& e = view.layout.entries[static_cast<size_t>(i)];
            if (ev.y[i] < e.lower - 1e-12 || ev.y[i] > e.upper + 1e-12) any = true;
        }
        violated[s] = any ? 1 : 0;

        bool input_any = false;
        for (int k = 0; k < view.n_gen; ++k) {
            const auto& gen = grid.generators[static_cast<size_t>(k)];
            const double realized = (k == view.slack_gen) ? ev.slack_gen_p : u_rec[k];
            if (realized < gen.p_min - 1e-9 || realized > gen.p_max + 1e-9) input_any = true;
        }
        input_violated[s] = input_any ? 1 : 0;
    });

    int good = 0, joint = 0, input_joint = 0;
    std::vector<int> rows;
    for (int s = 0; s < samples; ++s) {
        if (!ok[static_cast<size_t>(s)]) continue;
        ++good;
        rows.push_back(s);
        joint += violated[static_cast<size_t>(s)];
        input_joint += input_violated[static_cast<size_t>(s)];
    }
    report.pf_failure_rate = 1.0 - static_cast<double>(good) / samples;
    if (report.pf_failure_rate > 0.05) {
        throw TooManyFailures("mc_validate: " + std::to_string(samples - good) + " of " +
                              std::to_string(samples) + " samples diverged");
    }
    report.joint_violation = static_cast<double>(joint) / good;
    report.input_violation = static_cast<double>(input_joint) / good;

    report.emp_mean.resize(n_y);
    report.emp_std.resize(n_y);
    report.emp_q_low.resize(n_y);
    report.emp_q_high.resize(n_y);
    report.violation_rate.resize(n_y);
    std::vector<double> column(rows.size());
    for (int i = 0; i < n_y; ++i) {
        for (size_t r = 0; r < rows.size(); ++r) {
            column[r] = Y(rows[r], i);
        }
        const double mean = std::accumulate(column.begin(), column.end(), 0.0) / good;
        double var = 0.0;
        int viol = 0;
        const auto& e = view.layout.entries[static_cast<size_t>(i)];
        for (double v : column) {
            var += (v - mean) * (v - mean);
            if (v < e.lower - 1e-12 || v > e.upper + 1e-12) ++viol;
        }
        var /= std::max(1, good - 1);
        report.emp_mean[i] = mean;
        report.emp_std[i] = std::sqrt(var);
        report.violation_rate[i] = static_cast<double>(viol) / good;

        std::sort(column.begin(), column.end());
        auto quantile = [&](double p) {
            const double idx = p * (static_cast<double>(column.size()) - 1.0);
            const size_t lo = static_cast<size_t>(std::floor(idx));
            const size_t hi = std::min(column.size() - 1, lo + 1);
            const double frac = idx - static_cast<double>(lo);
            return column[lo] * (1.0 - frac) + column[hi] * frac;
        };
        report.emp_q_low[i] = quantile(0.0027);
        report.emp_q_high[i] = quantile(0.9973);
    }
    return report;
}

RmseReport rmse_report(const MultiGpModel& model, const Eigen::MatrixXd& X,
                       const Eigen::MatrixXd& Y) {
    if (X.rows() != Y.rows()) throw ValidationError("rmse_report: row mismatch");
    if (Y.cols() != model.n_outputs()) throw ValidationError("rmse_report: output mismatch");
    RmseReport report;
    report.per_output = Eigen::VectorXd::Zero(Y.cols());
    Eigen::VectorXd mean, var;
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        model.predict(X.row(r).transpose(), mean, var);
        report.per_output.array() += (mean - Y.row(r).transpose()).array().square();
    }
    report.per_output = (report.per_output / static_cast<double>(X.rows())).cwiseSqrt();
    report.average = report.per_output.mean();
    return report;
}

}  // namespace gpcc
