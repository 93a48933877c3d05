#include "gpcc/cli.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gpcc/baselines.hpp"
#include "gpcc/errors.hpp"
#include "gpcc/io.hpp"
#include "gpcc/quantile.hpp"

namespace gpcc {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

double elapsed_s(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

LogNormalSpec lognormal_from(const json& j, const LogNormalSpec& fallback) {
    LogNormalSpec spec = fallback;
    if (j.contains("mu")) spec.mu = j.at("mu").get<double>();
    if (j.contains("sigma")) spec.sigma = j.at("sigma").get<double>();
    return spec;
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ParseError("config: " + std::string(e.what()));
    }
    RunConfig config;
    config.case_path = doc.value("case", "");
    config.out_dir = doc.value("out_dir", "out");
    if (doc.contains("sampling")) {
        const json& s = doc.at("sampling");
        config.sampling.load_corr = lognormal_from(s.value("load_corr", json::object()),
                                                   config.sampling.load_corr);
        config.sampling.load_uncorr = lognormal_from(s.value("load_uncorr", json::object()),
                                                     config.sampling.load_uncorr);
        config.sampling.res_corr =
            lognormal_from(s.value("res_corr", json::object()), config.sampling.res_corr);
        config.sampling.res_uncorr = lognormal_from(s.value("res_uncorr", json::object()),
                                                    config.sampling.res_uncorr);
        if (s.contains("psi")) {
            config.sampling.psi_lo = s.at("psi").at(0).get<double>();
            config.sampling.psi_hi = s.at("psi").at(1).get<double>();
        }
        config.sampling.noise_sigma = s.value("noise_sigma", config.sampling.noise_sigma);
        config.sampling.seed = s.value("seed", config.sampling.seed);
    }
    if (doc.contains("dataset")) config.dataset_rows = doc.at("dataset").value("n", 100);
    if (doc.contains("train")) {
        const json& t = doc.at("train");
        config.n_train = t.value("n_train", config.n_train);
        config.n_val = t.value("n_val", config.n_val);
        config.restarts = t.value("restarts", config.restarts);
        config.max_evaluations = t.value("max_evals", config.max_evaluations);
        config.train_seed = t.value("seed", config.train_seed);
    }
    if (doc.contains("ccopf")) {
        const json& c = doc.at("ccopf");
        config.ccopf.eps_u = c.value("eps_u", config.ccopf.eps_u);
        config.ccopf.eps_y = c.value("eps_y", config.ccopf.eps_y);
        config.ccopf.sigma_mult_load = c.value("sigma_mult_load", config.ccopf.sigma_mult_load);
        config.ccopf.sigma_mult_res = c.value("sigma_mult_res", config.ccopf.sigma_mult_res);
        if (c.contains("method")) config.ccopf.method = propagation_from(c.at("method"));
        config.ccopf.balance_no_losses =
            c.value("balance_no_losses", config.ccopf.balance_no_losses);
        config.solver_tolerance = c.value("tol", config.solver_tolerance);
        config.solver_max_iterations = c.value("max_iter", config.solver_max_iterations);
    }
    if (doc.contains("validate")) {
        const json& v = doc.at("validate");
        config.validate_samples = v.value("samples", config.validate_samples);
        config.validate_seed = v.value("seed", config.validate_seed);
    }
    if (doc.contains("compare")) {
        const json& c = doc.at("compare");
        if (c.contains("scenario_counts")) {
            config.scenario_counts = c.at("scenario_counts").get<std::vector<int>>();
        }
        if (c.contains("scenario_seeds")) {
            config.scenario_seeds = c.at("scenario_seeds").get<std::vector<std::uint64_t>>();
        }
    }
    config.check();
    return config;
}

std::string RunConfig::serialize() const {
    ordered_json doc;
    doc["case"] = case_path;
    doc["out_dir"] = out_dir;
    doc["sampling"] = {
        {"load_corr", {{"mu", sampling.load_corr.mu}, {"sigma", sampling.load_corr.sigma}}},
        {"load_uncorr", {{"mu", sampling.load_uncorr.mu}, {"sigma", sampling.load_uncorr.sigma}}},
        {"res_corr", {{"mu", sampling.res_corr.mu}, {"sigma", sampling.res_corr.sigma}}},
        {"res_uncorr", {{"mu", sampling.res_uncorr.mu}, {"sigma", sampling.res_uncorr.sigma}}},
        {"psi", {sampling.psi_lo, sampling.psi_hi}},
        {"noise_sigma", sampling.noise_sigma},
        {"seed", sampling.seed}};
    doc["dataset"] = {{"n", dataset_rows}};
    doc["train"] = {{"n_train", n_train},
                    {"n_val", n_val},
                    {"restarts", restarts},
                    {"max_evals", max_evaluations},
                    {"seed", train_seed}};
    doc["ccopf"] = {{"eps_u", ccopf.eps_u},
                    {"eps_y", ccopf.eps_y},
                    {"sigma_mult_load", ccopf.sigma_mult_load},
                    {"sigma_mult_res", ccopf.sigma_mult_res},
                    {"method", to_string(ccopf.method)},
                    {"balance_no_losses", ccopf.balance_no_losses},
                    {"tol", solver_tolerance},
                    {"max_iter", solver_max_iterations}};
    doc["validate"] = {{"samples", validate_samples}, {"seed", validate_seed}};
    doc["compare"] = {{"scenario_counts", scenario_counts}, {"scenario_seeds", scenario_seeds}};
    return doc.dump(2) + "\n";
}

void RunConfig::check() const {
    if (case_path.empty()) throw ValidationError("config: case path is required");
    if (!(ccopf.eps_u > 0.0 && ccopf.eps_u < 0.5 && ccopf.eps_y > 0.0 && ccopf.eps_y < 0.5)) {
        throw ValidationError("config: eps values must lie in (0, 0.5)");
    }
    if (n_train < 2 || n_val < 1) throw ValidationError("config: invalid train/val sizes");
    sampling.check();
}

namespace {

void prepare_out_dir(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    write_text_file(config.out_dir + "/effective_config.json", config.serialize());
}

std::string out_path(const RunConfig& config, const std::string& name) {
    return config.out_dir + "/" + name;
}

struct LoadedArtifacts {
    GridCase grid;
    MultiGpModel model;
    OutputLayout layout;
};

LoadedArtifacts load_case_and_model(const RunConfig& config) {
    LoadedArtifacts art;
    art.grid = load_case(config.case_path);
    art.model = load_multi_gp(out_path(config, "model.json"));
    art.layout = build_output_layout(art.grid, OutputSpec::defaults());
    if (art.layout.size() != art.model.n_outputs()) {
        throw SpecMismatch("model outputs do not match the case output layout");
    }
    return art;
}

// Mirrors the sample stream of mc_validate so reports can also query the
// surrogate at the exact sampled inputs.
Eigen::MatrixXd draw_fluctuations(const FluctuationSpec& spec, int samples,
                                  std::uint64_t seed) {
    Eigen::MatrixXd W(samples, spec.sigma.size());
    for (int s = 0; s < samples; ++s) {
        Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(s));
        for (Eigen::Index j = 0; j < spec.sigma.size(); ++j) {
            W(s, j) = rng.normal(0.0, spec.sigma[j]);
        }
    }
    return W;
}

struct SolutionFile {
    Eigen::VectorXd u, alpha, mu_y;
    std::string method;
    double cost = 0.0;
    std::string status;
};

SolutionFile read_solution(const std::string& path) {
    const json doc = json::parse(read_text_file(path));
    SolutionFile sf;
    sf.method = doc.value("method", "ta1");
    sf.cost = doc.value("cost", 0.0);
    sf.status = doc.value("status", "");
    const auto& gens = doc.at("generators");
    sf.u.resize(static_cast<Eigen::Index>(gens.size()));
    sf.alpha.resize(static_cast<Eigen::Index>(gens.size()));
    for (size_t k = 0; k < gens.size(); ++k) {
        sf.u[static_cast<Eigen::Index>(k)] = gens[k].at("u_pu").get<double>();
        sf.alpha[static_cast<Eigen::Index>(k)] = gens[k].at("alpha").get<double>();
    }
    const auto& outputs = doc.at("outputs");
    sf.mu_y.resize(static_cast<Eigen::Index>(outputs.size()));
    for (size_t i = 0; i < outputs.size(); ++i) {
        sf.mu_y[static_cast<Eigen::Index>(i)] = outputs[i].at("mu").get<double>();
    }
    return sf;
}

}  // namespace

int cmd_gen_data(const RunConfig& config) {
    prepare_out_dir(config);
    const GridCase grid = load_case(config.case_path);
    const auto start = std::chrono::steady_clock::now();
    const Dataset ds = build_dataset(grid, config.sampling, config.dataset_rows,
                                     OutputSpec::defaults());
    save_dataset(ds, out_path(config, "dataset.csv"));
    std::cout << "dataset: " << ds.rows() << " rows, " << ds.X.cols() << " inputs, "
              << ds.Y.cols() << " outputs\n"
              << "dropped (diverged) draws resampled: " << ds.dropped_rows << "\n"
              << "wall time: " << elapsed_s(start) << " s\n";
    return 0;
}

int cmd_train(const RunConfig& config) {
    prepare_out_dir(config);
    const GridCase grid = load_case(config.case_path);
    const Dataset ds = load_dataset(out_path(config, "dataset.csv"));
    if (ds.case_fingerprint != grid.fingerprint()) {
        throw ValidationError("train: dataset was generated from a different case");
    }
    if (ds.rows() < config.n_train + config.n_val) {
        throw ValidationError("train: dataset smaller than n_train + n_val");
    }
    const auto start = std::chrono::steady_clock::now();

    FitOptions fit_options;
    fit_options.restarts = config.restarts;
    fit_options.max_evaluations = config.max_evaluations;
    fit_options.seed = config.train_seed;

    const Eigen::MatrixXd X_train = ds.X.topRows(config.n_train);
    const Eigen::MatrixXd Y_train = ds.Y.topRows(config.n_train);
    MultiGpModel model = fit_multi_gp(X_train, Y_train, ds.x_names, ds.y_names, fit_options);
    model.training_fingerprint = ds.fingerprint() + ":rows0-" + std::to_string(config.n_train);
    save_multi_gp(model, out_path(config, "model.json"));

    const Eigen::MatrixXd X_val = ds.X.bottomRows(config.n_val);
    const Eigen::MatrixXd Y_val = ds.Y.bottomRows(config.n_val);
    const RmseReport report = rmse_report(model, X_val, Y_val);

    std::ostringstream csv;
    csv << "output,rmse\n";
    for (int a = 0; a < report.per_output.size(); ++a) {
        csv << ds.y_names[static_cast<size_t>(a)] << ',' << fmt_double(report.per_output[a])
            << '\n';
    }
    csv << "average," << fmt_double(report.average) << '\n';
    write_text_file(out_path(config, "rmse.csv"), csv.str());

    std::cout << "trained " << model.n_outputs() << " outputs on " << config.n_train
              << " samples; validation avg RMSE = " << report.average << " p.u.\n"
              << "wall time: " << elapsed_s(start) << " s\n";
    return 0;
}

int cmd_solve(const RunConfig& config) {
    prepare_out_dir(config);
    const LoadedArtifacts art = load_case_and_model(config);
    const CcOpfProblem problem =
        make_ccopf_problem(art.grid, art.model, art.layout, config.ccopf);

    CcOpfSolveOptions options;
    options.tolerance = config.solver_tolerance;
    options.max_iterations = config.solver_max_iterations;
    Eigen::VectorXd u0(art.grid.generators.size());
    for (size_t k = 0; k < art.grid.generators.size(); ++k) {
        u0[static_cast<Eigen::Index>(k)] = art.grid.generators[k].p_ref;
    }
    const double target = problem.rho_balance * problem.p_load0.sum() - problem.p_res0.sum();
    if (std::abs(u0.sum()) > 1e-12) u0 *= target / u0.sum();
    options.u_init = u0;

    const auto start = std::chrono::steady_clock::now();
    const CcOpfSolution sol = solve_ccopf(problem, options);
    const double seconds = elapsed_s(start);

    const std::string tag = to_string(problem.method);
    std::vector<std::string> gen_names;
    for (size_t k = 0; k < art.grid.generators.size(); ++k) {
        gen_names.push_back("gen" + std::to_string(k + 1) + "@bus" +
                            std::to_string(art.grid.generators[k].bus));
    }
    write_text_file(out_path(config, "solution_" + tag + ".json"),
                    serialize_solution(sol, gen_names, problem.y_names, art.grid.base_mva));

    std::ostringstream log;
    log << "iteration,cost,max_violation,step_norm\n";
    for (const auto& row : sol.trace) {
        log << static_cast<int>(row[0]) << ',' << fmt_double(row[1]) << ','
            << fmt_double(row[2]) << ',' << fmt_double(row[3]) << '\n';
    }
    write_text_file(out_path(config, "iterations_" + tag + ".csv"), log.str());

    const char* status = sol.status == CcOpfStatus::Converged
                             ? "converged"
                             : (sol.status == CcOpfStatus::Infeasible ? "infeasible"
                                                                      : "max_iterations");
    std::cout << "cc-opf (" << tag << "): " << status << " in " << sol.iterations
              << " iterations, cost " << sol.cost << ", max violation " << sol.max_violation
              << "\nwall time: " << seconds << " s\n";
    if (sol.status == CcOpfStatus::Infeasible) {
        std::cerr << sol.diagnostics << "\n";
        return 1;
    }
    return sol.status == CcOpfStatus::Converged ? 0 : 1;
}

int cmd_validate(const RunConfig& config) {
    prepare_out_dir(config);
    const LoadedArtifacts art = load_case_and_model(config);
    const std::string tag = to_string(config.ccopf.method);
    const SolutionFile sf = read_solution(out_path(config, "solution_" + tag + ".json"));

    const FluctuationSpec spec = FluctuationSpec::from_case(
        art.grid, config.ccopf.sigma_mult_load, config.ccopf.sigma_mult_res);
    const ValidationReport report =
        mc_validate(art.grid, sf.u, sf.alpha, spec, config.validate_samples,
                    config.validate_seed);

    // Surrogate-side empirical spread and analytic margins per method at
    // the same dispatch.
    const Eigen::MatrixXd W = draw_fluctuations(spec, config.validate_samples,
                                                config.validate_seed);
    const int n_y = static_cast<int>(report.names.size());
    Eigen::MatrixXd gp_pred(config.validate_samples, n_y);
    const int n_u = static_cast<int>(sf.u.size());
    for (int s = 0; s < config.validate_samples; ++s) {
        const double omega = spec.omega_of(W.row(s).transpose());
        Eigen::VectorXd x(art.model.n_inputs());
        x.head(n_u) = sf.u + sf.alpha * omega;
        for (size_t i = 0; i < art.grid.loads.size(); ++i) {
            x[n_u + static_cast<int>(i)] =
                art.grid.loads[i].p_ref + W(s, static_cast<Eigen::Index>(i));
        }
        for (size_t j = 0; j < art.grid.renewables.size(); ++j) {
            x[n_u + static_cast<int>(art.grid.loads.size() + j)] =
                art.grid.renewables[j].p_ref +
                W(s, static_cast<Eigen::Index>(art.grid.loads.size() + j));
        }
        Eigen::VectorXd mean, var;
        art.model.predict(x, mean, var);
        gp_pred.row(s) = mean.transpose();
    }

    // Analytic moments for all three methods at the solution.
    CcOpfProblem problem = make_ccopf_problem(art.grid, art.model, art.layout, config.ccopf);
    Eigen::MatrixXd analytic_mu(3, n_y), analytic_sigma(3, n_y);
    const Propagation methods[3] = {Propagation::Ta1, Propagation::Ta2, Propagation::Em};
    for (int mi = 0; mi < 3; ++mi) {
        problem.method = methods[mi];
        const ConstraintEval eval = evaluate_constraints(problem, sf.u, sf.alpha);
        analytic_mu.row(mi) = eval.mu_y.transpose();
        analytic_sigma.row(mi) = eval.sigma_y.transpose();
    }

    std::ostringstream csv;
    csv << "variable,y_base,emp_mean,emp_std,emp_q0027,emp_q9973,gp_q0027,gp_q9973";
    for (const char* m : {"ta1", "ta2", "em"}) {
        csv << ',' << m << "_lo3std," << m << "_hi3std";
    }
    csv << ",violation_rate\n";
    std::vector<double> column(static_cast<size_t>(config.validate_samples));
    for (int i = 0; i < n_y; ++i) {
        for (int s = 0; s < config.validate_samples; ++s) {
            column[static_cast<size_t>(s)] = gp_pred(s, i);
        }
        std::sort(column.begin(), column.end());
        auto quantile = [&](double p) {
            const double idx = p * (static_cast<double>(column.size()) - 1.0);
            const size_t lo = static_cast<size_t>(idx);
            const size_t hi = std::min(column.size() - 1, lo + 1);
            return column[lo] + (column[hi] - column[lo]) * (idx - static_cast<double>(lo));
        };
        csv << report.names[static_cast<size_t>(i)] << ',' << fmt_double(report.y_base[i]) << ','
            << fmt_double(report.emp_mean[i]) << ',' << fmt_double(report.emp_std[i]) << ','
            << fmt_double(report.emp_q_low[i]) << ',' << fmt_double(report.emp_q_high[i]) << ','
            << fmt_double(quantile(0.0027)) << ',' << fmt_double(quantile(0.9973));
        for (int mi = 0; mi < 3; ++mi) {
            csv << ',' << fmt_double(analytic_mu(mi, i) - 3.0 * analytic_sigma(mi, i)) << ','
                << fmt_double(analytic_mu(mi, i) + 3.0 * analytic_sigma(mi, i));
        }
        csv << ',' << fmt_double(report.violation_rate[i]) << '\n';
    }
    write_text_file(out_path(config, "validation_" + tag + ".csv"), csv.str());

    // Prediction mean RMSE: distance between the solution's predicted means
    // and the empirical AC-PF means.
    const double mean_rmse =
        std::sqrt((sf.mu_y - report.emp_mean).squaredNorm() / n_y);

    ordered_json summary;
    summary["method"] = tag;
    summary["samples"] = report.samples;
    summary["seed"] = report.seed;
    summary["joint_violation"] = report.joint_violation;
    summary["input_violation"] = report.input_violation;
    summary["pf_failure_rate"] = report.pf_failure_rate;
    summary["prediction_mean_rmse"] = mean_rmse;
    summary["cost"] = sf.cost;
    write_text_file(out_path(config, "validation_" + tag + ".json"), summary.dump(2) + "\n");

    std::cout << "mc validation (" << tag << "): joint violation "
              << 100.0 * report.joint_violation << "%, input violation "
              << 100.0 * report.input_violation << "%, prediction mean-RMSE " << mean_rmse
              << " p.u.\n";
    return 0;
}

int cmd_compare(const RunConfig& config) {
    prepare_out_dir(config);
    const LoadedArtifacts art = load_case_and_model(config);
    const std::string tag = to_string(config.ccopf.method);
    const SolutionFile sf = read_solution(out_path(config, "solution_" + tag + ".json"));
    const FluctuationSpec spec = FluctuationSpec::from_case(
        art.grid, config.ccopf.sigma_mult_load, config.ccopf.sigma_mult_res);
    const int n_gen = static_cast<int>(art.grid.generators.size());
    int failures = 0;

    std::ostringstream csv;
    csv << "method,cost,joint_violation_pct,input_violation_pct\n";

    {  // GP CC-OPF
        const auto start = std::chrono::steady_clock::now();
        const ValidationReport r = mc_validate(art.grid, sf.u, sf.alpha, spec,
                                               config.validate_samples, config.validate_seed);
        std::cout << "gp_ccopf: cost " << sf.cost << ", violation "
                  << 100.0 * r.joint_violation << "% (" << elapsed_s(start) << " s)\n";
        csv << "gp_ccopf_" << tag << ',' << fmt_double(sf.cost) << ','
            << fmt_double(100.0 * r.joint_violation) << ','
            << fmt_double(100.0 * r.input_violation) << '\n';
    }

    {  // Baseline B: base-case AC-OPF, equal participation for validation.
        const auto start = std::chrono::steady_clock::now();
        const AcOpfResult base = ac_opf(art.grid);
        if (!base.converged) {
            std::cerr << "baseline B failed to converge\n";
            ++failures;
        }
        const Eigen::VectorXd alpha_eq =
            Eigen::VectorXd::Constant(n_gen, 1.0 / static_cast<double>(n_gen));
        const ValidationReport r = mc_validate(art.grid, base.u, alpha_eq, spec,
                                               config.validate_samples, config.validate_seed);
        std::cout << "base_case: cost " << base.cost << ", violation "
                  << 100.0 * r.joint_violation << "% (" << elapsed_s(start) << " s)\n";
        csv << "base_case," << fmt_double(base.cost) << ','
            << fmt_double(100.0 * r.joint_violation) << ','
            << fmt_double(100.0 * r.input_violation) << '\n';
    }

    {  // Baseline A: full recourse over the validation scenarios.
        const auto start = std::chrono::steady_clock::now();
        const ScenarioSet scenarios =
            ScenarioSet::draw(spec, config.validate_samples, config.validate_seed);
        const FullRecourseResult r = full_recourse(art.grid, scenarios);
        if (r.failures > 0) {
            std::cerr << "full recourse: " << r.failures << " scenario solves failed\n";
            if (r.failures > config.validate_samples / 10) ++failures;
        }
        std::cout << "full_recourse: mean cost " << r.mean_cost << " (" << elapsed_s(start)
                  << " s)\n";
        csv << "full_recourse," << fmt_double(r.mean_cost) << ",,\n";
    }

    for (size_t si = 0; si < config.scenario_counts.size(); ++si) {
        const int S = config.scenario_counts[si];
        const auto start = std::chrono::steady_clock::now();
        const std::uint64_t seed =
            config.scenario_seeds[si % config.scenario_seeds.size()];
        const ScenarioSet scenarios = ScenarioSet::draw(spec, S, seed);
        const ScenarioCcOpfResult r = scenario_cc_opf(art.grid, scenarios);
        if (!r.converged) {
            std::cerr << "scenario cc-opf S=" << S << ": " << r.diagnostics << "\n";
            ++failures;
        }
        const ValidationReport v = mc_validate(art.grid, r.u, r.alpha, spec,
                                               config.validate_samples, config.validate_seed);
        std::cout << "scenario_" << S << ": cost " << r.cost << ", violation "
                  << 100.0 * v.joint_violation << "% (" << elapsed_s(start) << " s)\n";
        csv << "scenario_" << S << ',' << fmt_double(r.cost) << ','
            << fmt_double(100.0 * v.joint_violation) << ','
            << fmt_double(100.0 * v.input_violation) << '\n';
    }

    write_text_file(out_path(config, "comparison.csv"), csv.str());
    return failures == 0 ? 0 : 1;
}

int cmd_convert_case(const std::string& input_path, const std::string& output_path) {
    const GridCase grid = load_case(input_path);
    write_text_file(output_path, serialize_native_case(grid));
    std::cout << "wrote " << output_path << ": " << grid.buses.size() << " buses, "
              << grid.lines.size() << " lines, " << grid.generators.size() << " generators, "
              << grid.loads.size() << " loads, " << grid.renewables.size()
              << " renewables, loss factor " << grid.loss_factor << "\n";
    return 0;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Gaussian-process chance-constrained AC-OPF toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string case_override, out_override, method_override;
    std::int64_t seed_override = -1;
    int n_override = -1, samples_override = -1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON run configuration")->required();
        cmd->add_option("--case", case_override, "case file (overrides config)");
        cmd->add_option("--out", out_override, "output directory (overrides config)");
    };

    CLI::App* gen = app.add_subcommand("gen-data", "sample injections and label with AC-PF");
    add_common(gen);
    gen->add_option("--n", n_override, "dataset rows");
    gen->add_option("--seed", seed_override, "sampling seed");

    CLI::App* train = app.add_subcommand("train", "fit the GP surrogate and report RMSE");
    add_common(train);

    CLI::App* solve = app.add_subcommand("solve", "solve the GP CC-OPF");
    add_common(solve);
    solve->add_option("--method", method_override, "ta1 | ta2 | em");

    CLI::App* validate = app.add_subcommand("validate", "Monte-Carlo validation of a solution");
    add_common(validate);
    validate->add_option("--method", method_override, "ta1 | ta2 | em");
    validate->add_option("--samples", samples_override, "MC samples");

    CLI::App* compare = app.add_subcommand("compare", "baselines and the comparison table");
    add_common(compare);
    compare->add_option("--method", method_override, "ta1 | ta2 | em");
    compare->add_option("--samples", samples_override, "MC samples");

    std::string convert_in, convert_out;
    CLI::App* convert = app.add_subcommand("convert-case", "matpower-style to native format");
    convert->add_option("input", convert_in, "input case file")->required();
    convert->add_option("output", convert_out, "output native case file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (convert->parsed()) return cmd_convert_case(convert_in, convert_out);

        RunConfig config = RunConfig::from_file(config_path);
        if (!case_override.empty()) config.case_path = case_override;
        if (!out_override.empty()) config.out_dir = out_override;
        if (!method_override.empty()) config.ccopf.method = propagation_from(method_override);
        if (seed_override >= 0) config.sampling.seed = static_cast<std::uint64_t>(seed_override);
        if (n_override > 0) config.dataset_rows = n_override;
        if (samples_override > 0) config.validate_samples = samples_override;
        config.check();

        if (gen->parsed()) return cmd_gen_data(config);
        if (train->parsed()) return cmd_train(config);
        if (solve->parsed()) return cmd_solve(config);
        if (validate->parsed()) return cmd_validate(config);
        if (compare->parsed()) return cmd_compare(config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "no subcommand\n";
    return 1;
}

}  // namespace gpcc
