#include "gpcc/dataset.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gpcc/errors.hpp"
#include "gpcc/io.hpp"
#include "gpcc/parallel.hpp"
#include "gpcc/pf.hpp"

namespace gpcc {

using nlohmann::json;
using nlohmann::ordered_json;

void SamplingConfig::check() const {
    if (!(psi_hi >= psi_lo) || !(psi_lo > 0.0)) {
        throw ValidationError("sampling config: require psi_hi >= psi_lo > 0");
    }
    for (double s : {load_corr.sigma, load_uncorr.sigma, res_corr.sigma, res_uncorr.sigma}) {
        if (s < 0.0) throw ValidationError("sampling config: sigma must be nonnegative");
    }
    if (noise_sigma < 0.0) throw ValidationError("sampling config: noise sigma must be nonnegative");
}

std::string Dataset::fingerprint() const {
    std::ostringstream ss;
    ss << seed << ':' << case_fingerprint << ':' << X.rows() << 'x' << X.cols() << 'x'
       << Y.cols();
    if (X.size() > 0) ss << ':' << fmt_double(X.sum()) << ':' << fmt_double(Y.sum());
    return hex64(fnv1a(ss.str()));
}

namespace {

// Sub-stream tags keep every sampled quantity on its own RNG lane.
enum StreamTag : std::uint64_t { TagInjection = 1, TagGeneration = 2, TagNoise = 3 };

Eigen::VectorXd sample_injection_row(const GridCase& grid, const SamplingConfig& config,
                                     Rng& rng) {
    const int n_l = static_cast<int>(grid.loads.size());
    const int n_r = static_cast<int>(grid.renewables.size());
    Eigen::VectorXd row(n_l + n_r);
    const double eta_corr = rng.lognormal(config.load_corr.mu, config.load_corr.sigma);
    for (int i = 0; i < n_l; ++i) {
        const double eta_uncorr = rng.lognormal(config.load_uncorr.mu, config.load_uncorr.sigma);
        row[i] = eta_corr * eta_uncorr * grid.loads[static_cast<size_t>(i)].p_ref;
    }
    const double nu_corr = rng.lognormal(config.res_corr.mu, config.res_corr.sigma);
    for (int j = 0; j < n_r; ++j) {
        const double nu_uncorr = rng.lognormal(config.res_uncorr.mu, config.res_uncorr.sigma);
        row[n_l + j] = nu_corr * nu_uncorr * grid.renewables[static_cast<size_t>(j)].p_ref;
    }
    return row;
}

}  // namespace

Eigen::MatrixXd sample_injections(const GridCase& grid, const SamplingConfig& config, int n) {
    config.check();
    if (n < 1) throw ValidationError("sample_injections: n must be >= 1");
    const int n_cols = static_cast<int>(grid.loads.size() + grid.renewables.size());
    Eigen::MatrixXd rows(n, n_cols);
    for (int i = 0; i < n; ++i) {
        Rng rng = Rng::derive(config.seed ^ TagInjection, static_cast<std::uint64_t>(i));
        rows.row(i) = sample_injection_row(grid, config, rng);
    }
    return rows;
}

Eigen::VectorXd sample_generation(const GridCase& grid, const SamplingConfig& config,
                                  const Eigen::VectorXd& load_row,
                                  const Eigen::VectorXd& res_row, Rng& rng) {
    const int n_u = static_cast<int>(grid.generators.size());
    const double sum_load = load_row.sum();
    const double sum_res = res_row.sum();
    const double sum_ref = grid.total_gen_ref_p();
    if (sum_ref == 0.0) throw DegenerateCase("sample_generation: zero total reference dispatch");

    // Step 1: jittered proportional target covering demand plus losses.
    Eigen::VectorXd u(n_u);
    for (int k = 0; k < n_u; ++k) {
        const double psi = rng.uniform(config.psi_lo, config.psi_hi);
        u[k] = psi * grid.loss_factor * (sum_load / sum_ref) *
               grid.generators[static_cast<size_t>(k)].p_ref;
    }
    const double sum_step1 = u.sum();
    if (sum_step1 == 0.0) throw DegenerateCase("sample_generation: step-1 sum is zero");

    // Step 2: exact balance sum(u) + sum(p_rs) = loss_factor * sum(p_l).
    const double target = grid.loss_factor * sum_load - sum_res;
    u *= target / sum_step1;
    return u;
}

Dataset build_dataset(const GridCase& grid, const SamplingConfig& config, int n,
                      const OutputSpec& spec) {
    config.check();
    if (n < 1) throw ValidationError("build_dataset: n must be >= 1");

    const OutputLayout layout = build_output_layout(grid, spec);
    const int n_u = static_cast<int>(grid.generators.size());
    const int n_l = static_cast<int>(grid.loads.size());
    const int n_r = static_cast<int>(grid.renewables.size());
    const int n_bus = static_cast<int>(grid.buses.size());

    Dataset ds;
    ds.seed = config.seed;
    ds.case_fingerprint = grid.fingerprint();
    ds.X.resize(n, n_u + n_l + n_r);
    ds.Y.resize(n, layout.size());

    for (int k = 0; k < n_u; ++k) {
        ds.x_names.push_back("u:gen" + std::to_string(k + 1) + "@bus" +
                             std::to_string(grid.generators[static_cast<size_t>(k)].bus));
    }
    for (int i = 0; i < n_l; ++i) {
        ds.x_names.push_back("pl:bus" + std::to_string(grid.loads[static_cast<size_t>(i)].bus));
    }
    for (int j = 0; j < n_r; ++j) {
        ds.x_names.push_back("prs:bus" +
                             std::to_string(grid.renewables[static_cast<size_t>(j)].bus));
    }
    for (const auto& e : layout.entries) ds.y_names.push_back(e.label);

    // Precompute gamma ratios.
    Eigen::VectorXd gamma_l(n_l), gamma_r(n_r);
    for (int i = 0; i < n_l; ++i) gamma_l[i] = grid.loads[static_cast<size_t>(i)].gamma();
    for (int j = 0; j < n_r; ++j) gamma_r[j] = grid.renewables[static_cast<size_t>(j)].gamma();

    std::vector<int> attempts_used(static_cast<size_t>(n), 0);
    const int max_attempts = 32;

    parallel_for(static_cast<size_t>(n), [&](size_t row) {
        for (int attempt = 0;; ++attempt) {
            if (attempt >= max_attempts) {
                throw TooManyFailures("build_dataset: row " + std::to_string(row) +
                                      " failed to converge after " +
                                      std::to_string(max_attempts) + " redraws");
            }
            // Redraws shift to a fresh sub-stream so other rows are untouched.
            const std::uint64_t draw_index =
                static_cast<std::uint64_t>(row) + static_cast<std::uint64_t>(attempt) * 0x10000000ULL;
            Rng inj_rng = Rng::derive(config.seed ^ TagInjection, draw_index);
            Rng gen_rng = Rng::derive(config.seed ^ TagGeneration, draw_index);
            Rng noise_rng = Rng::derive(config.seed ^ TagNoise, draw_index);

            const Eigen::VectorXd injections_row = sample_injection_row(grid, config, inj_rng);
            const Eigen::VectorXd load_row = injections_row.head(n_l);
            const Eigen::VectorXd res_row = injections_row.tail(n_r);
            const Eigen::VectorXd u = sample_generation(grid, config, load_row, res_row, gen_rng);

            // Assemble per-bus injections; reactive follows the fixed ratio.
            Injections inj;
            inj.p = Eigen::VectorXd::Zero(n_bus);
            inj.q = Eigen::VectorXd::Zero(n_bus);
            Eigen::VectorXd q_cons = Eigen::VectorXd::Zero(n_bus);
            for (int k = 0; k < n_u; ++k) {
                inj.p[grid.bus_index(grid.generators[static_cast<size_t>(k)].bus)] += u[k];
            }
            for (int i = 0; i < n_l; ++i) {
                const int bi = grid.bus_index(grid.loads[static_cast<size_t>(i)].bus);
                inj.p[bi] -= load_row[i];
                inj.q[bi] -= gamma_l[i] * load_row[i];
                q_cons[bi] += gamma_l[i] * load_row[i];
            }
            for (int j = 0; j < n_r; ++j) {
                const int bi = grid.bus_index(grid.renewables[static_cast<size_t>(j)].bus);
                inj.p[bi] += res_row[j];
                inj.q[bi] += gamma_r[j] * res_row[j];
                q_cons[bi] -= gamma_r[j] * res_row[j];
            }

            PfSolution sol;
            bool ok = false;
            try {
                sol = solve_ac_pf(grid, inj);
                ok = sol.converged;
            } catch (const SingularJacobian&) {
                ok = false;
            }
            if (!ok) {
                attempts_used[row] = attempt + 1;
                continue;
            }

            Eigen::VectorXd y = extract_outputs(grid, sol, layout, q_cons);
            if (config.noise_sigma > 0.0) {
                for (int oi = 0; oi < y.size(); ++oi) {
                    y[oi] += noise_rng.normal(0.0, config.noise_sigma);
                }
            }
            ds.X.row(static_cast<Eigen::Index>(row)).head(n_u) = u;
            ds.X.row(static_cast<Eigen::Index>(row)).segment(n_u, n_l) = load_row;
            ds.X.row(static_cast<Eigen::Index>(row)).tail(n_r) = res_row;
            ds.Y.row(static_cast<Eigen::Index>(row)) = y;
            break;
        }
    });

    int dropped = 0;
    for (int a : attempts_used) dropped += a;
    ds.dropped_rows = dropped;
    if (dropped > n / 5) {
        throw TooManyFailures("build_dataset: " + std::to_string(dropped) +
                              " non-convergent draws out of " + std::to_string(n));
    }
    return ds;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
    std::ostringstream csv;
    for (size_t i = 0; i < dataset.x_names.size(); ++i) {
        if (i) csv << ',';
        csv << dataset.x_names[i];
    }
    for (const auto& name : dataset.y_names) csv << ',' << name;
    csv << '\n';
    for (Eigen::Index r = 0; r < dataset.X.rows(); ++r) {
        for (Eigen::Index c = 0; c < dataset.X.cols(); ++c) {
            if (c) csv << ',';
            csv << fmt_double(dataset.X(r, c));
        }
        for (Eigen::Index c = 0; c < dataset.Y.cols(); ++c) {
            csv << ',' << fmt_double(dataset.Y(r, c));
        }
        csv << '\n';
    }
    write_text_file(path, csv.str());

    ordered_json meta;
    meta["seed"] = dataset.seed;
    meta["case_fingerprint"] = dataset.case_fingerprint;
    meta["rows"] = dataset.rows();
    meta["n_x"] = dataset.X.cols();
    meta["n_y"] = dataset.Y.cols();
    meta["dropped_rows"] = dataset.dropped_rows;
    meta["fingerprint"] = dataset.fingerprint();
    write_text_file(path + ".meta.json", meta.dump(2) + "\n");
}

Dataset load_dataset(const std::string& path) {
    const std::string text = read_text_file(path);
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header)) throw ParseError("dataset: empty file " + path);

    json meta;
    try {
        meta = json::parse(read_text_file(path + ".meta.json"));
    } catch (const std::exception& e) {
        throw ParseError("dataset: cannot read metadata sidecar: " + std::string(e.what()));
    }
    const int n_x = meta.at("n_x").get<int>();
    const int n_y = meta.at("n_y").get<int>();

    Dataset ds;
    ds.seed = meta.at("seed").get<std::uint64_t>();
    ds.case_fingerprint = meta.at("case_fingerprint").get<std::string>();
    ds.dropped_rows = meta.value("dropped_rows", 0);

    {
        std::istringstream hs(header);
        std::string column;
        int idx = 0;
        while (std::getline(hs, column, ',')) {
            if (idx < n_x) ds.x_names.push_back(column);
            else ds.y_names.push_back(column);
            ++idx;
        }
        if (idx != n_x + n_y) throw ParseError("dataset: header width disagrees with metadata");
    }

    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError("dataset: bad number at line " + std::to_string(line_no));
            }
        }
        if (static_cast<int>(row.size()) != n_x + n_y) {
            throw ParseError("dataset: wrong column count at line " + std::to_string(line_no));
        }
        rows.push_back(std::move(row));
    }

    ds.X.resize(static_cast<Eigen::Index>(rows.size()), n_x);
    ds.Y.resize(static_cast<Eigen::Index>(rows.size()), n_y);
    for (size_t r = 0; r < rows.size(); ++r) {
        for (int c = 0; c < n_x; ++c) ds.X(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<size_t>(c)];
        for (int c = 0; c < n_y; ++c) {
            ds.Y(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<size_t>(n_x + c)];
        }
    }
    return ds;
}

}  // namespace gpcc
