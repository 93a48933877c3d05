#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpcc/ccopf.hpp"
#include "gpcc/dataset.hpp"

namespace gpcc {

// Effective run configuration. Loaded from a JSON config file; every CLI
// flag overrides the matching key. The effective configuration is echoed
// into the output directory for provenance.
struct RunConfig {
    std::string case_path;
    std::string out_dir = "out";

    SamplingConfig sampling;
    int dataset_rows = 100;

    int n_train = 75;
    int n_val = 25;
    int restarts = 5;
    int max_evaluations = 200;
    std::uint64_t train_seed = 7;

    CcOpfSettings ccopf;
    double solver_tolerance = 1e-6;
    int solver_max_iterations = 60;

    int validate_samples = 1000;
    std::uint64_t validate_seed = 99;

    std::vector<int> scenario_counts{20, 50, 100};
    std::vector<std::uint64_t> scenario_seeds{11, 12, 13};

    static RunConfig from_file(const std::string& path);
    std::string serialize() const;
    void check() const;
};

int cmd_gen_data(const RunConfig& config);
int cmd_train(const RunConfig& config);
int cmd_solve(const RunConfig& config);
int cmd_validate(const RunConfig& config);
int cmd_compare(const RunConfig& config);
int cmd_convert_case(const std::string& input_path, const std::string& output_path);

int run_cli(int argc, char** argv);

}  // namespace gpcc
