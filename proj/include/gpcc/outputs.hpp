#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "gpcc/grid.hpp"
#include "gpcc/pf.hpp"

namespace gpcc {

// Selection of monitored quantities, flattened in the fixed order
// [voltages, reactive powers, apparent flows].
struct OutputSpec {
    bool pq_voltages = true;
    bool slack_voltage = false;
    bool generator_reactive = true;
    enum class LineSelection { Monitored, All, None, Explicit } line_selection =
        LineSelection::Monitored;
    std::vector<int> explicit_lines;  // positions into GridCase::lines

    static OutputSpec defaults() { return OutputSpec{}; }
};

struct OutputLayout {
    // One entry per output: kind v|q|s, element label, and lower/upper limit.
    struct Entry {
        char kind = 'v';
        std::string label;
        int index = 0;  // bus position for v, generator position for q, line position for s
        double lower = 0.0;
        double upper = 0.0;
    };
    std::vector<Entry> entries;
    int size() const { return static_cast<int>(entries.size()); }
};

// Resolves the spec against a case; throws SpecMismatch when the spec
// references absent elements.
OutputLayout build_output_layout(const GridCase& grid, const OutputSpec& spec);

// Flat output vector [v, q, s] for a solved power flow. Generator reactive
// power is the bus net injection plus colocated consumption (load q minus
// renewable q at that bus), i.e. what the machine actually produces. The
// per-bus consumption vector defaults to the case reference values; callers
// that sampled the injections pass the sampled one. Buses hosting several
// generators split the bus reactive output equally.
Eigen::VectorXd extract_outputs(const GridCase& grid, const PfSolution& sol,
                                const OutputLayout& layout,
                                const Eigen::VectorXd& bus_q_consumption = Eigen::VectorXd());

// Reference per-bus reactive consumption (loads minus renewables).
Eigen::VectorXd reference_q_consumption(const GridCase& grid);

}  // namespace gpcc
