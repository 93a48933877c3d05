#include "gpcc/outputs.hpp"

#include "gpcc/errors.hpp"

namespace gpcc {

OutputLayout build_output_layout(const GridCase& grid, const OutputSpec& spec) {
    OutputLayout layout;

    for (size_t i = 0; i < grid.buses.size(); ++i) {
        const auto& bus = grid.buses[i];
        const bool take = (bus.kind == BusKind::Pq && spec.pq_voltages) ||
                          (bus.kind == BusKind::Slack && spec.slack_voltage);
        if (!take) continue;
        OutputLayout::Entry e;
        e.kind = 'v';
        e.index = static_cast<int>(i);
        e.label = "v:bus" + std::to_string(bus.id);
        e.lower = bus.v_min;
        e.upper = bus.v_max;
        layout.entries.push_back(e);
    }

    if (spec.generator_reactive) {
        for (size_t gi = 0; gi < grid.generators.size(); ++gi) {
            const auto& gen = grid.generators[gi];
            OutputLayout::Entry e;
            e.kind = 'q';
            e.index = static_cast<int>(gi);
            e.label = "q:gen" + std::to_string(gi + 1) + "@bus" + std::to_string(gen.bus);
            e.lower = gen.q_min;
            e.upper = gen.q_max;
            layout.entries.push_back(e);
        }
    }

    auto add_line = [&](int li) {
        const auto& line = grid.lines[static_cast<size_t>(li)];
        OutputLayout::Entry e;
        e.kind = 's';
        e.index = li;
        e.label = "s:line" + std::to_string(line.from_bus) + "-" + std::to_string(line.to_bus);
        e.lower = 0.0;
        e.upper = line.s_max;
        layout.entries.push_back(e);
    };
    switch (spec.line_selection) {
        case OutputSpec::LineSelection::Monitored:
            for (size_t li = 0; li < grid.lines.size(); ++li) {
                if (grid.lines[li].monitored) add_line(static_cast<int>(li));
            }
            break;
        case OutputSpec::LineSelection::All:
            for (size_t li = 0; li < grid.lines.size(); ++li) add_line(static_cast<int>(li));
            break;
        case OutputSpec::LineSelection::None:
            break;
        case OutputSpec::LineSelection::Explicit:
            for (int li : spec.explicit_lines) {
                if (li < 0 || li >= static_cast<int>(grid.lines.size())) {
                    throw SpecMismatch("output spec references line index " +
                                       std::to_string(li) + " outside the case");
                }
                add_line(li);
            }
            break;
    }
    return layout;
}

Eigen::VectorXd reference_q_consumption(const GridCase& grid) {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.buses.size()));
    for (const auto& load : grid.loads) q[grid.bus_index(load.bus)] += load.q_ref;
    for (const auto& res : grid.renewables) q[grid.bus_index(res.bus)] -= res.q_ref;
    return q;
}

Eigen::VectorXd extract_outputs(const GridCase& grid, const PfSolution& sol,
                                const OutputLayout& layout,
                                const Eigen::VectorXd& bus_q_consumption) {
    const Eigen::VectorXd q_cons =
        bus_q_consumption.size() ? bus_q_consumption : reference_q_consumption(grid);
    if (q_cons.size() != static_cast<Eigen::Index>(grid.buses.size())) {
        throw SpecMismatch("bus_q_consumption must have one entry per bus");
    }
    std::vector<int> gens_at_bus(grid.buses.size(), 0);
    for (const auto& gen : grid.generators) ++gens_at_bus[static_cast<size_t>(grid.bus_index(gen.bus))];

    Eigen::VectorXd y(layout.size());
    for (int oi = 0; oi < layout.size(); ++oi) {
        const auto& e = layout.entries[static_cast<size_t>(oi)];
        switch (e.kind) {
            case 'v':
                y[oi] = sol.v[e.index];
                break;
            case 'q': {
                const auto& gen = grid.generators[static_cast<size_t>(e.index)];
                const int bi = grid.bus_index(gen.bus);
                y[oi] = (sol.q[bi] + q_cons[bi]) / gens_at_bus[static_cast<size_t>(bi)];
                break;
            }
            case 's':
                y[oi] = sol.flows[static_cast<size_t>(e.index)].s;
                break;
            default:
                throw SpecMismatch("unknown output kind");
        }
    }
    return y;
}

}  // namespace gpcc
