#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gpcc {

enum class BusKind { Slack, Pv, Pq };

std::string to_string(BusKind kind);

struct Bus {
    int id = 0;
    BusKind kind = BusKind::Pq;
    std::optional<double> v_set;  // p.u.; PV and slack buses
    double v_min = 0.9;
    double v_max = 1.1;
    double g_shunt = 0.0;  // p.u. shunt conductance
    double b_shunt = 0.0;  // p.u. shunt susceptance
};

// Series admittance g + jb of the branch (b < 0 for an inductive line).
struct Line {
    int from_bus = 0;
    int to_bus = 0;
    double g = 0.0;
    double b = 0.0;
    double s_max = 0.0;  // p.u. apparent power rating
    bool monitored = true;
};

struct Generator {
    int bus = 0;
    double p_min = 0.0, p_max = 0.0;  // p.u.
    double q_min = 0.0, q_max = 0.0;  // p.u.
    double c2 = 0.0, c1 = 0.0, c0 = 0.0;  // cost on MW quantities
    bool controllable = true;
    double p_ref = 0.0;  // p.u. reference dispatch
};

struct Load {
    int bus = 0;
    double p_ref = 0.0;  // p.u.
    double q_ref = 0.0;  // p.u.
    double sigma = 0.0;  // p.u. std-dev of the active-power fluctuation
    double gamma() const { return p_ref != 0.0 ? q_ref / p_ref : 0.0; }
};

using Renewable = Load;

struct GridCase {
    std::string name;
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    std::vector<Load> loads;
    std::vector<Renewable> renewables;
    double base_mva = 100.0;
    double loss_factor = 1.0;  // derived on parse; within [1.0, 1.2]

    int bus_index(int bus_id) const;  // position in buses; throws if absent
    int slack_index() const;
    double total_load_p() const;
    double total_res_p() const;
    double total_gen_ref_p() const;
    std::string fingerprint() const;  // hash of the serialized case
};

// Checks every structural invariant; throws ValidationError on the first
// failure. Called by the parsers and available to users building cases in
// code.
void validate(const GridCase& grid);

// Ratio of total reference production (conventional + renewable) to total
// reference load, clipped to [1.0, 1.2].
double derive_loss_factor(const GridCase& grid);

// Native structured-text (JSON) case format.
GridCase parse_native_case(const std::string& text);
std::string serialize_native_case(const GridCase& grid);
GridCase load_case(const std::string& path);  // dispatches on extension (.m vs native)

}  // namespace gpcc
