#include "gpcc/matpower.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "gpcc/errors.hpp"

namespace gpcc {

namespace {

// Reads "mpc.<name> = [ rows... ];" into a row-major table. Rows are
// terminated by ';' and '%' starts a comment.
std::vector<std::vector<double>> read_table(const std::string& text, const std::string& name) {
    const std::string key = "mpc." + name;
    size_t pos = text.find(key);
    if (pos == std::string::npos) {
        throw ParseError("matpower case: missing section " + key);
    }
    pos = text.find('[', pos);
    const size_t end = text.find(']', pos);
    if (pos == std::string::npos || end == std::string::npos) {
        throw ParseError("matpower case: malformed section " + key);
    }
    std::string body = text.substr(pos + 1, end - pos - 1);
    // strip comments
    std::string clean;
    bool in_comment = false;
    for (char c : body) {
        if (c == '%') in_comment = true;
        if (c == '\n') in_comment = false;
        if (!in_comment) clean += c;
    }

    std::vector<std::vector<double>> rows;
    std::vector<double> row;
    std::istringstream ss(clean);
    std::string token;
    while (ss >> token) {
        bool end_row = false;
        if (!token.empty() && token.back() == ';') {
            token.pop_back();
            end_row = true;
        }
        if (!token.empty()) {
            try {
                row.push_back(std::stod(token));
            } catch (const std::exception&) {
                throw ParseError("matpower case: bad number '" + token + "' in " + key);
            }
        }
        if (end_row && !row.empty()) {
            rows.push_back(row);
            row.clear();
        }
    }
    if (!row.empty()) rows.push_back(row);
    return rows;
}

double read_scalar(const std::string& text, const std::string& name) {
    const std::string key = "mpc." + name;
    size_t pos = text.find(key);
    if (pos == std::string::npos) throw ParseError("matpower case: missing " + key);
    pos = text.find('=', pos);
    const size_t end = text.find(';', pos);
    return std::stod(text.substr(pos + 1, end - pos - 1));
}

}  // namespace

GridCase parse_matpower_case(const std::string& text) {
    GridCase grid;
    grid.name = "mpc";
    {
        const size_t pos = text.find("function mpc =");
        if (pos != std::string::npos) {
            std::istringstream ss(text.substr(pos + 14));
            ss >> grid.name;
        }
    }
    grid.base_mva = read_scalar(text, "baseMVA");
    const auto bus_table = read_table(text, "bus");
    const auto gen_table = read_table(text, "gen");
    const auto branch_table = read_table(text, "branch");

    std::map<int, size_t> bus_slot;
    for (const auto& row : bus_table) {
        if (row.size() < 13) throw ParseError("matpower case: bus row too short");
        Bus bus;
        bus.id = static_cast<int>(row[0]);
        const int type = static_cast<int>(row[1]);
        bus.kind = type == 3 ? BusKind::Slack : (type == 2 ? BusKind::Pv : BusKind::Pq);
        bus.g_shunt = row[4] / grid.base_mva;
        bus.b_shunt = row[5] / grid.base_mva;
        bus.v_max = row[11];
        bus.v_min = row[12];
        bus_slot[bus.id] = grid.buses.size();
        grid.buses.push_back(bus);

        const double pd = row[2] / grid.base_mva;
        const double qd = row[3] / grid.base_mva;
        if (pd != 0.0 || qd != 0.0) {
            Load load;
            load.bus = bus.id;
            load.p_ref = pd;
            load.q_ref = qd;
            load.sigma = 0.15 * std::abs(pd);
            grid.loads.push_back(load);
        }
    }

    const auto gencost = [&]() -> std::vector<std::vector<double>> {
        try {
            return read_table(text, "gencost");
        } catch (const ParseError&) {
            return {};
        }
    }();

    for (size_t gi = 0; gi < gen_table.size(); ++gi) {
        const auto& row = gen_table[gi];
        if (row.size() < 10) throw ParseError("matpower case: gen row too short");
        Generator gen;
        gen.bus = static_cast<int>(row[0]);
        gen.q_max = row[3] / grid.base_mva;
        gen.q_min = row[4] / grid.base_mva;
        gen.p_max = row[8] / grid.base_mva;
        gen.p_min = row[9] / grid.base_mva;
        gen.p_ref = std::clamp(row[1] / grid.base_mva, gen.p_min, gen.p_max);
        if (gi < gencost.size()) {
            const auto& cost = gencost[gi];
            // model 2 (polynomial); highest degree first after the 4 header fields
            if (cost.size() >= 7 && static_cast<int>(cost[0]) == 2 &&
                static_cast<int>(cost[3]) == 3) {
                gen.c2 = cost[4];
                gen.c1 = cost[5];
                gen.c0 = cost[6];
            } else if (cost.size() >= 6 && static_cast<int>(cost[0]) == 2 &&
                       static_cast<int>(cost[3]) == 2) {
                gen.c1 = cost[4];
                gen.c0 = cost[5];
            }
        }
        if (!bus_slot.count(gen.bus)) {
            throw ParseError("matpower case: generator references unknown bus");
        }
        auto& bus = grid.buses[bus_slot[gen.bus]];
        if (bus.kind == BusKind::Pq) bus.kind = BusKind::Pv;
        bus.v_set = row[5];
        grid.generators.push_back(gen);
    }

    for (const auto& row : branch_table) {
        if (row.size() < 9) throw ParseError("matpower case: branch row too short");
        const int from = static_cast<int>(row[0]);
        const int to = static_cast<int>(row[1]);
        const double r = row[2];
        const double x = row[3];
        const double charging = row[4];
        const double rate_a = row[5];
        const double ratio = row.size() > 8 ? row[8] : 0.0;
        if (!bus_slot.count(from) || !bus_slot.count(to)) {
            throw ParseError("matpower case: branch references unknown bus");
        }

        const double z2 = r * r + x * x;
        if (z2 == 0.0) throw ParseError("matpower case: branch with zero impedance");
        double g = r / z2;
        double b = -x / z2;

        Line line;
        line.from_bus = from;
        line.to_bus = to;
        line.s_max = rate_a > 0.0 ? rate_a / grid.base_mva : 99.0;
        line.monitored = true;

        const bool off_nominal = ratio != 0.0 && ratio != 1.0;
        if (off_nominal) {
            // Tap-side equivalence: series y/tau with compensating shunts
            //   from: y (1 - tau) / tau^2,  to: -y (1 - tau) / tau.
            line.monitored = false;
            const double tau = ratio;
            const double gf = g * (1.0 - tau) / (tau * tau);
            const double bf = b * (1.0 - tau) / (tau * tau);
            const double gt = -g * (1.0 - tau) / tau;
            const double bt = -b * (1.0 - tau) / tau;
            grid.buses[bus_slot[from]].g_shunt += gf;
            grid.buses[bus_slot[from]].b_shunt += bf;
            grid.buses[bus_slot[to]].g_shunt += gt;
            grid.buses[bus_slot[to]].b_shunt += bt;
            g /= tau;
            b /= tau;
        }
        line.g = g;
        line.b = b;

        // Charging susceptance splits evenly onto the endpoint buses.
        if (charging != 0.0) {
            grid.buses[bus_slot[from]].b_shunt += 0.5 * charging;
            grid.buses[bus_slot[to]].b_shunt += 0.5 * charging;
        }
        grid.lines.push_back(line);
    }

    // PV/slack v_set can fall outside the bus band in raw files; widen the
    // band rather than reject the case.
    for (auto& bus : grid.buses) {
        if (bus.v_set) {
            bus.v_min = std::min(bus.v_min, *bus.v_set - 1e-6);
            bus.v_max = std::max(bus.v_max, *bus.v_set + 1e-6);
        }
    }

    grid.loss_factor = derive_loss_factor(grid);
    validate(grid);
    return grid;
}

}  // namespace gpcc
