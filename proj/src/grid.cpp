#include "gpcc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "gpcc/errors.hpp"
#include "gpcc/io.hpp"
#include "gpcc/matpower.hpp"

namespace gpcc {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(BusKind kind) {
    switch (kind) {
        case BusKind::Slack: return "slack";
        case BusKind::Pv: return "pv";
        case BusKind::Pq: return "pq";
    }
    return "?";
}

namespace {

BusKind bus_kind_from(const std::string& s) {
    if (s == "slack") return BusKind::Slack;
    if (s == "pv") return BusKind::Pv;
    if (s == "pq") return BusKind::Pq;
    throw ParseError("unknown bus kind: " + s);
}

}  // namespace

int GridCase::bus_index(int bus_id) const {
    for (size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].id == bus_id) return static_cast<int>(i);
    }
    throw ValidationError("unknown bus id: " + std::to_string(bus_id));
}

int GridCase::slack_index() const {
    for (size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].kind == BusKind::Slack) return static_cast<int>(i);
    }
    throw ValidationError("case has no slack bus");
}

double GridCase::total_load_p() const {
    double s = 0.0;
    for (const auto& l : loads) s += l.p_ref;
    return s;
}

double GridCase::total_res_p() const {
    double s = 0.0;
    for (const auto& r : renewables) s += r.p_ref;
    return s;
}

double GridCase::total_gen_ref_p() const {
    double s = 0.0;
    for (const auto& g : generators) s += g.p_ref;
    return s;
}

std::string GridCase::fingerprint() const {
    return hex64(fnv1a(serialize_native_case(*this)));
}

double derive_loss_factor(const GridCase& grid) {
    const double load = grid.total_load_p();
    if (load <= 0.0) return 1.0;
    const double production = grid.total_gen_ref_p() + grid.total_res_p();
    return std::clamp(production / load, 1.0, 1.2);
}

void validate(const GridCase& grid) {
    if (grid.buses.empty()) throw ValidationError("case has no buses");
    if (grid.base_mva <= 0.0) throw ValidationError("base_mva must be positive");

    std::set<int> ids;
    int slack_count = 0;
    for (const auto& bus : grid.buses) {
        if (!ids.insert(bus.id).second) {
            throw ValidationError("duplicate bus id: " + std::to_string(bus.id));
        }
        if (bus.kind == BusKind::Slack) ++slack_count;
        if (!(bus.v_min < bus.v_max)) {
            throw ValidationError("bus " + std::to_string(bus.id) + ": v_min must be < v_max");
        }
        if (bus.kind != BusKind::Pq) {
            if (!bus.v_set.has_value()) {
                throw ValidationError("bus " + std::to_string(bus.id) +
                                      ": PV/slack bus requires v_set");
            }
            if (*bus.v_set < bus.v_min || *bus.v_set > bus.v_max) {
                throw ValidationError("bus " + std::to_string(bus.id) +
                                      ": v_set outside [v_min, v_max]");
            }
        }
    }
    if (slack_count != 1) {
        throw ValidationError("case must have exactly one slack bus, found " +
                              std::to_string(slack_count));
    }

    for (const auto& line : grid.lines) {
        if (!ids.count(line.from_bus) || !ids.count(line.to_bus)) {
            throw ValidationError("line " + std::to_string(line.from_bus) + "-" +
                                  std::to_string(line.to_bus) + " references an unknown bus");
        }
        if (line.from_bus == line.to_bus) {
            throw ValidationError("line endpoints coincide at bus " +
                                  std::to_string(line.from_bus));
        }
        if (line.g == 0.0 && line.b == 0.0) {
            throw ValidationError("line " + std::to_string(line.from_bus) + "-" +
                                  std::to_string(line.to_bus) + " has zero admittance");
        }
        if (!(line.s_max > 0.0)) {
            throw ValidationError("line " + std::to_string(line.from_bus) + "-" +
                                  std::to_string(line.to_bus) + " needs s_max > 0");
        }
    }

    for (const auto& gen : grid.generators) {
        if (!ids.count(gen.bus)) {
            throw ValidationError("generator references unknown bus " + std::to_string(gen.bus));
        }
        if (gen.p_min > gen.p_max || gen.q_min > gen.q_max) {
            throw ValidationError("generator at bus " + std::to_string(gen.bus) +
                                  ": min limit exceeds max");
        }
        if (gen.c2 < 0.0 || gen.c1 < 0.0 || gen.c0 < 0.0) {
            throw ValidationError("generator at bus " + std::to_string(gen.bus) +
                                  ": cost coefficients must be nonnegative");
        }
        if (gen.p_ref < gen.p_min || gen.p_ref > gen.p_max) {
            throw ValidationError("generator at bus " + std::to_string(gen.bus) +
                                  ": p_ref outside [p_min, p_max]");
        }
    }

    for (const auto& load : grid.loads) {
        if (!ids.count(load.bus)) {
            throw ValidationError("load references unknown bus " + std::to_string(load.bus));
        }
        if (load.sigma < 0.0) throw ValidationError("load sigma must be nonnegative");
    }
    for (const auto& res : grid.renewables) {
        if (!ids.count(res.bus)) {
            throw ValidationError("renewable references unknown bus " + std::to_string(res.bus));
        }
        if (res.sigma < 0.0) throw ValidationError("renewable sigma must be nonnegative");
    }

    if (grid.loss_factor < 1.0 || grid.loss_factor > 1.2) {
        throw ValidationError("loss factor outside [1.0, 1.2]");
    }
}

GridCase parse_native_case(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("native case: ") + e.what());
    }

    GridCase grid;
    try {
        grid.name = doc.value("name", "case");
        grid.base_mva = doc.value("base_mva", 100.0);
        for (const auto& b : doc.at("buses")) {
            Bus bus;
            bus.id = b.at("id").get<int>();
            bus.kind = bus_kind_from(b.at("kind").get<std::string>());
            if (b.contains("v_set")) bus.v_set = b.at("v_set").get<double>();
            bus.v_min = b.value("v_min", 0.9);
            bus.v_max = b.value("v_max", 1.1);
            bus.g_shunt = b.value("g_shunt", 0.0);
            bus.b_shunt = b.value("b_shunt", 0.0);
            grid.buses.push_back(bus);
        }
        for (const auto& l : doc.at("lines")) {
            Line line;
            line.from_bus = l.at("from").get<int>();
            line.to_bus = l.at("to").get<int>();
            line.g = l.at("g").get<double>();
            line.b = l.at("b").get<double>();
            line.s_max = l.at("s_max").get<double>();
            line.monitored = l.value("monitor", true);
            grid.lines.push_back(line);
        }
        for (const auto& g : doc.at("generators")) {
            Generator gen;
            gen.bus = g.at("bus").get<int>();
            gen.p_min = g.at("p_min").get<double>();
            gen.p_max = g.at("p_max").get<double>();
            gen.q_min = g.at("q_min").get<double>();
            gen.q_max = g.at("q_max").get<double>();
            gen.c2 = g.value("c2", 0.0);
            gen.c1 = g.value("c1", 0.0);
            gen.c0 = g.value("c0", 0.0);
            gen.controllable = g.value("controllable", true);
            gen.p_ref = g.at("p_ref").get<double>();
            grid.generators.push_back(gen);
        }
        auto read_injection_list = [](const json& arr, std::vector<Load>& out,
                                      double default_sigma_ratio) {
            for (const auto& e : arr) {
                Load item;
                item.bus = e.at("bus").get<int>();
                item.p_ref = e.at("p_ref").get<double>();
                item.q_ref = e.at("q_ref").get<double>();
                item.sigma = e.value("sigma", default_sigma_ratio * std::abs(item.p_ref));
                out.push_back(item);
            }
        };
        if (doc.contains("loads")) read_injection_list(doc.at("loads"), grid.loads, 0.15);
        if (doc.contains("renewables")) {
            read_injection_list(doc.at("renewables"), grid.renewables, 0.30);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("native case: ") + e.what());
    }

    grid.loss_factor = derive_loss_factor(grid);
    validate(grid);
    return grid;
}

std::string serialize_native_case(const GridCase& grid) {
    ordered_json doc;
    doc["name"] = grid.name;
    doc["base_mva"] = grid.base_mva;
    doc["buses"] = ordered_json::array();
    for (const auto& bus : grid.buses) {
        ordered_json b;
        b["id"] = bus.id;
        b["kind"] = to_string(bus.kind);
        if (bus.v_set) b["v_set"] = *bus.v_set;
        b["v_min"] = bus.v_min;
        b["v_max"] = bus.v_max;
        b["g_shunt"] = bus.g_shunt;
        b["b_shunt"] = bus.b_shunt;
        doc["buses"].push_back(b);
    }
    doc["lines"] = ordered_json::array();
    for (const auto& line : grid.lines) {
        ordered_json l;
        l["from"] = line.from_bus;
        l["to"] = line.to_bus;
        l["g"] = line.g;
        l["b"] = line.b;
        l["s_max"] = line.s_max;
        l["monitor"] = line.monitored;
        doc["lines"].push_back(l);
    }
    doc["generators"] = ordered_json::array();
    for (const auto& gen : grid.generators) {
        ordered_json g;
        g["bus"] = gen.bus;
        g["p_min"] = gen.p_min;
        g["p_max"] = gen.p_max;
        g["q_min"] = gen.q_min;
        g["q_max"] = gen.q_max;
        g["c2"] = gen.c2;
        g["c1"] = gen.c1;
        g["c0"] = gen.c0;
        g["controllable"] = gen.controllable;
        g["p_ref"] = gen.p_ref;
        doc["generators"].push_back(g);
    }
    auto dump_injection_list = [](const std::vector<Load>& items) {
        ordered_json arr = ordered_json::array();
        for (const auto& item : items) {
            ordered_json e;
            e["bus"] = item.bus;
            e["p_ref"] = item.p_ref;
            e["q_ref"] = item.q_ref;
            e["sigma"] = item.sigma;
            arr.push_back(e);
        }
        return arr;
    };
    doc["loads"] = dump_injection_list(grid.loads);
    doc["renewables"] = dump_injection_list(grid.renewables);
    return doc.dump(2) + "\n";
}

GridCase load_case(const std::string& path) {
    const std::string text = read_text_file(path);
    if (path.size() >= 2 && path.substr(path.size() - 2) == ".m") {
        return parse_matpower_case(text);
    }
    return parse_native_case(text);
}

}  // namespace gpcc
