#include "vucoord/scenario.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vucoord/errors.hpp"

namespace vucoord {

using nlohmann::json;

std::vector<int> Scenario::ibr_buses() const {
    std::vector<int> out;
    out.reserve(ibrs.size());
    for (const auto& ibr : ibrs) out.push_back(ibr.bus);
    return out;
}

std::vector<int> Scenario::regulated_buses() const {
    switch (regulated_kind) {
    case RegulatedSetKind::ibr_buses:
        return ibr_buses();
    case RegulatedSetKind::all_buses: {
        std::vector<int> out(static_cast<size_t>(bus_count));
        for (int i = 0; i < bus_count; ++i) out[static_cast<size_t>(i)] = i + 1;
        return out;
    }
    case RegulatedSetKind::explicit_list:
        return regulated_list;
    }
    return {};
}

int Scenario::ibr_index_of_bus(int bus) const {
    for (size_t i = 0; i < ibrs.size(); ++i)
        if (ibrs[i].bus == bus) return static_cast<int>(i);
    return -1;
}

void Scenario::validate() const {
    if (bus_count < 1) throw ValidationError("m must be >= 1");
    if (v_ph_pk <= 0.0) throw ValidationError("v_ph_pk must be > 0");
    if (polygon_sides < 3) throw ValidationError("polygon_sides must be >= 3");
    if (big_m < 0.0) throw ValidationError("big_m must be >= 0");
    if (slack.v0_plus.magnitude < 0.0 || slack.v0_minus.magnitude < 0.0)
        throw ValidationError("slack magnitudes must be >= 0");

    for (size_t l = 0; l < lines.size(); ++l) {
        const Line& ln = lines[l];
        const std::string tag = "line " + std::to_string(l);
        if (ln.from < 0 || ln.from > bus_count || ln.to < 1 || ln.to > bus_count)
            throw ValidationError(tag + ": bus ids out of range");
        if (ln.from == ln.to) throw ValidationError(tag + ": self loop");
        if (ln.r < 0.0) throw ValidationError(tag + ": negative resistance");
    }

    // Tree check: every bus 1..m reachable from bus 0 through exactly one path.
    std::vector<std::vector<int>> adjacency(static_cast<size_t>(bus_count) + 1);
    for (size_t l = 0; l < lines.size(); ++l) {
        adjacency[static_cast<size_t>(lines[l].from)].push_back(static_cast<int>(l));
        adjacency[static_cast<size_t>(lines[l].to)].push_back(static_cast<int>(l));
    }
    std::vector<int> seen(static_cast<size_t>(bus_count) + 1, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::vector<int> line_used(lines.size(), 0);
    while (!stack.empty()) {
        int bus = stack.back();
        stack.pop_back();
        for (int l : adjacency[static_cast<size_t>(bus)]) {
            if (line_used[static_cast<size_t>(l)]) continue;
            line_used[static_cast<size_t>(l)] = 1;
            int other = lines[static_cast<size_t>(l)].from == bus ? lines[static_cast<size_t>(l)].to
                                                                  : lines[static_cast<size_t>(l)].from;
            if (seen[static_cast<size_t>(other)])
                throw ValidationError("cycle detected at line " + std::to_string(l) +
                                      " (buses " + std::to_string(lines[static_cast<size_t>(l)].from) + "-" +
                                      std::to_string(lines[static_cast<size_t>(l)].to) + ")");
            seen[static_cast<size_t>(other)] = 1;
            stack.push_back(other);
        }
    }
    for (int i = 1; i <= bus_count; ++i)
        if (!seen[static_cast<size_t>(i)])
            throw ValidationError("bus " + std::to_string(i) + " is disconnected from the slack");

    for (const auto& [bus, y] : loads) {
        (void)y;
        if (bus < 1 || bus > bus_count)
            throw ValidationError("load bus " + std::to_string(bus) + " out of range");
    }

    std::set<int> ibr_seen;
    for (size_t i = 0; i < ibrs.size(); ++i) {
        const IbrSpec& ibr = ibrs[i];
        const std::string tag = "ibr " + std::to_string(i);
        if (ibr.bus < 1 || ibr.bus > bus_count) throw ValidationError(tag + ": bus out of range");
        if (!ibr_seen.insert(ibr.bus).second)
            throw ValidationError(tag + ": duplicate IBR at bus " + std::to_string(ibr.bus));
        if (ibr.i_max < 0.0) throw ValidationError(tag + ": i_max must be >= 0");
        if (ibr.s_max < 0.0) throw ValidationError(tag + ": s_max must be >= 0");
        if (ibr.p_min > ibr.s_max) throw ValidationError(tag + ": p_min exceeds s_max");
        if (ibr.q_min > ibr.s_max) throw ValidationError(tag + ": q_min exceeds s_max");
    }

    if (regulated_kind == RegulatedSetKind::explicit_list) {
        if (regulated_list.empty()) throw ValidationError("regulated_set list is empty");
        std::set<int> seen_regulated;
        for (int bus : regulated_list) {
            if (bus < 1 || bus > bus_count)
                throw ValidationError("regulated bus " + std::to_string(bus) + " out of range");
            if (!seen_regulated.insert(bus).second)
                throw ValidationError("regulated bus " + std::to_string(bus) + " listed twice");
        }
    }
}

namespace {

double require_number(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw ParseError(ctx + ": missing or non-numeric field '" + key + "'");
    return j.at(key).get<double>();
}

int require_int(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key) || !j.at(key).is_number_integer())
        throw ParseError(ctx + ": missing or non-integer field '" + key + "'");
    return j.at(key).get<int>();
}

Phasor parse_phasor(const json& j, const std::string& ctx) {
    return Phasor::from_degrees(require_number(j, "mag", ctx), require_number(j, "deg", ctx));
}

} // namespace

Scenario Scenario::from_json(const json& j) {
    if (!j.is_object()) throw ParseError("scenario: top level must be a JSON object");
    Scenario s;
    s.bus_count = require_int(j, "m", "scenario");
    s.v_ph_pk = j.contains("v_ph_pk") ? require_number(j, "v_ph_pk", "scenario") : 1.0;
    s.polygon_sides = j.contains("polygon_sides") ? require_int(j, "polygon_sides", "scenario") : 8;
    s.big_m = j.contains("big_m") ? require_number(j, "big_m", "scenario") : 0.0;

    if (!j.contains("slack") || !j.at("slack").is_object())
        throw ParseError("scenario: missing 'slack' object");
    s.slack.v0_plus = parse_phasor(j.at("slack").at("v0_plus"), "slack.v0_plus");
    s.slack.v0_minus = parse_phasor(j.at("slack").at("v0_minus"), "slack.v0_minus");

    if (!j.contains("lines") || !j.at("lines").is_array())
        throw ParseError("scenario: missing 'lines' array");
    for (const auto& lj : j.at("lines")) {
        Line ln;
        ln.from = require_int(lj, "from", "line");
        ln.to = require_int(lj, "to", "line");
        ln.r = require_number(lj, "r", "line");
        ln.x = require_number(lj, "x", "line");
        s.lines.push_back(ln);
    }

    if (j.contains("loads")) {
        for (const auto& lj : j.at("loads")) {
            int bus = require_int(lj, "bus", "load");
            s.loads[bus] = {require_number(lj, "g", "load"), require_number(lj, "b", "load")};
        }
    }

    if (j.contains("ibrs")) {
        for (const auto& ij : j.at("ibrs")) {
            IbrSpec ibr;
            ibr.bus = require_int(ij, "bus", "ibr");
            ibr.i_max = require_number(ij, "i_max", "ibr");
            ibr.s_max = require_number(ij, "s_max", "ibr");
            ibr.p_min = require_number(ij, "p_min", "ibr");
            ibr.q_min = require_number(ij, "q_min", "ibr");
            s.ibrs.push_back(ibr);
        }
    }

    if (j.contains("regulated_set")) {
        const json& r = j.at("regulated_set");
        if (r.is_string()) {
            const std::string kind = r.get<std::string>();
            if (kind == "all_buses") s.regulated_kind = RegulatedSetKind::all_buses;
            else if (kind == "ibr_buses") s.regulated_kind = RegulatedSetKind::ibr_buses;
            else throw ParseError("regulated_set: unknown keyword '" + kind + "'");
        } else if (r.is_array()) {
            s.regulated_kind = RegulatedSetKind::explicit_list;
            for (const auto& b : r) s.regulated_list.push_back(b.get<int>());
        } else {
            throw ParseError("regulated_set: must be an array or keyword string");
        }
    }

    s.validate();
    return s;
}

Scenario Scenario::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scenario JSON: ") + e.what());
    }
    return from_json(j);
}

Scenario Scenario::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

json Scenario::to_json() const {
    json j;
    j["m"] = bus_count;
    j["v_ph_pk"] = v_ph_pk;
    j["polygon_sides"] = polygon_sides;
    j["big_m"] = effective_big_m();
    j["slack"] = {
        {"v0_plus", {{"mag", slack.v0_plus.magnitude}, {"deg", slack.v0_plus.degrees()}}},
        {"v0_minus", {{"mag", slack.v0_minus.magnitude}, {"deg", slack.v0_minus.degrees()}}},
    };
    j["lines"] = json::array();
    for (const auto& ln : lines)
        j["lines"].push_back({{"from", ln.from}, {"to", ln.to}, {"r", ln.r}, {"x", ln.x}});
    j["loads"] = json::array();
    for (const auto& [bus, y] : loads)
        j["loads"].push_back({{"bus", bus}, {"g", y.real()}, {"b", y.imag()}});
    j["ibrs"] = json::array();
    for (const auto& ibr : ibrs)
        j["ibrs"].push_back({{"bus", ibr.bus},
                             {"i_max", ibr.i_max},
                             {"s_max", ibr.s_max},
                             {"p_min", ibr.p_min},
                             {"q_min", ibr.q_min}});
    switch (regulated_kind) {
    case RegulatedSetKind::ibr_buses: j["regulated_set"] = "ibr_buses"; break;
    case RegulatedSetKind::all_buses: j["regulated_set"] = "all_buses"; break;
    case RegulatedSetKind::explicit_list: j["regulated_set"] = regulated_list; break;
    }
    return j;
}

std::string Scenario::to_json_text(int indent) const { return to_json().dump(indent); }

std::string Scenario::digest() const {
    const std::string canonical = to_json().dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace vucoord
