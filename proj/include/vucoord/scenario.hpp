#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vucoord/phasor.hpp"

namespace vucoord {

/// One feeder segment. Buses are numbered 0 (slack) .. m; a scenario's
/// lines must form a tree rooted at bus 0 spanning buses 1..m.
struct Line {
    int from = 0;
    int to = 0;
    double r = 0.0; // pu
    double x = 0.0; // pu

    std::complex<double> impedance() const { return {r, x}; }
};

struct IbrSpec {
    int bus = 0;
    double i_max = 0.0; // steady-state phase current magnitude limit, pu
    double s_max = 0.0; // rated apparent power, pu
    double p_min = 0.0; // active power floor (may be negative), pu
    double q_min = 0.0; // reactive power floor, pu
};

struct SlackVoltage {
    Phasor v0_plus;
    Phasor v0_minus;
};

enum class RegulatedSetKind { ibr_buses, all_buses, explicit_list };

/// Full per-unit network description: buses, lines, constant-admittance
/// loads, IBR ratings, slack sequence phasors and model knobs.
/// Immutable after construction/validation; safe to share across threads.
struct Scenario {
    int bus_count = 0;      // m; buses are 1..m, slack is bus 0
    double v_ph_pk = 1.0;   // rated peak phase voltage, pu
    int polygon_sides = 8;  // n
    double big_m = 0.0;     // 0 -> defaults to v_ph_pk
    SlackVoltage slack;
    std::vector<Line> lines;
    std::map<int, std::complex<double>> loads; // bus -> Y_L = g + jb
    std::vector<IbrSpec> ibrs;
    RegulatedSetKind regulated_kind = RegulatedSetKind::ibr_buses;
    std::vector<int> regulated_list; // used when regulated_kind == explicit_list

    std::vector<int> ibr_buses() const;
    std::vector<int> regulated_buses() const;
    double effective_big_m() const { return big_m > 0.0 ? big_m : v_ph_pk; }
    int ibr_index_of_bus(int bus) const; // -1 if the bus has no IBR

    /// Throws ValidationError with a field-level message on bad data.
    void validate() const;

    static Scenario from_json(const nlohmann::json& j);
    static Scenario from_json_text(const std::string& text);
    static Scenario load_file(const std::string& path);
    nlohmann::json to_json() const;
    std::string to_json_text(int indent = 2) const;

    /// FNV-1a hash of the canonical serialization; used to tag reports.
    std::string digest() const;
};

} // namespace vucoord
