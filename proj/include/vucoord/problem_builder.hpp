#pragma once

#include <optional>
#include <vector>

#include "vucoord/cone_program.hpp"
#include "vucoord/network_model.hpp"
#include "vucoord/sequence_flow.hpp"

namespace vucoord {

struct PolygonConfig {
    int sides = 8;
    double shrink = 0.0;          // cos(pi/n)
    double big_m = 0.0;           // user-facing M
    double big_m_internal = 0.0;  // M scaled so deactivated rows are provably loose
    std::vector<double> theta;    // theta_k = 2(k-1)pi/n

    static PolygonConfig make(int sides, double big_m);
};

struct ObjectiveConfig {
    double alpha = 1.0;  // weight on (V-/v_ph_pk)^2
    double lambda = 1.0; // weight on (V+/v_ph_pk - 1)^2
    std::vector<int> regulated; // bus ids
};

/// Frozen DQ voltage components used to linearize the power expressions;
/// one entry per bus 1..m (the builder reads the IBR buses from it).
struct VoltageEstimate {
    std::vector<BusVoltage> bus;

    const BusVoltage& at_bus(int bus_id) const { return bus[static_cast<size_t>(bus_id - 1)]; }
};

/// Decision-vector layout of the built program.
struct VariableMap {
    // per IBR (scenario order): d+, q+, d-, q-
    std::vector<std::array<int, 4>> currents;
    // per bus 1..m: d+, q+, d-, q-
    std::vector<std::array<int, 4>> v_components;
    // per bus 1..m: |V+|, |V-| upper-bound variables
    std::vector<std::array<int, 2>> v_magnitudes;
    // per IBR: P, Q
    std::vector<std::array<int, 2>> power;
    // per regulated bus position r: binary index per side k
    std::vector<std::vector<int>> side_binaries;
    std::vector<int> regulated; // bus ids aligned with side_binaries
    std::vector<char> ibr_enabled;

    InjectionSet extract_injections(const Eigen::VectorXd& v) const;
};

struct BuiltProblem {
    MiConvexProblem problem;
    VariableMap vars;
    PolygonConfig polygon;
    ObjectiveConfig objective;
};

struct BuilderOptions {
    std::optional<int> polygon_sides;  // override scenario value
    std::optional<double> big_m;       // override scenario value
    bool tighten_sides = true;         // fix geometrically impossible side binaries to 0
};

/// Assembles the mixed-integer convex program for one frozen voltage
/// estimate. The build steps are exposed individually so tests can probe
/// each constraint family; build() runs them in order.
class ProblemBuilder {
public:
    ProblemBuilder(const Scenario& scenario, const SequenceNetworkModel& model,
                   BuilderOptions options = {});

    BuiltProblem build(const VoltageEstimate& vhat, const ObjectiveConfig& objective) const;

    // individual steps, operating on a partially built problem
    void create_variables(BuiltProblem& bp) const;
    void add_voltage_coupling(BuiltProblem& bp) const;
    void add_voltage_soc(BuiltProblem& bp) const;
    void add_current_soc(BuiltProblem& bp) const;
    void add_polygon_tightening(BuiltProblem& bp) const;
    void add_power_polygon(BuiltProblem& bp, const VoltageEstimate& vhat) const;
    void build_objective(BuiltProblem& bp, const ObjectiveConfig& config) const;

    const Scenario& scenario() const { return scenario_; }
    const SequenceNetworkModel& model() const { return model_; }

private:
    const Scenario& scenario_;
    const SequenceNetworkModel& model_;
    BuilderOptions options_;
};

} // namespace vucoord
