#pragma once

#include <complex>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vucoord/network_model.hpp"
#include "vucoord/scenario.hpp"

namespace vucoord {

/// Sequence current components of one IBR in the shared DQ+/DQ- frames.
struct SequenceCurrents {
    double d_plus = 0.0;
    double q_plus = 0.0;
    double d_minus = 0.0;
    double q_minus = 0.0;

    std::complex<double> plus() const { return {d_plus, q_plus}; }
    std::complex<double> minus() const { return {d_minus, q_minus}; }
};

/// Candidate injections, aligned with the scenario's IBR list.
struct InjectionSet {
    std::vector<SequenceCurrents> currents;
};

struct BusVoltage {
    double d_plus = 0.0;
    double q_plus = 0.0;
    double d_minus = 0.0;
    double q_minus = 0.0;

    std::complex<double> plus() const { return {d_plus, q_plus}; }
    std::complex<double> minus() const { return {d_minus, q_minus}; }
    double mag_plus() const { return std::abs(plus()); }
    double mag_minus() const { return std::abs(minus()); }
    double vuf() const { return mag_plus() > 0.0 ? mag_minus() / mag_plus() : 0.0; }
};

/// Exact nodal voltages, one entry per bus 1..m.
struct FlowResult {
    std::vector<BusVoltage> bus;

    const BusVoltage& at_bus(int bus_id) const { return bus[static_cast<size_t>(bus_id - 1)]; }
};

/// Exact linear sequence power flow: V_i = sum_j H_ij V0 + sum_j Zeq_ij I_j
/// per sequence, with the negative sequence using conjugated matrices.
FlowResult solve_sequence_flow(const SequenceNetworkModel& model, const Scenario& scenario,
                               const InjectionSet& inj);

/// Splits complex nodal voltages into the four DQ component sets.
/// Reconstructing d + jq reproduces the complex inputs exactly.
FlowResult project_dq(const Eigen::VectorXcd& v_plus, const Eigen::VectorXcd& v_minus);

enum class PhaseId { a = 0, b = 1, c = 2 };

/// Instantaneous phase current at frame angle delta (time-domain sample).
double phase_current_sample(const SequenceCurrents& cur, PhaseId phase, double delta);

/// Closed-form steady-state phase current magnitude (Cauchy elimination of
/// the frame angle).
double phase_current_magnitude(const SequenceCurrents& cur, PhaseId phase);

/// Sampling oracle: max |i_phase(delta)| over a uniform grid with
/// golden-section refinement around the best sample.
double phase_current_sampled_max(const SequenceCurrents& cur, PhaseId phase, int samples = 3600);

struct PowerOutput {
    double p = 0.0;
    double q = 0.0;
    double s() const { return std::hypot(p, q); }
};

/// Active/reactive power of one IBR from its terminal voltage components.
PowerOutput apparent_power(const BusVoltage& v, const SequenceCurrents& cur);

struct ConstraintMargin {
    std::string kind;     // "phase_current", "apparent_power", "p_floor", "q_floor", "voltage_bound"
    std::string detail;   // e.g. phase letter or sequence
    int bus = 0;          // network bus (0 when not applicable)
    double value = 0.0;   // attained value
    double limit = 0.0;   // bound
    double margin = 0.0;  // limit - value for upper bounds, value - limit for floors
    bool violated = false;
    bool polygon_gap = false; // inside the exact cap but outside the inscribed polygon
};

struct VerifyTolerances {
    double current = 1e-6;
    double voltage = 1e-6;
    double power = 1e-3; // allows for the frozen-voltage linearization of P/Q
};

struct VerificationReport {
    bool feasible = true;
    std::vector<ConstraintMargin> entries;
    FlowResult flow;
    double worst_violation = 0.0;
    double j_common = 0.0; // alpha = lambda = 1 objective on exact voltages

    nlohmann::json to_json() const;
};

/// Re-checks a candidate injection against the exact, non-relaxed
/// constraint set and reports per-constraint margins. Infeasibility is
/// data, not an error.
VerificationReport verify_solution(const Scenario& scenario, const SequenceNetworkModel& model,
                                   const InjectionSet& inj, const VerifyTolerances& tol = {});

/// Quadratic unbalance objective evaluated on exact voltages.
double evaluate_objective(const FlowResult& flow, const std::vector<int>& regulated_buses,
                          double alpha, double lambda, double v_ph_pk);

} // namespace vucoord
