#include "vucoord/sequence_flow.hpp"

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "vucoord/errors.hpp"

namespace vucoord {

using std::numbers::pi;

FlowResult solve_sequence_flow(const SequenceNetworkModel& model, const Scenario& scenario,
                               const InjectionSet& inj) {
    const int m = model.bus_count();
    if (inj.currents.size() != scenario.ibrs.size())
        throw ValidationError("injection set size does not match the scenario's IBR list");

    Eigen::VectorXcd i_plus = Eigen::VectorXcd::Zero(m);
    Eigen::VectorXcd i_minus = Eigen::VectorXcd::Zero(m);
    for (size_t s = 0; s < scenario.ibrs.size(); ++s) {
        const int row = scenario.ibrs[s].bus - 1;
        i_plus(row) += inj.currents[s].plus();
        i_minus(row) += inj.currents[s].minus();
    }

    const std::complex<double> v0p = scenario.slack.v0_plus.to_complex();
    const std::complex<double> v0m = scenario.slack.v0_minus.to_complex();

    Eigen::VectorXcd v_plus = model.h.rowwise().sum() * v0p + model.z_eq * i_plus;
    Eigen::VectorXcd v_minus =
        model.h.conjugate().rowwise().sum() * v0m + model.z_eq.conjugate() * i_minus;

    return project_dq(v_plus, v_minus);
}

FlowResult project_dq(const Eigen::VectorXcd& v_plus, const Eigen::VectorXcd& v_minus) {
    FlowResult out;
    out.bus.resize(static_cast<size_t>(v_plus.size()));
    for (Eigen::Index i = 0; i < v_plus.size(); ++i) {
        BusVoltage& v = out.bus[static_cast<size_t>(i)];
        v.d_plus = v_plus(i).real();
        v.q_plus = v_plus(i).imag();
        v.d_minus = v_minus(i).real();
        v.q_minus = v_minus(i).imag();
    }
    return out;
}

double phase_current_sample(const SequenceCurrents& cur, PhaseId phase, double delta) {
    // Positive sequence rotates a->b->c, negative a->c->b; both frames are
    // aligned with phase a at delta = 0.
    static constexpr double shift[3] = {0.0, -2.0 * pi / 3.0, 2.0 * pi / 3.0};
    const double sp = shift[static_cast<int>(phase)];
    const double sm = -sp;
    return cur.d_plus * std::cos(delta + sp) - cur.q_plus * std::sin(delta + sp) +
           cur.d_minus * std::cos(delta + sm) + cur.q_minus * std::sin(delta + sm);
}

double phase_current_magnitude(const SequenceCurrents& cur, PhaseId phase) {
    const double c23 = std::cos(4.0 * pi / 3.0);
    const double s23 = std::sin(4.0 * pi / 3.0);
    double u = 0.0, w = 0.0;
    switch (phase) {
    case PhaseId::a:
        u = cur.d_plus + cur.d_minus;
        w = cur.q_plus - cur.q_minus;
        break;
    case PhaseId::b:
        u = cur.d_plus + cur.d_minus * c23 + cur.q_minus * s23;
        w = cur.q_plus + cur.d_minus * s23 - cur.q_minus * c23;
        break;
    case PhaseId::c:
        u = cur.d_plus * c23 + cur.d_minus - cur.q_plus * s23;
        w = cur.q_plus * c23 + cur.d_plus * s23 - cur.q_minus;
        break;
    }
    return std::hypot(u, w);
}

double phase_current_sampled_max(const SequenceCurrents& cur, PhaseId phase, int samples) {
    double best = 0.0;
    double best_delta = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double delta = 2.0 * pi * k / samples;
        const double v = std::abs(phase_current_sample(cur, phase, delta));
        if (v > best) {
            best = v;
            best_delta = delta;
        }
    }
    // golden-section refinement on |i(delta)| around the best grid point
    const double span = 2.0 * pi / samples;
    double lo = best_delta - span;
    double hi = best_delta + span;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - gr * (hi - lo);
    double x2 = lo + gr * (hi - lo);
    double f1 = std::abs(phase_current_sample(cur, phase, x1));
    double f2 = std::abs(phase_current_sample(cur, phase, x2));
    for (int it = 0; it < 60; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = std::abs(phase_current_sample(cur, phase, x2));
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = std::abs(phase_current_sample(cur, phase, x1));
        }
    }
    return std::max(best, std::max(f1, f2));
}

PowerOutput apparent_power(const BusVoltage& v, const SequenceCurrents& cur) {
    PowerOutput out;
    out.p = 1.5 * (v.d_plus * cur.d_plus + v.q_plus * cur.q_plus + v.d_minus * cur.d_minus +
                   v.q_minus * cur.q_minus);
    out.q = 1.5 * (v.q_plus * cur.d_plus - v.d_plus * cur.q_plus + v.q_minus * cur.d_minus -
                   v.d_minus * cur.q_minus);
    return out;
}

double evaluate_objective(const FlowResult& flow, const std::vector<int>& regulated_buses,
                          double alpha, double lambda, double v_ph_pk) {
    double j = 0.0;
    for (int bus : regulated_buses) {
        const BusVoltage& v = flow.at_bus(bus);
        const double neg = v.mag_minus() / v_ph_pk;
        const double pos = v.mag_plus() / v_ph_pk - 1.0;
        j += alpha * neg * neg + lambda * pos * pos;
    }
    return j;
}

VerificationReport verify_solution(const Scenario& scenario, const SequenceNetworkModel& model,
                                   const InjectionSet& inj, const VerifyTolerances& tol) {
    VerificationReport report;
    report.flow = solve_sequence_flow(model, scenario, inj);

    auto push = [&report](ConstraintMargin entry, double tolerance) {
        entry.violated = entry.margin < -tolerance;
        if (entry.violated) {
            report.feasible = false;
            report.worst_violation = std::max(report.worst_violation, -entry.margin);
        }
        report.entries.push_back(std::move(entry));
    };

    static constexpr const char* phase_names[3] = {"a", "b", "c"};
    const double shrink = std::cos(pi / scenario.polygon_sides);

    for (size_t s = 0; s < scenario.ibrs.size(); ++s) {
        const IbrSpec& ibr = scenario.ibrs[s];
        const SequenceCurrents& cur = inj.currents[s];
        const BusVoltage& v = report.flow.at_bus(ibr.bus);

        for (int ph = 0; ph < 3; ++ph) {
            ConstraintMargin e;
            e.kind = "phase_current";
            e.detail = phase_names[ph];
            e.bus = ibr.bus;
            e.value = phase_current_magnitude(cur, static_cast<PhaseId>(ph));
            e.limit = ibr.i_max;
            e.margin = e.limit - e.value;
            push(std::move(e), tol.current);
        }

        const PowerOutput pq = apparent_power(v, cur);
        {
            ConstraintMargin e;
            e.kind = "apparent_power";
            e.bus = ibr.bus;
            e.value = pq.s();
            e.limit = ibr.s_max;
            e.margin = e.limit - e.value;
            e.polygon_gap = !(e.margin < -tol.power) && e.value > ibr.s_max * shrink;
            push(std::move(e), tol.power);
        }
        {
            ConstraintMargin e;
            e.kind = "p_floor";
            e.bus = ibr.bus;
            e.value = pq.p;
            e.limit = ibr.p_min;
            e.margin = e.value - e.limit;
            push(std::move(e), tol.power);
        }
        {
            ConstraintMargin e;
            e.kind = "q_floor";
            e.bus = ibr.bus;
            e.value = pq.q;
            e.limit = ibr.q_min;
            e.margin = e.value - e.limit;
            push(std::move(e), tol.power);
        }
    }

    for (int bus = 1; bus <= scenario.bus_count; ++bus) {
        const BusVoltage& v = report.flow.at_bus(bus);
        for (int seq = 0; seq < 2; ++seq) {
            ConstraintMargin e;
            e.kind = "voltage_bound";
            e.detail = seq == 0 ? "plus" : "minus";
            e.bus = bus;
            e.value = seq == 0 ? v.mag_plus() : v.mag_minus();
            e.limit = scenario.v_ph_pk;
            e.margin = e.limit - e.value;
            push(std::move(e), tol.voltage);
        }
    }

    report.j_common =
        evaluate_objective(report.flow, scenario.regulated_buses(), 1.0, 1.0, scenario.v_ph_pk);
    return report;
}

nlohmann::json VerificationReport::to_json() const {
    nlohmann::json j;
    j["feasible"] = feasible;
    j["worst_violation"] = worst_violation;
    j["j_common"] = j_common;
    j["constraints"] = nlohmann::json::array();
    for (const auto& e : entries) {
        j["constraints"].push_back({{"kind", e.kind},
                                    {"detail", e.detail},
                                    {"bus", e.bus},
                                    {"value", e.value},
                                    {"limit", e.limit},
                                    {"margin", e.margin},
                                    {"violated", e.violated},
                                    {"polygon_gap", e.polygon_gap}});
    }
    j["buses"] = nlohmann::json::array();
    for (size_t i = 0; i < flow.bus.size(); ++i) {
        const BusVoltage& v = flow.bus[i];
        j["buses"].push_back({{"bus", static_cast<int>(i + 1)},
                              {"v_plus", v.mag_plus()},
                              {"v_minus", v.mag_minus()},
                              {"vuf", v.vuf()}});
    }
    return j;
}

} // namespace vucoord
