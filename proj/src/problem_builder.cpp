#include "vucoord/problem_builder.hpp"

#include <cmath>
#include <numbers>

#include "vucoord/errors.hpp"

namespace vucoord {

using std::numbers::pi;

namespace {
constexpr double kDisabledCapacity = 1e-12;
}

PolygonConfig PolygonConfig::make(int sides, double big_m) {
    PolygonConfig cfg;
    cfg.sides = sides;
    cfg.shrink = std::cos(pi / sides);
    cfg.big_m = big_m;
    // Worst case of V+ cos(pi/n) - proj over the bounded voltage box is
    // big_m * (1 + cos(pi/n)); scaling by 1 + 1/cos(pi/n) keeps every
    // deactivated row strictly loose.
    cfg.big_m_internal = big_m * (1.0 + 1.0 / cfg.shrink);
    cfg.theta.resize(static_cast<size_t>(sides));
    for (int k = 0; k < sides; ++k)
        cfg.theta[static_cast<size_t>(k)] = 2.0 * k * pi / sides;
    return cfg;
}

InjectionSet VariableMap::extract_injections(const Eigen::VectorXd& v) const {
    InjectionSet inj;
    inj.currents.resize(currents.size());
    for (size_t s = 0; s < currents.size(); ++s) {
        inj.currents[s].d_plus = v(currents[s][0]);
        inj.currents[s].q_plus = v(currents[s][1]);
        inj.currents[s].d_minus = v(currents[s][2]);
        inj.currents[s].q_minus = v(currents[s][3]);
    }
    return inj;
}

ProblemBuilder::ProblemBuilder(const Scenario& scenario, const SequenceNetworkModel& model,
                               BuilderOptions options)
    : scenario_(scenario), model_(model), options_(options) {}

void ProblemBuilder::create_variables(BuiltProblem& bp) const {
    MiConvexProblem& p = bp.problem;
    const int m = scenario_.bus_count;
    const double vpk = scenario_.v_ph_pk;

    bp.vars.currents.resize(scenario_.ibrs.size());
    bp.vars.power.resize(scenario_.ibrs.size());
    bp.vars.ibr_enabled.resize(scenario_.ibrs.size());
    static constexpr const char* cur_suffix[4] = {"id_p", "iq_p", "id_m", "iq_m"};
    for (size_t s = 0; s < scenario_.ibrs.size(); ++s) {
        const IbrSpec& ibr = scenario_.ibrs[s];
        const bool enabled = ibr.i_max > kDisabledCapacity && ibr.s_max > kDisabledCapacity;
        bp.vars.ibr_enabled[s] = enabled ? 1 : 0;
        const std::string tag = "ibr" + std::to_string(ibr.bus) + ".";
        for (int c = 0; c < 4; ++c) {
            int idx = p.add_variable(tag + cur_suffix[c]);
            if (!enabled) p.fix_variable(idx, 0.0);
            bp.vars.currents[s][static_cast<size_t>(c)] = idx;
        }
    }

    bp.vars.v_components.resize(static_cast<size_t>(m));
    bp.vars.v_magnitudes.resize(static_cast<size_t>(m));
    static constexpr const char* comp_suffix[4] = {"vd_p", "vq_p", "vd_m", "vq_m"};
    for (int i = 0; i < m; ++i) {
        const std::string tag = "bus" + std::to_string(i + 1) + ".";
        for (int c = 0; c < 4; ++c)
            bp.vars.v_components[static_cast<size_t>(i)][static_cast<size_t>(c)] =
                p.add_variable(tag + comp_suffix[c]);
        bp.vars.v_magnitudes[static_cast<size_t>(i)][0] = p.add_variable(tag + "vmag_p", 0.0, vpk);
        bp.vars.v_magnitudes[static_cast<size_t>(i)][1] = p.add_variable(tag + "vmag_m", 0.0, vpk);
    }

    for (size_t s = 0; s < scenario_.ibrs.size(); ++s) {
        const std::string tag = "ibr" + std::to_string(scenario_.ibrs[s].bus) + ".";
        bp.vars.power[s][0] = p.add_variable(tag + "p");
        bp.vars.power[s][1] = p.add_variable(tag + "q");
        if (!bp.vars.ibr_enabled[s]) {
            p.fix_variable(bp.vars.power[s][0], 0.0);
            p.fix_variable(bp.vars.power[s][1], 0.0);
        }
    }

    bp.vars.regulated = scenario_.regulated_buses();
    bp.vars.side_binaries.resize(bp.vars.regulated.size());
    for (size_t r = 0; r < bp.vars.regulated.size(); ++r) {
        bp.vars.side_binaries[r].resize(static_cast<size_t>(bp.polygon.sides));
        const std::string tag = "bus" + std::to_string(bp.vars.regulated[r]) + ".side";
        for (int k = 0; k < bp.polygon.sides; ++k)
            bp.vars.side_binaries[r][static_cast<size_t>(k)] =
                p.add_variable(tag + std::to_string(k + 1), 0.0, 1.0, /*binary=*/true);
    }
}

void ProblemBuilder::add_voltage_coupling(BuiltProblem& bp) const {
    MiConvexProblem& p = bp.problem;
    const int m = scenario_.bus_count;
    const std::complex<double> v0p = scenario_.slack.v0_plus.to_complex();
    const std::complex<double> v0m = scenario_.slack.v0_minus.to_complex();

    // slack terms: sum_j H_ij V0+ and sum_j conj(H_ij) V0-
    const Eigen::VectorXcd slack_plus = model_.h.rowwise().sum() * v0p;
    const Eigen::VectorXcd slack_minus = model_.h.conjugate().rowwise().sum() * v0m;

    for (int i = 0; i < m; ++i) {
        LinearExpr rows[4];
        for (int c = 0; c < 4; ++c)
            rows[c].push_back({bp.vars.v_components[static_cast<size_t>(i)][static_cast<size_t>(c)], 1.0});

        for (size_t s = 0; s < scenario_.ibrs.size(); ++s) {
            const int j = scenario_.ibrs[s].bus - 1;
            const double req = model_.z_eq(i, j).real();
            const double xeq = model_.z_eq(i, j).imag();
            const auto& cur = bp.vars.currents[s];
            // positive sequence: V = ... + (R + jX)(Id + jIq)
            rows[0].push_back({cur[0], -req});
            rows[0].push_back({cur[1], xeq});
            rows[1].push_back({cur[1], -req});
            rows[1].push_back({cur[0], -xeq});
            // negative sequence: conjugated impedance
            rows[2].push_back({cur[2], -req});
            rows[2].push_back({cur[3], -xeq});
            rows[3].push_back({cur[3], -req});
            rows[3].push_back({cur[2], xeq});
        }

        const std::string tag = "vloop.bus" + std::to_string(i + 1) + ".";
        p.add_equality(std::move(rows[0]), slack_plus(i).real(), tag + "vd_p");
        p.add_equality(std::move(rows[1]), slack_plus(i).imag(), tag + "vq_p");
        p.add_equality(std::move(rows[2]), slack_minus(i).real(), tag + "vd_m");
        p.add_equality(std::move(rows[3]), slack_minus(i).imag(), tag + "vq_m");
    }
}

void ProblemBuilder::add_voltage_soc(BuiltProblem& bp) const {
    MiConvexProblem& p = bp.problem;
    for (int i = 0; i < scenario_.bus_count; ++i) {
        const auto& comp = bp.vars.v_components[static_cast<size_t>(i)];
        const auto& mag = bp.vars.v_magnitudes[static_cast<size_t>(i)];
        for (int seq = 0; seq < 2; ++seq) {
            SocConstraint soc;
            soc.arg_rows = {{{comp[static_cast<size_t>(2 * seq)], 1.0}},
                            {{comp[static_cast<size_t>(2 * seq + 1)], 1.0}}};
            soc.arg_offsets = {0.0, 0.0};
            soc.bound = {{mag[static_cast<size_t>(seq)], 1.0}};
            soc.label = "vmag.bus" + std::to_string(i + 1) + (seq == 0 ? ".plus" : ".minus");
            p.add_soc(std::move(soc));
        }
    }
}

void ProblemBuilder::add_current_soc(BuiltProblem& bp) const {
    MiConvexProblem& p = bp.problem;
    const double c23 = std::cos(4.0 * pi / 3.0);
    const double s23 = std::sin(4.0 * pi / 3.0);

    for (size_t s = 0; s < scenario_.ibrs.size(); ++s) {
        if (!bp.vars.ibr_enabled[s]) continue;
        const IbrSpec& ibr = scenario_.ibrs[s];
        const auto& cur = bp.vars.currents[s];
        const int idp = cur[0], iqp = cur[1], idm = cur[2], iqm = cur[3];

        auto add_phase = [&](const char* name, LinearExpr u, LinearExpr w) {
            SocConstraint soc;
            soc.arg_rows = {std::move(u), std::move(w)};
            soc.arg_offsets = {0.0, 0.0};
            soc.bound_offset = ibr.i_max;
            soc.label = "iphase.bus" + std::to_string(ibr.bus) + "." + name;
            p.add_soc(std::move(soc));
        };

        add_phase("a", {{idp, 1.0}, {idm, 1.0}}, {{iqp, 1.0}, {iqm, -1.0}});
        add_phase("b", {{idp, 1.0}, {idm, c23}, {iqm, s23}},
                  {{iqp, 1.0}, {idm, s23}, {iqm, -c23}});
        add_phase("c", {{idp, c23}, {idm, 1.0}, {iqp, -s23}},
                  {{iqp, c23}, {idp, s23}, {iqm, -1.0}});
    }
}

void ProblemBuilder::add_polygon_tightening(BuiltProblem& bp) const {
    MiConvexProblem& p = bp.problem;
    const PolygonConfig& poly = bp.polygon;

    // Side-domain tightening: achievable bus voltages live inside a disk
    // around the zero-injection voltage (each sequence current magnitude is
    // bounded by i_max through the three phase cones). A side whose
    // feasibility window theta_k +- pi/n misses the disk's angular interval
    // can never be selected in a feasible integral solution.
    const std::complex<double> v0p = scenario_.slack.v0_plus.to_complex();
    const Eigen::VectorXcd center = model_.h.rowwise().sum() * v0p;

    for (size_t r = 0; r < bp.vars.regulated.size(); ++r) {
        const int bus = bp.vars.regulated[r];
        const auto& comp = bp.vars.v_components[static_cast<size_t>(bus - 1)];
        const int vmag_p = bp.vars.v_magnitudes[static_cast<size_t>(bus - 1)][0];

        for (int k = 0; k < poly.sides; ++k) {
            const double ct = std::cos(poly.theta[static_cast<size_t>(k)]);
            const double st = std::sin(poly.theta[static_cast<size_t>(k)]);
            const int bin = bp.vars.side_binaries[r][static_cast<size_t>(k)];
            LinearExpr row = {{vmag_p, poly.shrink},
                              {comp[0], -ct},
                              {comp[1], -st},
                              {bin, poly.big_m_internal}};
            p.add_inequality(std::move(row), poly.big_m_internal,
                             "poly.bus" + std::to_string(bus) + ".side" + std::to_string(k + 1));
        }

        LinearExpr onehot;
        for (int bin : bp.vars.side_binaries[r]) onehot.push_back({bin, 1.0});
        p.add_equality(std::move(onehot), 1.0, "onehot.bus" + std::to_string(bus));
        p.add_onehot_group(bp.vars.side_binaries[r]);

        if (!options_.tighten_sides) continue;
        double radius = 0.0;
        for (size_t s = 0; s < scenario_.ibrs.size(); ++s)
            if (bp.vars.ibr_enabled[s])
                radius += std::abs(model_.z_eq(bus - 1, scenario_.ibrs[s].bus - 1)) *
                          scenario_.ibrs[s].i_max;
        const double cmag = std::abs(center(bus - 1));
        if (radius >= cmag - 1e-12) continue; // disk may contain the origin, keep all sides
        const double beta = std::asin(radius / cmag);
        const double psi = std::arg(center(bus - 1));
        for (int k = 0; k < poly.sides; ++k) {
            const double d = std::abs(Phasor::normalize_angle(poly.theta[static_cast<size_t>(k)] - psi));
            if (d > beta + pi / poly.sides + 1e-9)
                p.set_upper_bound(bp.vars.side_binaries[r][static_cast<size_t>(k)], 0.0);
        }
    }
}

void ProblemBuilder::add_power_polygon(BuiltProblem& bp, const VoltageEstimate& vhat) const {
    MiConvexProblem& p = bp.problem;
    const PolygonConfig& poly = bp.polygon;

    for (size_t s = 0; s < scenario_.ibrs.size(); ++s) {
        const IbrSpec& ibr = scenario_.ibrs[s];
        const int pv = bp.vars.power[s][0];
        const int qv = bp.vars.power[s][1];
        const std::string tag = "power.bus" + std::to_string(ibr.bus);

        if (bp.vars.ibr_enabled[s]) {
            const BusVoltage& v = vhat.at_bus(ibr.bus);
            const auto& cur = bp.vars.currents[s];
            // frozen-voltage linearization of the bilinear power expressions
            p.add_equality({{pv, 1.0},
                            {cur[0], -1.5 * v.d_plus},
                            {cur[1], -1.5 * v.q_plus},
                            {cur[2], -1.5 * v.d_minus},
                            {cur[3], -1.5 * v.q_minus}},
                           0.0, tag + ".p_def");
            p.add_equality({{qv, 1.0},
                            {cur[0], -1.5 * v.q_plus},
                            {cur[1], 1.5 * v.d_plus},
                            {cur[2], -1.5 * v.q_minus},
                            {cur[3], 1.5 * v.d_minus}},
                           0.0, tag + ".q_def");

            for (int k = 0; k < poly.sides; ++k) {
                const double ct = std::cos(poly.theta[static_cast<size_t>(k)]);
                const double st = std::sin(poly.theta[static_cast<size_t>(k)]);
                p.add_inequality({{pv, ct}, {qv, st}}, ibr.s_max * poly.shrink,
                                 tag + ".cap" + std::to_string(k + 1));
            }
        }

        p.add_inequality({{pv, -1.0}}, -ibr.p_min, tag + ".p_floor");
        p.add_inequality({{qv, -1.0}}, -ibr.q_min, tag + ".q_floor");
    }
}

void ProblemBuilder::build_objective(BuiltProblem& bp, const ObjectiveConfig& config) const {
    if (config.alpha == 0.0 && config.lambda == 0.0)
        throw ValidationError("objective weights (alpha, lambda) must not both be zero");
    MiConvexProblem& p = bp.problem;
    const double vpk = scenario_.v_ph_pk;
    for (int bus : config.regulated) {
        const auto& mag = bp.vars.v_magnitudes[static_cast<size_t>(bus - 1)];
        if (config.alpha > 0.0)
            p.add_objective_quadratic(mag[1], config.alpha / (vpk * vpk));
        if (config.lambda > 0.0) {
            p.add_objective_quadratic(mag[0], config.lambda / (vpk * vpk));
            p.add_objective_linear(mag[0], -2.0 * config.lambda / vpk);
            p.add_objective_constant(config.lambda);
        }
    }
}

BuiltProblem ProblemBuilder::build(const VoltageEstimate& vhat,
                                   const ObjectiveConfig& objective) const {
    BuiltProblem bp;
    bp.polygon = PolygonConfig::make(options_.polygon_sides.value_or(scenario_.polygon_sides),
                                     options_.big_m.value_or(scenario_.effective_big_m()));
    bp.objective = objective;
    create_variables(bp);
    add_voltage_coupling(bp);
    add_voltage_soc(bp);
    add_current_soc(bp);
    add_polygon_tightening(bp);
    add_power_polygon(bp, vhat);
    build_objective(bp, objective);
    return bp;
}

} // namespace vucoord
