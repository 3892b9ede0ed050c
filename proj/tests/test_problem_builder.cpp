#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "support/test_support.hpp"
#include "vucoord/errors.hpp"
#include "vucoord/network_model.hpp"
#include "vucoord/problem_builder.hpp"
#include "vucoord/subproblem.hpp"

using namespace vucoord;

namespace {

VoltageEstimate zero_injection_estimate(const Scenario& s, const SequenceNetworkModel& model) {
    InjectionSet zero;
    zero.currents.resize(s.ibrs.size());
    VoltageEstimate est;
    est.bus = solve_sequence_flow(model, s, zero).bus;
    return est;
}

ObjectiveConfig common_objective(const Scenario& s) {
    ObjectiveConfig cfg;
    cfg.alpha = 1.0;
    cfg.lambda = 1.0;
    cfg.regulated = s.regulated_buses();
    return cfg;
}

/// Reconstructs the affine voltage map from the coupling rows: each row is
/// v_comp + sum(coef * current) = rhs.
struct CouplingMap {
    Eigen::MatrixXd coeffs; // 4m x 4S
    Eigen::VectorXd offsets;
};

CouplingMap extract_coupling(const BuiltProblem& bp, const Scenario& s) {
    const int m = s.bus_count;
    const int nc = 4 * static_cast<int>(s.ibrs.size());
    CouplingMap map;
    map.coeffs = Eigen::MatrixXd::Zero(4 * m, nc);
    map.offsets = Eigen::VectorXd::Zero(4 * m);

    std::vector<int> comp_of_var(static_cast<size_t>(bp.problem.num_vars()), -1);
    for (int i = 0; i < m; ++i)
        for (int c = 0; c < 4; ++c)
            comp_of_var[static_cast<size_t>(
                bp.vars.v_components[static_cast<size_t>(i)][static_cast<size_t>(c)])] =
                4 * i + c;
    std::vector<int> cur_of_var(static_cast<size_t>(bp.problem.num_vars()), -1);
    for (size_t k = 0; k < s.ibrs.size(); ++k)
        for (int c = 0; c < 4; ++c)
            cur_of_var[static_cast<size_t>(bp.vars.currents[k][static_cast<size_t>(c)])] =
                4 * static_cast<int>(k) + c;

    for (const auto& row : bp.problem.equalities()) {
        if (row.label.rfind("vloop.", 0) != 0) continue;
        int comp = -1;
        for (const auto& [var, coef] : row.terms)
            if (comp_of_var[static_cast<size_t>(var)] >= 0 && coef == 1.0)
                comp = comp_of_var[static_cast<size_t>(var)];
        REQUIRE(comp >= 0);
        map.offsets(comp) = row.rhs;
        for (const auto& [var, coef] : row.terms) {
            const int cur = cur_of_var[static_cast<size_t>(var)];
            if (cur >= 0) map.coeffs(comp, cur) = -coef; // v = rhs - sum coef * i
        }
    }
    return map;
}

} // namespace

TEST_CASE("voltage coupling matches the power-flow probe columns") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const Scenario s = vutest::random_radial_scenario(rng);
        const SequenceNetworkModel model = build_network_model(s);
        const ProblemBuilder builder(s, model);
        const BuiltProblem bp = builder.build(zero_injection_estimate(s, model), common_objective(s));
        const CouplingMap map = extract_coupling(bp, s);

        // zero injection: offsets equal the zero-injection flow components
        InjectionSet zero;
        zero.currents.resize(s.ibrs.size());
        const FlowResult base = solve_sequence_flow(model, s, zero);
        for (int i = 0; i < s.bus_count; ++i) {
            CHECK(map.offsets(4 * i + 0) ==
                  doctest::Approx(base.bus[static_cast<size_t>(i)].d_plus).epsilon(1e-12));
            CHECK(map.offsets(4 * i + 1) ==
                  doctest::Approx(base.bus[static_cast<size_t>(i)].q_plus).epsilon(1e-12));
            CHECK(map.offsets(4 * i + 2) ==
                  doctest::Approx(base.bus[static_cast<size_t>(i)].d_minus).epsilon(1e-12));
            CHECK(map.offsets(4 * i + 3) ==
                  doctest::Approx(base.bus[static_cast<size_t>(i)].q_minus).epsilon(1e-12));
        }

        // unit-injection probes: columns equal flow deltas
        for (size_t k = 0; k < s.ibrs.size(); ++k) {
            for (int c = 0; c < 4; ++c) {
                InjectionSet probe;
                probe.currents.resize(s.ibrs.size());
                auto& cur = probe.currents[k];
                (c == 0 ? cur.d_plus : c == 1 ? cur.q_plus : c == 2 ? cur.d_minus : cur.q_minus) =
                    1.0;
                const FlowResult flow = solve_sequence_flow(model, s, probe);
                for (int i = 0; i < s.bus_count; ++i) {
                    const auto& v = flow.bus[static_cast<size_t>(i)];
                    const auto& v0 = base.bus[static_cast<size_t>(i)];
                    const int col = 4 * static_cast<int>(k) + c;
                    CHECK(map.coeffs(4 * i + 0, col) ==
                          doctest::Approx(v.d_plus - v0.d_plus).epsilon(1e-10));
                    CHECK(map.coeffs(4 * i + 1, col) ==
                          doctest::Approx(v.q_plus - v0.q_plus).epsilon(1e-10));
                    CHECK(map.coeffs(4 * i + 2, col) ==
                          doctest::Approx(v.d_minus - v0.d_minus).epsilon(1e-10));
                    CHECK(map.coeffs(4 * i + 3, col) ==
                          doctest::Approx(v.q_minus - v0.q_minus).epsilon(1e-10));
                }
            }
        }
    }
}

TEST_CASE("one-bus coupling coefficient is the equivalent impedance") {
    Scenario s;
    s.bus_count = 1;
    s.slack.v0_plus = Phasor::from_degrees(1.0, 0.0);
    s.slack.v0_minus = Phasor::from_degrees(0.0, 0.0);
    s.lines = {{0, 1, 0.1, 0.2}};
    s.ibrs = {{1, 1.0, 3.0, -1.0, -1.0}};
    const SequenceNetworkModel model = build_network_model(s);
    const ProblemBuilder builder(s, model);
    const BuiltProblem bp = builder.build(zero_injection_estimate(s, model), common_objective(s));
    const CouplingMap map = extract_coupling(bp, s);
    CHECK(map.coeffs(0, 0) == doctest::Approx(0.1).epsilon(1e-12)); // dVd+/dId+ = Req
    CHECK(map.coeffs(1, 0) == doctest::Approx(0.2).epsilon(1e-12)); // dVq+/dId+ = Xeq
}

TEST_CASE("voltage soc constraints detect violated relaxations") {
    std::mt19937_64 rng(37);
    const Scenario s = vutest::random_radial_scenario(rng);
    const SequenceNetworkModel model = build_network_model(s);
    const ProblemBuilder builder(s, model);
    BuiltProblem bp = builder.build(zero_injection_estimate(s, model), common_objective(s));

    Eigen::VectorXd x = Eigen::VectorXd::Zero(bp.problem.num_vars());
    const auto& comp = bp.vars.v_components[0];
    const auto& mag = bp.vars.v_magnitudes[0];
    x(comp[0]) = 0.6;
    x(comp[1]) = 0.8;

    x(mag[0]) = 1.0; // exactly the magnitude: active, not violated
    double active_violation = 0.0;
    for (const auto& soc : bp.problem.socs()) {
        if (soc.label != "vmag.bus1.plus") continue;
        double nsq = 0.0;
        for (size_t r = 0; r < soc.arg_rows.size(); ++r) {
            const double val = evaluate_expr(soc.arg_rows[r], soc.arg_offsets[r], x);
            nsq += val * val;
        }
        active_violation = std::sqrt(nsq) - evaluate_expr(soc.bound, soc.bound_offset, x);
    }
    CHECK(active_violation == doctest::Approx(0.0).epsilon(1e-12));

    x(mag[0]) = 0.9; // below the magnitude: infeasible point
    CHECK(bp.problem.max_constraint_violation(x) >= 0.1 - 1e-9);
}

TEST_CASE("current soc rows activate exactly at the limits") {
    Scenario s;
    s.bus_count = 1;
    s.slack.v0_plus = Phasor::from_degrees(1.0, 0.0);
    s.lines = {{0, 1, 0.05, 0.1}};
    s.ibrs = {{1, 1.0, 3.0, -3.0, -3.0}};
    const SequenceNetworkModel model = build_network_model(s);
    const ProblemBuilder builder(s, model);
    BuiltProblem bp = builder.build(zero_injection_estimate(s, model), common_objective(s));

    auto phase_violation = [&](const SequenceCurrents& cur, const char* label) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(bp.problem.num_vars());
        x(bp.vars.currents[0][0]) = cur.d_plus;
        x(bp.vars.currents[0][1]) = cur.q_plus;
        x(bp.vars.currents[0][2]) = cur.d_minus;
        x(bp.vars.currents[0][3]) = cur.q_minus;
        for (const auto& soc : bp.problem.socs()) {
            if (soc.label != label) continue;
            double nsq = 0.0;
            for (size_t r = 0; r < soc.arg_rows.size(); ++r) {
                const double val = evaluate_expr(soc.arg_rows[r], soc.arg_offsets[r], x);
                nsq += val * val;
            }
            return std::sqrt(nsq) - evaluate_expr(soc.bound, soc.bound_offset, x);
        }
        return std::numeric_limits<double>::quiet_NaN();
    };

    // balanced positive-sequence current of magnitude 1: all phases active
    CHECK(phase_violation({1.0, 0.0, 0.0, 0.0}, "iphase.bus1.a") ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(phase_violation({1.0, 0.0, 0.0, 0.0}, "iphase.bus1.b") ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(phase_violation({1.0, 0.0, 0.0, 0.0}, "iphase.bus1.c") ==
          doctest::Approx(0.0).epsilon(1e-12));
    // direct sum 0.8 + 0.3 exceeds the unit limit on phase a
    CHECK(phase_violation({0.8, 0.0, 0.3, 0.0}, "iphase.bus1.a") ==
          doctest::Approx(0.1).epsilon(1e-9));

    // soc inner expressions agree with the closed-form magnitudes
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 500; ++trial) {
        const SequenceCurrents cur = vutest::random_currents(rng);
        static constexpr const char* labels[3] = {"iphase.bus1.a", "iphase.bus1.b",
                                                  "iphase.bus1.c"};
        for (int ph = 0; ph < 3; ++ph) {
            const double viol = phase_violation(cur, labels[ph]);
            const double expected =
                phase_current_magnitude(cur, static_cast<PhaseId>(ph)) - s.ibrs[0].i_max;
            CHECK(viol == doctest::Approx(expected).epsilon(1e-9));
        }
    }
}

TEST_CASE("polygon tightening rows implement the circumscribed caps") {
    Scenario s;
    s.bus_count = 1;
    s.v_ph_pk = 1.0;
    s.polygon_sides = 8;
    s.slack.v0_plus = Phasor::from_degrees(1.0, 0.0);
    s.lines = {{0, 1, 0.05, 0.1}};
    s.ibrs = {{1, 1.0, 3.0, -3.0, -3.0}};
    const SequenceNetworkModel model = build_network_model(s);
    BuilderOptions opts;
    opts.tighten_sides = false;
    const ProblemBuilder builder(s, model, opts);
    BuiltProblem bp = builder.build(zero_injection_estimate(s, model), common_objective(s));

    const double shrink = std::cos(std::numbers::pi / 8);
    auto cap_for_side = [&](int k, double vd, double vq) {
        // selected side k: V+ <= proj / cos(pi/n); evaluate the row residual
        Eigen::VectorXd x = Eigen::VectorXd::Zero(bp.problem.num_vars());
        x(bp.vars.v_components[0][0]) = vd;
        x(bp.vars.v_components[0][1]) = vq;
        x(bp.vars.side_binaries[0][static_cast<size_t>(k)]) = 1.0;
        const std::string label = "poly.bus1.side" + std::to_string(k + 1);
        for (const auto& row : bp.problem.inequalities()) {
            if (row.label != label) continue;
            // row: shrink*vmag - proj + M*x <= M; with x=1: vmag <= proj/shrink
            double proj = 0.0;
            for (const auto& [var, coef] : row.terms) {
                if (var == bp.vars.v_components[0][0]) proj -= coef * vd;
                if (var == bp.vars.v_components[0][1]) proj -= coef * vq;
            }
            return proj / shrink;
        }
        return std::numeric_limits<double>::quiet_NaN();
    };

    // aligned side: cap is 1/cos(pi/8) of the magnitude
    CHECK(cap_for_side(0, 1.0, 0.0) == doctest::Approx(1.0 / shrink).epsilon(1e-12));
    // orthogonal side (theta = pi/2): projection is zero, cap collapses
    CHECK(cap_for_side(2, 1.0, 0.0) == doctest::Approx(0.0).epsilon(1e-12));

    // deactivated rows are loose for every in-bounds voltage: the
    // components obey ||(vd, vq)|| <= vmag <= v_ph_pk, so the worst case
    // of shrink*vmag - proj with x = 0 is (shrink + ||c||) * v_ph_pk
    for (const auto& row : bp.problem.inequalities()) {
        if (row.label.rfind("poly.", 0) != 0) continue;
        double shrink_coef = 0.0, cd = 0.0, cq = 0.0;
        for (const auto& [var, coef] : row.terms) {
            if (var == bp.vars.v_magnitudes[0][0]) shrink_coef = coef;
            if (var == bp.vars.v_components[0][0]) cd = coef;
            if (var == bp.vars.v_components[0][1]) cq = coef;
        }
        const double worst = (shrink_coef + std::hypot(cd, cq)) * s.v_ph_pk;
        CHECK(worst <= row.rhs + 1e-12);
    }

    // one-hot group present
    REQUIRE(bp.problem.onehot_groups().size() == 1);
    CHECK(bp.problem.onehot_groups()[0].size() == 8);
}

TEST_CASE("power polygon excludes the circle boundary on side normals") {
    Scenario s;
    s.bus_count = 1;
    s.polygon_sides = 8;
    s.slack.v0_plus = Phasor::from_degrees(1.0, 0.0);
    s.lines = {{0, 1, 0.05, 0.1}};
    s.ibrs = {{1, 1.0, 1.0, -3.0, -3.0}}; // s_max = 1
    const SequenceNetworkModel model = build_network_model(s);
    const ProblemBuilder builder(s, model);
    BuiltProblem bp = builder.build(zero_injection_estimate(s, model), common_objective(s));

    const double shrink = std::cos(std::numbers::pi / 8);
    auto power_violation = [&](double p, double q) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(bp.problem.num_vars());
        x(bp.vars.power[0][0]) = p;
        x(bp.vars.power[0][1]) = q;
        double worst = -1e9;
        for (const auto& row : bp.problem.inequalities()) {
            if (row.label.rfind("power.bus1.cap", 0) != 0) continue;
            worst = std::max(worst, evaluate_expr(row.terms, -row.rhs, x));
        }
        return worst;
    };

    CHECK(power_violation(1.0, 0.0) > 0.0); // (s_max, 0) cut off by side 1
    CHECK(power_violation(shrink, 0.0) <= 1e-12); // polygon boundary on the normal
    const double vx = std::cos(std::numbers::pi / 8), vy = std::sin(std::numbers::pi / 8);
    CHECK(power_violation(vx, vy) <= 1e-12); // vertex on the circle

    // containment: points satisfying all rows lie inside the circle
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> dist(-1.2, 1.2);
    int kept = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        const double p = dist(rng), q = dist(rng);
        if (power_violation(p, q) <= 0.0) {
            ++kept;
            CHECK(p * p + q * q <= 1.0 + 1e-12);
        }
    }
    CHECK(kept > 100);
}

TEST_CASE("power definitions freeze the voltage estimate") {
    std::mt19937_64 rng(47);
    const Scenario s = vutest::random_radial_scenario(rng);
    const SequenceNetworkModel model = build_network_model(s);
    const ProblemBuilder builder(s, model);
    const VoltageEstimate vhat = zero_injection_estimate(s, model);
    BuiltProblem bp = builder.build(vhat, common_objective(s));

    Eigen::VectorXd x = Eigen::VectorXd::Zero(bp.problem.num_vars());
    const SequenceCurrents cur = vutest::random_currents(rng);
    x(bp.vars.currents[0][0]) = cur.d_plus;
    x(bp.vars.currents[0][1]) = cur.q_plus;
    x(bp.vars.currents[0][2]) = cur.d_minus;
    x(bp.vars.currents[0][3]) = cur.q_minus;
    const PowerOutput expected = apparent_power(vhat.at_bus(s.ibrs[0].bus), cur);
    // solve the two definition rows for p and q
    for (const auto& row : bp.problem.equalities()) {
        if (row.label == "power.bus" + std::to_string(s.ibrs[0].bus) + ".p_def") {
            const double residual = evaluate_expr(row.terms, -row.rhs, x);
            CHECK(-residual == doctest::Approx(expected.p).epsilon(1e-12));
        }
        if (row.label == "power.bus" + std::to_string(s.ibrs[0].bus) + ".q_def") {
            const double residual = evaluate_expr(row.terms, -row.rhs, x);
            CHECK(-residual == doctest::Approx(expected.q).epsilon(1e-12));
        }
    }
}

TEST_CASE("objective substitution examples") {
    Scenario s;
    s.bus_count = 1;
    s.slack.v0_plus = Phasor::from_degrees(1.0, 0.0);
    s.lines = {{0, 1, 0.05, 0.1}};
    s.ibrs = {{1, 1.0, 3.0, -3.0, -3.0}};
    const SequenceNetworkModel model = build_network_model(s);
    const ProblemBuilder builder(s, model);
    BuiltProblem bp = builder.build(zero_injection_estimate(s, model), common_objective(s));

    Eigen::VectorXd x = Eigen::VectorXd::Zero(bp.problem.num_vars());
    x(bp.vars.v_magnitudes[0][0]) = 0.8;
    x(bp.vars.v_magnitudes[0][1]) = 0.1;
    CHECK(bp.problem.evaluate_objective(x) == doctest::Approx(0.05).epsilon(1e-12));

    x(bp.vars.v_magnitudes[0][0]) = 1.0;
    x(bp.vars.v_magnitudes[0][1]) = 0.0;
    CHECK(bp.problem.evaluate_objective(x) == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(builder.build(zero_injection_estimate(s, model), ObjectiveConfig{0.0, 0.0, {1}}),
                    ValidationError);
}

TEST_CASE("zero-capacity ibrs have their variables pinned") {
    Scenario s;
    s.bus_count = 2;
    s.slack.v0_plus = Phasor::from_degrees(1.0, 0.0);
    s.lines = {{0, 1, 0.05, 0.1}, {1, 2, 0.05, 0.1}};
    s.ibrs = {{1, 0.0, 0.0, -1.0, -1.0}, {2, 0.5, 1.5, -1.0, -1.0}};
    const SequenceNetworkModel model = build_network_model(s);
    const ProblemBuilder builder(s, model);
    BuiltProblem bp = builder.build(zero_injection_estimate(s, model), common_objective(s));
    for (int c = 0; c < 4; ++c) {
        const int var = bp.vars.currents[0][static_cast<size_t>(c)];
        CHECK(bp.problem.lower_bound(var) == 0.0);
        CHECK(bp.problem.upper_bound(var) == 0.0);
    }
    // positive floor on a disabled unit is an immediate contradiction
    Scenario bad = s;
    bad.ibrs[0].p_min = 0.2;
    bad.ibrs[0].s_max = 0.5; // keep validation happy, i_max stays 0
    const ProblemBuilder bad_builder(bad, model);
    BuiltProblem bbp = bad_builder.build(zero_injection_estimate(bad, model), common_objective(bad));
    const SubproblemResult res = solve_convex_subproblem(bbp.problem, {}, 1e-8);
    CHECK(res.status == SubproblemStatus::infeasible);
}

TEST_CASE("problem dump lists variables and sparse triplets") {
    std::mt19937_64 rng(53);
    const Scenario s = vutest::random_radial_scenario(rng);
    const SequenceNetworkModel model = build_network_model(s);
    const ProblemBuilder builder(s, model);
    BuiltProblem bp = builder.build(zero_injection_estimate(s, model), common_objective(s));
    const auto dump = bp.problem.to_json();
    CHECK(dump.at("variables").size() == static_cast<size_t>(bp.problem.num_vars()));
    CHECK(dump.contains("equalities"));
    CHECK(dump.contains("socs"));
    CHECK(dump.contains("onehot_groups"));
}
