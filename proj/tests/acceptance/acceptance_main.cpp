// Acceptance suite: runs every release criterion at its stated tolerance
// and prints one PASS/FAIL line each. Returns the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "support/test_support.hpp"
#include "vucoord/branch_and_bound.hpp"
#include "vucoord/network_model.hpp"
#include "vucoord/orchestrator.hpp"

#ifndef VUCOORD_SCENARIO_DIR
#define VUCOORD_SCENARIO_DIR "data/scenarios"
#endif
#ifndef VUCOORD_EXTERNAL_DATASET_DIR
#define VUCOORD_EXTERNAL_DATASET_DIR "data/external"
#endif

using namespace vucoord;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("%s  criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    if (!pass) ++g_failures;
}

void report_skip(int criterion, const std::string& detail) {
    std::printf("SKIP  criterion %d: %s\n", criterion, detail.c_str());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::string> suite_files() {
    return {"case1_2bus.json",  "case2_2bus.json",  "case1_chain5.json", "case2_chain5.json",
            "case1_tree7.json", "case2_tree7.json", "case1_floors6.json", "case2_floors6.json",
            "balanced_3bus.json", "case1_23bus.json", "case2_23bus.json"};
}

Scenario load(const std::string& name) {
    return Scenario::load_file(std::string(VUCOORD_SCENARIO_DIR) + "/" + name);
}

// 1. Power-flow oracle equivalence on 100 random radial scenarios.
void criterion1() {
    std::mt19937_64 rng(2024);
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        vutest::GeneratorOptions opt;
        opt.max_buses = 10;
        const Scenario s = vutest::random_radial_scenario(rng, opt);
        const SequenceNetworkModel model = build_network_model(s);
        InjectionSet inj;
        for (size_t k = 0; k < s.ibrs.size(); ++k)
            inj.currents.push_back(vutest::random_currents(rng));
        const FlowResult flow = solve_sequence_flow(model, s, inj);

        Eigen::VectorXcd ip = Eigen::VectorXcd::Zero(s.bus_count);
        Eigen::VectorXcd im = Eigen::VectorXcd::Zero(s.bus_count);
        for (size_t k = 0; k < s.ibrs.size(); ++k) {
            ip(s.ibrs[k].bus - 1) += inj.currents[k].plus();
            im(s.ibrs[k].bus - 1) += inj.currents[k].minus();
        }
        const Eigen::VectorXcd vp = vutest::oracle_dense_flow(
            model.z_net, model.y_load, s.slack.v0_plus.to_complex(), ip);
        const Eigen::VectorXcd vm =
            vutest::oracle_dense_flow(model.z_net.conjugate(), model.y_load.conjugate(),
                                      s.slack.v0_minus.to_complex(), im);
        for (int i = 0; i < s.bus_count; ++i) {
            const auto& v = flow.bus[static_cast<size_t>(i)];
            const double scale = std::max({1.0, std::abs(vp(i)), std::abs(vm(i))});
            worst = std::max(worst, std::abs(v.plus() - vp(i)) / scale);
            worst = std::max(worst, std::abs(v.minus() - vm(i)) / scale);
        }
    }
    const double elapsed = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "power-flow vs dense solve, 100 scenarios: max rel err %.2e (<=1e-9), %.2fs (<1s)",
                  worst, elapsed);
    report(1, worst <= 1e-9 && elapsed < 1.0, buf);
}

// 2. Closed-form phase currents vs the sampled time-domain maxima.
void criterion2() {
    std::mt19937_64 rng(2025);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const SequenceCurrents cur = vutest::random_currents(rng, 2.0);
        for (int ph = 0; ph < 3; ++ph) {
            const double closed = phase_current_magnitude(cur, static_cast<PhaseId>(ph));
            const double sampled = phase_current_sampled_max(cur, static_cast<PhaseId>(ph));
            worst = std::max(worst, std::abs(closed - sampled) / std::max(1.0, closed));
        }
    }
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "phase closed forms vs delta-sweep oracle, 1000 injections: max rel dev %.2e "
                  "(<=1e-6); printed phase-c grouping confirmed, no deviation needed",
                  worst);
    report(2, worst <= 1e-6, buf);
}

// 3. Brute-force optimality on the 2-bus single-IBR case-1 scenario.
void criterion3() {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario s = load("case1_2bus.json");
    const SequenceNetworkModel model = build_network_model(s);
    const StrategyRun run = run_strategy(s, model, StrategyId::s3, OrchestratorSettings{});
    if (run.status != SolveStatus::optimal || !run.converged) {
        report(3, false, "solver did not converge on the 2-bus scenario");
        return;
    }

    // 41^4 grid over the current box; exact feasibility and exact J
    const double imax = s.ibrs[0].i_max;
    const int steps = 41;
    const auto regulated = s.regulated_buses();
    const std::complex<double> v0p = s.slack.v0_plus.to_complex();
    const std::complex<double> v0m = s.slack.v0_minus.to_complex();
    const Eigen::VectorXcd base_p = model.h.rowwise().sum() * v0p;
    const Eigen::VectorXcd base_m = model.h.conjugate().rowwise().sum() * v0m;
    const int ibr_row = s.ibrs[0].bus - 1;

    double best = std::numeric_limits<double>::infinity();
    SequenceCurrents cur;
    for (int a = 0; a < steps; ++a) {
        cur.d_plus = -imax + 2.0 * imax * a / (steps - 1);
        for (int b = 0; b < steps; ++b) {
            cur.q_plus = -imax + 2.0 * imax * b / (steps - 1);
            for (int c = 0; c < steps; ++c) {
                cur.d_minus = -imax + 2.0 * imax * c / (steps - 1);
                for (int d = 0; d < steps; ++d) {
                    cur.q_minus = -imax + 2.0 * imax * d / (steps - 1);
                    bool ok = true;
                    for (int ph = 0; ph < 3 && ok; ++ph)
                        ok = phase_current_magnitude(cur, static_cast<PhaseId>(ph)) <= imax;
                    if (!ok) continue;

                    const std::complex<double> iplus = cur.plus();
                    const std::complex<double> iminus = cur.minus();
                    double j = 0.0;
                    std::complex<double> v_at_ibr_p, v_at_ibr_m;
                    bool bounds_ok = true;
                    for (int i = 0; i < s.bus_count; ++i) {
                        const std::complex<double> vp = base_p(i) + model.z_eq(i, ibr_row) * iplus;
                        const std::complex<double> vm =
                            base_m(i) + std::conj(model.z_eq(i, ibr_row)) * iminus;
                        if (std::abs(vp) > s.v_ph_pk || std::abs(vm) > s.v_ph_pk)
                            bounds_ok = false;
                        if (i == ibr_row) {
                            v_at_ibr_p = vp;
                            v_at_ibr_m = vm;
                        }
                        for (int r : regulated) {
                            if (r - 1 != i) continue;
                            const double neg = std::abs(vm) / s.v_ph_pk;
                            const double pos = std::abs(vp) / s.v_ph_pk - 1.0;
                            j += neg * neg + pos * pos;
                        }
                    }
                    if (!bounds_ok) continue;
                    const std::complex<double> power =
                        1.5 * (v_at_ibr_p * std::conj(iplus) + v_at_ibr_m * std::conj(iminus));
                    if (std::abs(power) > s.ibrs[0].s_max) continue;
                    if (power.real() < s.ibrs[0].p_min || power.imag() < s.ibrs[0].q_min)
                        continue;
                    best = std::min(best, j);
                }
            }
        }
    }
    const double elapsed = seconds_since(t0);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "2-bus brute force: solver J %.6f <= grid optimum %.6f + 1e-3, %.1fs (<300s)",
                  run.j_exact, best, elapsed);
    report(3, run.j_exact <= best + 1e-3 && elapsed < 300.0, buf);
}

// 4+5. Relaxation tightness on every solved run and strategy dominance
// over the shipped suite.
void criteria4and5() {
    const double kappa8 = 1.0 / std::cos(std::numbers::pi / 8.0);
    bool tight_ok = true;
    bool dominance_ok = true;
    std::string worst_case;
    double worst_excess = -1.0;
    int solved_runs = 0;

    for (const std::string& name : suite_files()) {
        const Scenario s = load(name);
        const SequenceNetworkModel model = build_network_model(s);
        const StrategyComparison cmp = compare_strategies(s, model, OrchestratorSettings{});

        for (const auto& run : cmp.runs) {
            if (run.status != SolveStatus::optimal) {
                dominance_ok = false;
                worst_case = name + " " + strategy_name(run.strategy) + " not optimal";
                continue;
            }
            ++solved_runs;
            for (int i = 0; i < s.bus_count; ++i) {
                const auto& comp = run.vars.v_components[static_cast<size_t>(i)];
                const auto& mag = run.vars.v_magnitudes[static_cast<size_t>(i)];
                const double norm_p =
                    std::hypot(run.decision(comp[0]), run.decision(comp[1]));
                const double norm_m =
                    std::hypot(run.decision(comp[2]), run.decision(comp[3]));
                if (std::abs(run.decision(mag[1]) - norm_m) > 1e-6) tight_ok = false;
                if (run.decision(mag[0]) < norm_p - 1e-9) tight_ok = false;
                if (run.decision(mag[0]) > norm_p * kappa8 + 1e-6) tight_ok = false;
            }
        }

        const double j1 = cmp.runs[0].j_common;
        const double j2 = cmp.runs[1].j_common;
        const double j3 = cmp.runs[2].j_common;
        const double excess = j3 - std::min(j1, j2);
        if (excess > worst_excess) {
            worst_excess = excess;
            worst_case = name;
        }
        if (excess > 1e-3) dominance_ok = false;
    }

    char buf4[200];
    std::snprintf(buf4, sizeof buf4,
                  "relaxation tightness (|V- - norm| <= 1e-6, norm <= V+ <= norm/cos(pi/8)+1e-6) "
                  "on %d solved runs",
                  solved_runs);
    report(4, tight_ok, buf4);

    char buf5[200];
    std::snprintf(buf5, sizeof buf5,
                  "dominance J(S3) <= min(J(S1),J(S2)) + 1e-3 on %zu scenarios: worst excess "
                  "%.2e (%s)",
                  suite_files().size(), worst_excess, worst_case.c_str());
    report(5, dominance_ok, buf5);
}

// 6. Branch-and-bound equals exhaustive one-hot enumeration on small
// instances (<= 3 regulated buses, n <= 8).
void criterion6() {
    struct Instance {
        std::string file;
        int sides;
    };
    const std::vector<Instance> instances = {{"balanced_3bus.json", 4},
                                             {"case2_2bus.json", 8},
                                             {"case1_tree7.json", 8}};
    bool ok = true;
    std::string detail;
    for (const auto& inst : instances) {
        Scenario s = load(inst.file);
        s.polygon_sides = inst.sides;
        const SequenceNetworkModel model = build_network_model(s);

        InjectionSet zero;
        zero.currents.resize(s.ibrs.size());
        VoltageEstimate vhat;
        vhat.bus = solve_sequence_flow(model, s, zero).bus;
        ObjectiveConfig cfg;
        cfg.alpha = 1.0;
        cfg.lambda = 1.0;
        cfg.regulated = s.regulated_buses();

        const ProblemBuilder builder(s, model); // default side tightening
        const BuiltProblem bp = builder.build(vhat, cfg);
        SolverSettings settings;
        const SolveOutcome outcome =
            branch_and_bound(bp.problem, settings, assignment_fixings(bp, warm_start_assignment(bp, vhat)));
        if (outcome.status != SolveStatus::optimal) {
            ok = false;
            detail = inst.file + ": branch and bound not optimal";
            break;
        }

        // enumeration runs on the untightened model so eliminated sides
        // are genuinely revisited
        BuilderOptions raw;
        raw.tighten_sides = false;
        const ProblemBuilder raw_builder(s, model, raw);
        const BuiltProblem raw_bp = raw_builder.build(vhat, cfg);
        const size_t groups = raw_bp.vars.side_binaries.size();
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> assignment(groups, 0);
        const int n = raw_bp.polygon.sides;
        long total = 1;
        for (size_t g = 0; g < groups; ++g) total *= n;
        for (long code = 0; code < total; ++code) {
            long rest = code;
            for (size_t g = 0; g < groups; ++g) {
                assignment[g] = static_cast<int>(rest % n);
                rest /= n;
            }
            std::unordered_map<int, double> fix;
            for (const auto& [var, val] : assignment_fixings(raw_bp, assignment)) fix[var] = val;
            const SubproblemResult res = solve_convex_subproblem(raw_bp.problem, fix, 1e-8);
            if (res.status == SubproblemStatus::optimal) best = std::min(best, res.objective);
        }
        if (std::abs(outcome.objective - best) > 1e-6) {
            ok = false;
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s: bb %.8f vs enumeration %.8f",
                          inst.file.c_str(), outcome.objective, best);
            detail = buf;
            break;
        }
    }
    if (detail.empty())
        detail = "branch and bound equals one-hot enumeration on 3 instances (4^2, 8^1, 8^3)";
    report(6, ok, detail);
}

// 7. Conditional reproduction of the published case numbers; needs the
// externally hosted 23-bus dataset converted to scenario JSON.
void criterion7() {
    const fs::path dir(VUCOORD_EXTERNAL_DATASET_DIR);
    const fs::path case1 = dir / "case1.json";
    const fs::path case2 = dir / "case2.json";
    if (!fs::exists(case1) || !fs::exists(case2)) {
        report_skip(7, "external 23-bus dataset not present under data/external "
                       "(conditional criterion; see README for the import path)");
        return;
    }
    bool ok = true;
    std::string detail;
    {
        const Scenario s = Scenario::load_file(case1.string());
        const SequenceNetworkModel model = build_network_model(s);
        const StrategyRun s3 = run_strategy(s, model, StrategyId::s3, OrchestratorSettings{});
        ok = ok && std::abs(s3.j_common - 0.0514) <= 0.1 * 0.0514;
        char buf[120];
        std::snprintf(buf, sizeof buf, "case1 J(S3) %.4f vs 0.0514 (10%%)", s3.j_common);
        detail = buf;
    }
    {
        const Scenario s = Scenario::load_file(case2.string());
        const SequenceNetworkModel model = build_network_model(s);
        const StrategyRun s2 = run_strategy(s, model, StrategyId::s2, OrchestratorSettings{});
        double min_vplus = std::numeric_limits<double>::infinity();
        for (const auto& v : s2.flow.bus) min_vplus = std::min(min_vplus, v.mag_plus());
        ok = ok && min_vplus < 0.6;
        char buf[120];
        std::snprintf(buf, sizeof buf, "; case2 min V+ under S2 %.4f (<0.6)", min_vplus);
        detail += buf;
    }
    report(7, ok, detail);
}

// 8. Certified 23-bus solve inside the runtime budget.
void criterion8() {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario s = load("case1_23bus.json");
    const SequenceNetworkModel model = build_network_model(s);
    OrchestratorSettings settings;
    settings.solver.absolute_gap = 1e-6;
    const StrategyRun run = run_strategy(s, model, StrategyId::s3, settings);
    const double elapsed = seconds_since(t0);
    const bool ok = run.status == SolveStatus::optimal && run.converged &&
                    run.final_gap <= 1e-6 + 1e-12 && elapsed < 60.0;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "23-bus, 8 IBRs, n=8, S3 certified gap %.1e: %.2fs (<60s), status %s",
                  run.final_gap, elapsed, run.status == SolveStatus::optimal ? "optimal" : "other");
    report(8, ok, buf);
}

} // namespace

int main() {
    std::printf("vucoord acceptance suite\n");
    criterion1();
    criterion2();
    criterion3();
    criteria4and5();
    criterion6();
    criterion7();
    criterion8();
    std::printf("%s (%d failure%s)\n", g_failures == 0 ? "ACCEPTED" : "REJECTED", g_failures,
                g_failures == 1 ? "" : "s");
    return g_failures;
}
