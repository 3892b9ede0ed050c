#include "vucoord/orchestrator.hpp"

#include <chrono>
#include <cmath>

#include "vucoord/errors.hpp"

namespace vucoord {

namespace {

VoltageEstimate estimate_from_flow(const FlowResult& flow) {
    VoltageEstimate est;
    est.bus = flow.bus;
    return est;
}

double estimate_change(const VoltageEstimate& a, const VoltageEstimate& b) {
    double worst = 0.0;
    for (size_t i = 0; i < a.bus.size(); ++i) {
        worst = std::max(worst, std::abs(a.bus[i].d_plus - b.bus[i].d_plus));
        worst = std::max(worst, std::abs(a.bus[i].q_plus - b.bus[i].q_plus));
        worst = std::max(worst, std::abs(a.bus[i].d_minus - b.bus[i].d_minus));
        worst = std::max(worst, std::abs(a.bus[i].q_minus - b.bus[i].q_minus));
    }
    return worst;
}

} // namespace

const char* strategy_name(StrategyId id) {
    switch (id) {
    case StrategyId::s1: return "s1";
    case StrategyId::s2: return "s2";
    case StrategyId::s3: return "s3";
    }
    return "?";
}

ObjectiveConfig strategy_objective(StrategyId id, double lambda, const Scenario& scenario) {
    ObjectiveConfig cfg;
    cfg.regulated = scenario.regulated_buses();
    switch (id) {
    case StrategyId::s1:
        cfg.alpha = 0.0;
        cfg.lambda = 1.0;
        break;
    case StrategyId::s2:
        cfg.alpha = 1.0;
        cfg.lambda = 0.0;
        break;
    case StrategyId::s3:
        cfg.alpha = 1.0;
        cfg.lambda = lambda;
        break;
    }
    if (cfg.alpha == 0.0 && cfg.lambda == 0.0)
        throw ValidationError("strategy weights degenerate");
    return cfg;
}

StrategyRun run_strategy(const Scenario& scenario, const SequenceNetworkModel& model,
                         StrategyId strategy, const OrchestratorSettings& settings) {
    const auto t0 = std::chrono::steady_clock::now();
    StrategyRun run;
    run.strategy = strategy;

    const ObjectiveConfig objective = strategy_objective(strategy, settings.lambda, scenario);
    run.objective_cfg = objective;

    BuilderOptions bopts;
    bopts.polygon_sides = settings.polygon_sides;
    bopts.big_m = settings.big_m;
    const ProblemBuilder builder(scenario, model, bopts);

    InjectionSet zero;
    zero.currents.resize(scenario.ibrs.size());
    VoltageEstimate vhat = estimate_from_flow(solve_sequence_flow(model, scenario, zero));

    struct Iterate {
        InjectionSet injections;
        FlowResult flow;
        VerificationReport verification;
        double j_exact = 0.0;
        Eigen::VectorXd decision;
        VariableMap vars;
        PolygonConfig polygon;
        double j_model = 0.0;
        double gap = 0.0;
    };
    std::optional<Iterate> best_feasible;
    std::optional<Iterate> last;

    for (int iter = 1; iter <= settings.max_sc_iters; ++iter) {
        BuiltProblem bp = builder.build(vhat, objective);
        run.polygon = bp.polygon;
        const auto warm = assignment_fixings(bp, warm_start_assignment(bp, vhat));
        SolveOutcome outcome = branch_and_bound(bp.problem, settings.solver, warm);

        run.total_nodes += outcome.node_count;
        run.total_ipm_iterations += outcome.ipm_iterations;
        run.status = outcome.status;
        run.final_gap = outcome.bound_gap;
        run.message = outcome.message;

        if (outcome.status == SolveStatus::infeasible ||
            outcome.status == SolveStatus::subproblem_failure) {
            break;
        }

        // Snap the magnitude variables onto their cones: lowering V- onto
        // ||(vd-, vq-)|| keeps every constraint satisfied and weakly
        // improves the objective. Regulated V+ is lifted to at least its
        // own norm to absorb interior-point slack; non-regulated V+ has no
        // objective term or polygon row, so any value between the norm and
        // v_ph_pk is optimal and the tight one is reported.
        std::vector<char> regulated_bus(static_cast<size_t>(scenario.bus_count) + 1, 0);
        for (int bus : objective.regulated) regulated_bus[static_cast<size_t>(bus)] = 1;
        for (int i = 0; i < scenario.bus_count; ++i) {
            const auto& comp = bp.vars.v_components[static_cast<size_t>(i)];
            const auto& mag = bp.vars.v_magnitudes[static_cast<size_t>(i)];
            outcome.primal(mag[1]) =
                std::hypot(outcome.primal(comp[2]), outcome.primal(comp[3]));
            const double norm_p =
                std::hypot(outcome.primal(comp[0]), outcome.primal(comp[1]));
            if (regulated_bus[static_cast<size_t>(i + 1)])
                outcome.primal(mag[0]) = std::max(outcome.primal(mag[0]), norm_p);
            else
                outcome.primal(mag[0]) = norm_p;
        }

        Iterate it;
        it.injections = bp.vars.extract_injections(outcome.primal);
        it.flow = solve_sequence_flow(model, scenario, it.injections);
        it.verification = verify_solution(scenario, model, it.injections, settings.verify);
        it.j_exact = evaluate_objective(it.flow, objective.regulated, objective.alpha,
                                        objective.lambda, scenario.v_ph_pk);
        it.decision = outcome.primal;
        it.vars = bp.vars;
        it.polygon = bp.polygon;
        it.j_model = outcome.objective;
        it.gap = outcome.bound_gap;

        const VoltageEstimate next = estimate_from_flow(it.flow);
        const double change = estimate_change(vhat, next);

        run.trace.push_back({iter, change, outcome.objective, it.j_exact,
                             it.verification.feasible, outcome.bound_gap, outcome.node_count});

        if (it.verification.feasible &&
            (!best_feasible || it.j_exact < best_feasible->j_exact))
            best_feasible = it;
        last = std::move(it);

        vhat = next;
        if (change < settings.sc_tolerance) {
            run.converged = true;
            break;
        }
    }

    const Iterate* chosen = nullptr;
    if (run.converged && last) {
        chosen = &*last;
    } else if (best_feasible) {
        chosen = &*best_feasible; // best verified-feasible iterate
    } else if (last) {
        chosen = &*last;
    }

    if (chosen) {
        run.injections = chosen->injections;
        run.flow = chosen->flow;
        run.verification = chosen->verification;
        run.j_exact = chosen->j_exact;
        run.j_common = chosen->verification.j_common;
        run.j_model = chosen->j_model;
        run.decision = chosen->decision;
        run.vars = chosen->vars;
        run.polygon = chosen->polygon;
        run.final_gap = chosen->gap;
        run.j_discrepancy = std::abs(run.j_exact - run.j_model);
        const double factor = 1.0 / (run.polygon.shrink * run.polygon.shrink) - 1.0;
        double sum_sq = 0.0;
        for (int bus : objective.regulated) {
            const double vp = run.flow.at_bus(bus).mag_plus() / scenario.v_ph_pk;
            sum_sq += vp * vp;
        }
        run.j_discrepancy_bound = factor * sum_sq;
    }

    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

StrategyComparison compare_strategies(const Scenario& scenario, const SequenceNetworkModel& model,
                                      const OrchestratorSettings& settings) {
    StrategyComparison cmp;
    for (StrategyId id : {StrategyId::s1, StrategyId::s2, StrategyId::s3})
        cmp.runs.push_back(run_strategy(scenario, model, id, settings));
    return cmp;
}

} // namespace vucoord
