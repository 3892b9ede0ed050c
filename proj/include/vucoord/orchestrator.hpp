#pragma once

#include <optional>

#include "vucoord/branch_and_bound.hpp"
#include "vucoord/problem_builder.hpp"
#include "vucoord/sequence_flow.hpp"

namespace vucoord {

/// S1: positive-sequence support (alpha=0, lambda=1).
/// S2: negative-sequence attenuation (alpha=1, lambda=0).
/// S3: coordinated objective (alpha=1, lambda configurable, default 1).
enum class StrategyId { s1 = 1, s2 = 2, s3 = 3 };

const char* strategy_name(StrategyId id);
ObjectiveConfig strategy_objective(StrategyId id, double lambda, const Scenario& scenario);

struct OrchestratorSettings {
    SolverSettings solver;
    int max_sc_iters = 20;
    double sc_tolerance = 1e-4; // max |change| of the frozen voltage estimate, pu
    double lambda = 1.0;        // S3 weight
    std::optional<int> polygon_sides;
    std::optional<double> big_m;
    VerifyTolerances verify;
};

struct ScIteration {
    int index = 0;
    double estimate_change = 0.0;
    double model_objective = 0.0;
    double exact_objective = 0.0;
    bool feasible = false;
    double bound_gap = 0.0;
    int nodes = 0;
};

struct StrategyRun {
    StrategyId strategy = StrategyId::s3;
    SolveStatus status = SolveStatus::subproblem_failure;
    bool converged = false;
    InjectionSet injections;
    FlowResult flow; // exact power flow of the reported injections
    VerificationReport verification;
    double j_exact = 0.0;  // strategy objective on exact voltages
    double j_common = 0.0; // alpha = lambda = 1 objective on exact voltages
    double j_model = 0.0;  // model objective of the final MI solve
    double j_discrepancy = 0.0;       // |j_exact - j_model|
    double j_discrepancy_bound = 0.0; // (1/cos^2(pi/n) - 1) sum (V+/vpk)^2
    std::vector<ScIteration> trace;
    int total_nodes = 0;
    int total_ipm_iterations = 0;
    double seconds = 0.0;
    double final_gap = 0.0;
    std::string message;
    Eigen::VectorXd decision; // final decision vector (model variables)
    VariableMap vars;
    PolygonConfig polygon;
    ObjectiveConfig objective_cfg;
};

/// Successive convexification driver: freezes the bilinear power voltages
/// at the previous exact power flow, re-solves the MI convex model and
/// iterates until the voltage estimate settles. Reported objectives are
/// always evaluated on exact power-flow voltages. On non-convergence the
/// best verified-feasible iterate is reported and `converged` stays false.
StrategyRun run_strategy(const Scenario& scenario, const SequenceNetworkModel& model,
                         StrategyId strategy, const OrchestratorSettings& settings);

struct StrategyComparison {
    std::vector<StrategyRun> runs; // S1, S2, S3 order
};

/// Runs all three strategies and evaluates the common objective for each;
/// individual failures are recorded and the comparison continues.
StrategyComparison compare_strategies(const Scenario& scenario, const SequenceNetworkModel& model,
                                      const OrchestratorSettings& settings);

} // namespace vucoord
