#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "vucoord/orchestrator.hpp"

namespace vucoord {

/// Machine-readable result of one strategy run. Everything except the
/// "timing" block is deterministic for fixed settings and seed.
struct SolveReport {
    std::string scenario_digest;
    StrategyRun run;
    SolverSettings solver_settings;
    const Scenario* scenario = nullptr; // borrowed for table generation

    nlohmann::json to_json() const;
    std::string buses_csv() const;
    std::string ibrs_csv() const;

    /// Exit status following the CLI contract: 0 optimal, 2 infeasible,
    /// 3 not converged / not certified.
    int exit_code() const;
};

struct ComparisonReport {
    std::string scenario_digest;
    StrategyComparison comparison;
    SolverSettings solver_settings;
    const Scenario* scenario = nullptr;

    nlohmann::json to_json() const;
    std::string scatter_csv() const;
    int exit_code() const;
};

/// Parses an injections payload: either {"injections": [{"bus": ..,
/// "i_d_plus": .., "i_q_plus": .., "i_d_minus": .., "i_q_minus": ..}, ...]}
/// or a previously written solve report (its "ibrs" table carries the same
/// fields). Unlisted IBRs get zero current.
InjectionSet parse_injections_json(const Scenario& scenario, const nlohmann::json& j);
InjectionSet parse_injections_text(const Scenario& scenario, const std::string& text);

std::string format_csv_number(double value); // 10 significant digits, dot decimal

} // namespace vucoord
