#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vucoord/problem_builder.hpp"
#include "vucoord/subproblem.hpp"

namespace vucoord {

struct SolverSettings {
    double kkt_tolerance = 1e-7;
    double absolute_gap = 1e-6;
    int max_nodes = 10000;
    bool heuristic_only = false;
    std::uint64_t seed = 0; // recorded in reports; the search itself is deterministic
};

enum class SolveStatus { optimal, infeasible, node_limit, subproblem_failure };

struct SolveOutcome {
    SolveStatus status = SolveStatus::subproblem_failure;
    Eigen::VectorXd primal;
    double objective = 0.0;
    double bound_gap = 0.0; // objective - proved lower bound
    int node_count = 0;
    int ipm_iterations = 0; // summed over all node solves
    double seconds = 0.0;
    std::string message;
    // (node index, incumbent objective) at each improvement; the sequence
    // is non-increasing by construction and checked by tests
    std::vector<std::pair<int, double>> incumbent_trace;
};

/// Nearest-side one-hot assignment from a voltage estimate: for each
/// regulated bus, the side whose normal angle is closest to
/// atan2(vq+, vd+), restricted to sides not eliminated by bound
/// tightening. A zero-magnitude estimate selects the first side.
std::vector<int> warm_start_assignment(const BuiltProblem& bp, const VoltageEstimate& vhat);

/// Variable fixings realizing a one-hot assignment (selected side 1, all
/// siblings 0).
std::vector<std::pair<int, double>> assignment_fixings(const BuiltProblem& bp,
                                                       const std::vector<int>& assignment);

/// Best-first branch and bound over the one-hot groups. Nodes are ordered
/// by parent bound with creation-index tie-breaking; branching splits the
/// group holding the most fractional binary. `warm` supplies an optional
/// incumbent assignment evaluated before the root relaxation. In
/// heuristic_only mode only the warm assignment and the root relaxation
/// are solved; the outcome is marked optimal only when that pair already
/// closes the gap, node_limit otherwise.
SolveOutcome branch_and_bound(const MiConvexProblem& problem, const SolverSettings& settings,
                              const std::vector<std::pair<int, double>>& warm = {});

} // namespace vucoord
