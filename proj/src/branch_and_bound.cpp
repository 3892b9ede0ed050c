#include "vucoord/branch_and_bound.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>
#include <unordered_map>

namespace vucoord {

namespace {

constexpr double kIntTol = 1e-6;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Node {
    long id = 0;
    double bound = -kInf;
    std::vector<std::pair<int, double>> fixings;
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound; // min-heap on bound
        return a.id > b.id;
    }
};

/// One-hot propagation: a group with a member fixed to 1 forces the rest
/// to 0; a group with a single free member forces it to 1. Returns false
/// when a group becomes unsatisfiable.
bool propagate_groups(const MiConvexProblem& problem,
                      std::unordered_map<int, double>& fixed) {
    for (const auto& group : problem.onehot_groups()) {
        double ones = 0.0;
        std::vector<int> free_members;
        for (int var : group) {
            double lb = problem.lower_bound(var);
            double ub = problem.upper_bound(var);
            auto it = fixed.find(var);
            if (it != fixed.end()) {
                lb = ub = it->second;
            }
            if (lb == ub) {
                ones += lb;
            } else {
                free_members.push_back(var);
            }
        }
        if (ones > 1.0 + kIntTol) return false;
        if (std::abs(ones - 1.0) <= kIntTol) {
            for (int var : free_members) fixed[var] = 0.0;
        } else if (free_members.size() == 1) {
            fixed[free_members.front()] = 1.0;
        } else if (free_members.empty()) {
            return false; // all members zero, sum cannot reach 1
        }
    }
    return true;
}

bool assignment_integral(const MiConvexProblem& problem, const Eigen::VectorXd& x,
                         int* branch_group, int* branch_var) {
    double worst = kIntTol;
    int ibest = -1, vbest = -1;
    const auto& groups = problem.onehot_groups();
    for (size_t g = 0; g < groups.size(); ++g) {
        for (int var : groups[g]) {
            const double frac = std::min(x(var), 1.0 - x(var));
            if (frac > worst) {
                worst = frac;
                ibest = static_cast<int>(g);
                vbest = var;
            }
        }
    }
    if (ibest < 0) return true;
    if (branch_group) *branch_group = ibest;
    if (branch_var) *branch_var = vbest;
    return false;
}

} // namespace

std::vector<int> warm_start_assignment(const BuiltProblem& bp, const VoltageEstimate& vhat) {
    std::vector<int> assignment(bp.vars.side_binaries.size(), 0);
    for (size_t r = 0; r < bp.vars.side_binaries.size(); ++r) {
        const int bus = bp.vars.regulated[r];
        const BusVoltage& v = vhat.at_bus(bus);
        const double mag = std::hypot(v.d_plus, v.q_plus);
        const double angle = mag > 0.0 ? std::atan2(v.q_plus, v.d_plus) : 0.0;
        double best = kInf;
        int best_k = 0;
        for (int k = 0; k < bp.polygon.sides; ++k) {
            const int var = bp.vars.side_binaries[r][static_cast<size_t>(k)];
            if (bp.problem.upper_bound(var) < 0.5) continue; // eliminated side
            const double d =
                std::abs(Phasor::normalize_angle(bp.polygon.theta[static_cast<size_t>(k)] - angle));
            if (d < best - 1e-15) {
                best = d;
                best_k = k;
            }
        }
        assignment[r] = best_k;
    }
    return assignment;
}

std::vector<std::pair<int, double>> assignment_fixings(const BuiltProblem& bp,
                                                       const std::vector<int>& assignment) {
    std::vector<std::pair<int, double>> fixings;
    for (size_t r = 0; r < bp.vars.side_binaries.size(); ++r) {
        for (int k = 0; k < bp.polygon.sides; ++k)
            fixings.push_back({bp.vars.side_binaries[r][static_cast<size_t>(k)],
                               k == assignment[r] ? 1.0 : 0.0});
    }
    return fixings;
}

SolveOutcome branch_and_bound(const MiConvexProblem& problem, const SolverSettings& settings,
                              const std::vector<std::pair<int, double>>& warm) {
    const auto t0 = std::chrono::steady_clock::now();
    SolveOutcome outcome;
    outcome.objective = kInf;
    outcome.bound_gap = kInf;

    double incumbent_obj = kInf;
    Eigen::VectorXd incumbent_x;
    double closed_leaf_bound = kInf; // min final bound over closed leaves
    bool any_failure = false;
    long next_id = 0;

    auto solve_node = [&](const std::vector<std::pair<int, double>>& fixings,
                          SubproblemResult& res) -> bool {
        std::unordered_map<int, double> fixed(fixings.begin(), fixings.end());
        if (!propagate_groups(problem, fixed)) {
            res.status = SubproblemStatus::infeasible;
            res.lower_bound = kInf;
            return true;
        }
        res = solve_convex_subproblem(problem, fixed, settings.kkt_tolerance);
        outcome.ipm_iterations += res.ipm_iterations;
        return res.status != SubproblemStatus::failure;
    };

    // Warm-start incumbent.
    if (!warm.empty()) {
        SubproblemResult res;
        outcome.node_count++;
        if (solve_node(warm, res) && res.status == SubproblemStatus::optimal) {
            int g, v;
            if (assignment_integral(problem, res.x, &g, &v)) {
                incumbent_obj = res.objective;
                incumbent_x = res.x;
                outcome.incumbent_trace.push_back({outcome.node_count, incumbent_obj});
            }
        }
    }

    if (settings.heuristic_only) {
        SubproblemResult root;
        outcome.node_count++;
        if (!solve_node({}, root)) {
            any_failure = true;
        }
        double root_bound = -kInf;
        if (root.status == SubproblemStatus::optimal) root_bound = root.lower_bound;
        if (root.status == SubproblemStatus::infeasible) root_bound = kInf;
        if (!std::isfinite(incumbent_obj)) {
            outcome.status = root.status == SubproblemStatus::infeasible
                                 ? SolveStatus::infeasible
                                 : SolveStatus::subproblem_failure;
            outcome.message = "warm-start assignment produced no incumbent";
            outcome.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            return outcome;
        }
        outcome.primal = incumbent_x;
        outcome.objective = incumbent_obj;
        outcome.bound_gap = incumbent_obj - root_bound;
        outcome.status = (!any_failure && outcome.bound_gap <= settings.absolute_gap)
                             ? SolveStatus::optimal
                             : SolveStatus::node_limit;
        outcome.message = "heuristic-only solve";
        outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return outcome;
    }

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    open.push(Node{next_id++, -kInf, {}});

    while (!open.empty()) {
        if (outcome.node_count >= settings.max_nodes) break;
        Node node = open.top();
        open.pop();

        if (node.bound >= incumbent_obj - settings.absolute_gap) {
            closed_leaf_bound = std::min(closed_leaf_bound, node.bound);
            continue;
        }

        SubproblemResult res;
        outcome.node_count++;
        const bool ok = solve_node(node.fixings, res);

        if (!ok) {
            any_failure = true;
            // cannot prune; keep searching below with the parent bound
            closed_leaf_bound = std::min(closed_leaf_bound, node.bound);
            continue;
        }
        if (res.status == SubproblemStatus::infeasible) continue; // bound +inf

        const double node_lb = res.lower_bound;
        if (node_lb >= incumbent_obj - settings.absolute_gap) {
            closed_leaf_bound = std::min(closed_leaf_bound, node_lb);
            continue;
        }

        int branch_group = -1, branch_var = -1;
        if (assignment_integral(problem, res.x, &branch_group, &branch_var)) {
            if (res.objective < incumbent_obj) {
                incumbent_obj = res.objective;
                incumbent_x = res.x;
                outcome.incumbent_trace.push_back({outcome.node_count, incumbent_obj});
            }
            closed_leaf_bound = std::min(closed_leaf_bound, node_lb);
            continue;
        }

        // dichotomy on the most fractional member
        Node take = node;
        take.id = next_id++;
        take.bound = node_lb;
        take.fixings.push_back({branch_var, 1.0});
        Node leave = node;
        leave.id = next_id++;
        leave.bound = node_lb;
        leave.fixings.push_back({branch_var, 0.0});
        open.push(std::move(take));
        open.push(std::move(leave));
    }

    double open_bound = kInf;
    bool hit_node_limit = false;
    while (!open.empty()) {
        open_bound = std::min(open_bound, open.top().bound);
        open.pop();
        hit_node_limit = true;
    }
    const double global_lb = std::min(open_bound, closed_leaf_bound);

    if (!std::isfinite(incumbent_obj)) {
        if (any_failure) {
            outcome.status = SolveStatus::subproblem_failure;
            outcome.message = "no incumbent; at least one node solve failed";
        } else if (hit_node_limit) {
            outcome.status = SolveStatus::node_limit;
            outcome.message = "node limit reached without incumbent";
        } else {
            outcome.status = SolveStatus::infeasible;
            outcome.message = "all one-hot assignments infeasible";
        }
        outcome.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return outcome;
    }

    outcome.primal = incumbent_x;
    outcome.objective = incumbent_obj;
    outcome.bound_gap = std::max(0.0, incumbent_obj - global_lb);
    if (any_failure && outcome.bound_gap > settings.absolute_gap) {
        outcome.status = SolveStatus::subproblem_failure;
        outcome.message = "incumbent found but a node solve failed before certification";
    } else if (hit_node_limit && outcome.bound_gap > settings.absolute_gap) {
        outcome.status = SolveStatus::node_limit;
        outcome.message = "node limit reached";
    } else {
        outcome.status = SolveStatus::optimal;
        outcome.message = "certified within absolute gap";
    }
    outcome.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return outcome;
}

} // namespace vucoord
