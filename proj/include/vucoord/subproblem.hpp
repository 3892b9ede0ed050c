#pragma once

#include <unordered_map>

#include "vucoord/cone_program.hpp"
#include "vucoord/cone_solver.hpp"

namespace vucoord {

enum class SubproblemStatus { optimal, infeasible, failure };

struct SubproblemResult {
    SubproblemStatus status = SubproblemStatus::failure;
    Eigen::VectorXd x;        // full decision vector (fixed entries included)
    double objective = 0.0;   // primal objective including constants
    double lower_bound = 0.0; // dual objective including constants
    double kkt_residual = 0.0; // max of solver residuals and the actual
                               // constraint violation at x
    int ipm_iterations = 0;
    std::string message;
    // separating certificate of the reduced cone program when infeasible
    Eigen::VectorXd farkas_y, farkas_z;
};

/// Continuous relaxation / fixed-assignment solve of a MiConvexProblem.
/// `fixed` pins additional variables (used by branch and bound for the
/// binaries); variables with equal bounds are substituted out, bounds
/// become orthant rows and trivially infeasible constant rows are detected
/// during canonicalization. Failures fall back to a phase-I feasibility
/// problem so that infeasibility is certified rather than guessed.
SubproblemResult solve_convex_subproblem(const MiConvexProblem& problem,
                                         const std::unordered_map<int, double>& fixed,
                                         double kkt_tolerance);

} // namespace vucoord
