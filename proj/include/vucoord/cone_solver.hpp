#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vucoord {

/// Cone layout of the slack vector: nonnegative orthant block first, then
/// one block per second-order cone.
struct ConeDims {
    int orthant = 0;
    std::vector<int> soc;

    int total() const {
        int n = orthant;
        for (int q : soc) n += q;
        return n;
    }
    /// Barrier degree: one per orthant entry, one per SOC block.
    int degree() const { return orthant + static_cast<int>(soc.size()); }
};

/// minimize (1/2) x'Px + q'x  subject to  Gx + s = h, s in K, Ax = b.
struct ConicProgramData {
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    Eigen::MatrixXd G;
    Eigen::VectorXd h;
    ConeDims dims;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
};

struct ConeQpSettings {
    int max_iters = 100;
    double abstol = 1e-8;
    double reltol = 1e-8;
    double feastol = 1e-8;
    int refinement = 1;
    double static_reg = 1e-11; // diagonal regularization of the KKT factorization
};

enum class ConeQpStatus { optimal, infeasible, max_iters, numerical_failure };

struct ConeQpResult {
    ConeQpStatus status = ConeQpStatus::numerical_failure;
    // On status == infeasible, (y, z) form the separating Farkas
    // certificate: z in the cone, A'y + G'z ~ 0, b'y + h'z < 0.
    Eigen::VectorXd x, y, z, s;
    double primal_obj = 0.0;
    double dual_obj = 0.0;
    double gap = 0.0;
    double rel_gap = 0.0;
    double primal_res = 0.0;
    double dual_res = 0.0;
    int iterations = 0;
    std::string message;
};

/// Primal-dual Mehrotra predictor-corrector over orthant + second-order
/// cones with Nesterov-Todd scaling, dense KKT factorization and iterative
/// refinement. Declares infeasibility when the dual iterates form a
/// separating (Farkas) certificate.
ConeQpResult solve_cone_qp(const ConicProgramData& data, const ConeQpSettings& settings = {});

} // namespace vucoord
