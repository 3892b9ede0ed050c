#include "vucoord/subproblem.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace vucoord {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kConstRowTol = 1e-9;

struct Canonical {
    ConicProgramData data;
    std::vector<int> keep;      // new index -> original index
    std::vector<int> reduced;   // original index -> new index or -1
    VectorXd fixed_values;      // original-sized, valid where reduced == -1
    double constant = 0.0;      // objective constant after substitution
    bool trivially_infeasible = false;
    std::string infeasibility_note;
};

/// Substitutes fixed variables out of a linear expression; returns the
/// reduced terms and moves the fixed part into `offset`.
void reduce_expr(const LinearExpr& terms, const Canonical& canon,
                 std::vector<std::pair<int, double>>& out, double& offset) {
    out.clear();
    for (const auto& [var, coeff] : terms) {
        const int nv = canon.reduced[static_cast<size_t>(var)];
        if (nv < 0)
            offset += coeff * canon.fixed_values(var);
        else
            out.push_back({nv, coeff});
    }
}

Canonical canonicalize(const MiConvexProblem& problem,
                       const std::unordered_map<int, double>& fixed) {
    Canonical canon;
    const int n0 = problem.num_vars();
    canon.reduced.assign(static_cast<size_t>(n0), -1);
    canon.fixed_values = VectorXd::Zero(n0);

    for (int i = 0; i < n0; ++i) {
        const double lb = problem.lower_bound(i);
        const double ub = problem.upper_bound(i);
        auto it = fixed.find(i);
        if (it != fixed.end()) {
            if (it->second < lb - kConstRowTol || it->second > ub + kConstRowTol) {
                canon.trivially_infeasible = true;
                canon.infeasibility_note = "fixing of " + problem.name(i) + " conflicts with bounds";
                return canon;
            }
            canon.fixed_values(i) = it->second;
        } else if (lb == ub) {
            canon.fixed_values(i) = lb;
        } else {
            canon.reduced[static_cast<size_t>(i)] = static_cast<int>(canon.keep.size());
            canon.keep.push_back(i);
        }
    }

    const int n = static_cast<int>(canon.keep.size());
    canon.data.P = MatrixXd::Zero(n, n);
    canon.data.q = VectorXd::Zero(n);
    canon.constant = problem.objective_constant();

    for (const auto& [ij, coeff] : problem.objective_quadratic()) {
        const int ri = canon.reduced[static_cast<size_t>(ij.first)];
        const int rj = canon.reduced[static_cast<size_t>(ij.second)];
        if (ri >= 0 && rj >= 0) {
            canon.data.P(ri, rj) += coeff;
            canon.data.P(rj, ri) += coeff; // P holds 2Q
        } else if (ri >= 0) {
            canon.data.q(ri) += coeff * canon.fixed_values(ij.second);
        } else if (rj >= 0) {
            canon.data.q(rj) += coeff * canon.fixed_values(ij.first);
        } else {
            canon.constant += coeff * canon.fixed_values(ij.first) * canon.fixed_values(ij.second);
        }
    }
    for (const auto& [var, coeff] : problem.objective_linear()) {
        const int rv = canon.reduced[static_cast<size_t>(var)];
        if (rv >= 0)
            canon.data.q(rv) += coeff;
        else
            canon.constant += coeff * canon.fixed_values(var);
    }

    std::vector<std::pair<int, double>> terms;
    double offset = 0.0;

    std::vector<std::vector<std::pair<int, double>>> eq_rows;
    std::vector<double> eq_rhs;
    for (const auto& row : problem.equalities()) {
        offset = 0.0;
        reduce_expr(row.terms, canon, terms, offset);
        const double rhs = row.rhs - offset;
        if (terms.empty()) {
            if (std::abs(rhs) > kConstRowTol) {
                canon.trivially_infeasible = true;
                canon.infeasibility_note = "constant equality violated: " + row.label;
                return canon;
            }
            continue;
        }
        eq_rows.push_back(terms);
        eq_rhs.push_back(rhs);
    }

    std::vector<std::vector<std::pair<int, double>>> orthant_rows;
    std::vector<double> orthant_rhs;
    for (const auto& row : problem.inequalities()) {
        offset = 0.0;
        reduce_expr(row.terms, canon, terms, offset);
        const double rhs = row.rhs - offset;
        if (terms.empty()) {
            if (rhs < -kConstRowTol) {
                canon.trivially_infeasible = true;
                canon.infeasibility_note = "constant inequality violated: " + row.label;
                return canon;
            }
            continue;
        }
        orthant_rows.push_back(terms);
        orthant_rhs.push_back(rhs);
    }
    for (int i = 0; i < n0; ++i) {
        const int rv = canon.reduced[static_cast<size_t>(i)];
        if (rv < 0) continue;
        const double lb = problem.lower_bound(i);
        const double ub = problem.upper_bound(i);
        if (std::isfinite(ub)) {
            orthant_rows.push_back({{rv, 1.0}});
            orthant_rhs.push_back(ub);
        }
        if (std::isfinite(lb)) {
            orthant_rows.push_back({{rv, -1.0}});
            orthant_rhs.push_back(-lb);
        }
    }

    struct SocRowSet {
        std::vector<std::vector<std::pair<int, double>>> rows;
        std::vector<double> offsets;
    };
    std::vector<SocRowSet> soc_sets;
    for (const auto& soc : problem.socs()) {
        SocRowSet set;
        bool any_var = false;
        for (size_t r = 0; r < soc.arg_rows.size(); ++r) {
            offset = soc.arg_offsets[r];
            reduce_expr(soc.arg_rows[r], canon, terms, offset);
            if (!terms.empty()) any_var = true;
            set.rows.push_back(terms);
            set.offsets.push_back(offset);
        }
        offset = soc.bound_offset;
        reduce_expr(soc.bound, canon, terms, offset);
        if (!any_var && terms.empty()) {
            double norm_sq = 0.0;
            for (double o : set.offsets) norm_sq += o * o;
            if (std::sqrt(norm_sq) > offset + kConstRowTol) {
                canon.trivially_infeasible = true;
                canon.infeasibility_note = "constant SOC violated: " + soc.label;
                return canon;
            }
            continue;
        }
        set.rows.insert(set.rows.begin(), terms);
        set.offsets.insert(set.offsets.begin(), offset);
        soc_sets.push_back(std::move(set));
    }

    const int l = static_cast<int>(orthant_rows.size());
    int cdim = l;
    canon.data.dims.orthant = l;
    for (const auto& set : soc_sets) {
        canon.data.dims.soc.push_back(static_cast<int>(set.rows.size()));
        cdim += static_cast<int>(set.rows.size());
    }

    canon.data.G = MatrixXd::Zero(cdim, n);
    canon.data.h = VectorXd::Zero(cdim);
    for (int r = 0; r < l; ++r) {
        for (const auto& [var, coeff] : orthant_rows[static_cast<size_t>(r)])
            canon.data.G(r, var) += coeff;
        canon.data.h(r) = orthant_rhs[static_cast<size_t>(r)];
    }
    int at = l;
    for (const auto& set : soc_sets) {
        // s = h - Gx: bound row gives s0 = c.x + d, tail rows give Fx + g
        for (size_t r = 0; r < set.rows.size(); ++r) {
            for (const auto& [var, coeff] : set.rows[r]) canon.data.G(at, var) -= coeff;
            canon.data.h(at) = set.offsets[r];
            ++at;
        }
    }

    canon.data.A = MatrixXd::Zero(static_cast<Eigen::Index>(eq_rows.size()), n);
    canon.data.b = VectorXd::Zero(static_cast<Eigen::Index>(eq_rows.size()));
    for (size_t r = 0; r < eq_rows.size(); ++r) {
        for (const auto& [var, coeff] : eq_rows[r])
            canon.data.A(static_cast<Eigen::Index>(r), var) += coeff;
        canon.data.b(static_cast<Eigen::Index>(r)) = eq_rhs[r];
    }
    return canon;
}

VectorXd expand_solution(const Canonical& canon, const VectorXd& reduced) {
    VectorXd full = canon.fixed_values;
    for (size_t k = 0; k < canon.keep.size(); ++k)
        full(canon.keep[k]) = reduced(static_cast<Eigen::Index>(k));
    return full;
}

/// Phase-I: minimize t subject to Gx + s = h + t*e, Ax = b, t >= -1.
/// Always has a strictly feasible interior, so the IPM classifies the
/// original cone system: t* > 0 proves infeasibility.
SubproblemStatus classify_by_phase1(const ConicProgramData& data, double kkt_tolerance) {
    const Eigen::Index n = data.P.cols();
    ConicProgramData p1;
    p1.P = MatrixXd::Zero(n + 1, n + 1);
    p1.q = VectorXd::Zero(n + 1);
    p1.q(n) = 1.0;
    p1.A = MatrixXd::Zero(data.A.rows(), n + 1);
    p1.A.leftCols(n) = data.A;
    p1.b = data.b;

    const int cdim = data.dims.total();
    p1.dims = data.dims;
    p1.dims.orthant += 1; // t >= -1 row goes first
    p1.G = MatrixXd::Zero(cdim + 1, n + 1);
    p1.h = VectorXd::Zero(cdim + 1);
    p1.G(0, n) = -1.0;
    p1.h(0) = 1.0;
    p1.G.bottomLeftCorner(cdim, n) = data.G;
    p1.h.tail(cdim) = data.h;
    // t multiplies the cone identity
    int at = 1 + data.dims.orthant;
    for (int r = 1; r <= data.dims.orthant; ++r) p1.G(r, n) = -1.0;
    for (int q : data.dims.soc) {
        p1.G(at, n) = -1.0;
        at += q;
    }

    ConeQpSettings settings;
    settings.abstol = kkt_tolerance;
    settings.reltol = kkt_tolerance;
    settings.feastol = kkt_tolerance;
    const ConeQpResult res = solve_cone_qp(p1, settings);
    if (res.status == ConeQpStatus::infeasible) return SubproblemStatus::infeasible;
    if (res.status != ConeQpStatus::optimal) return SubproblemStatus::failure;
    const double t_star = res.x(n);
    if (t_star > 1e-7) return SubproblemStatus::infeasible;
    if (t_star < -1e-7) return SubproblemStatus::optimal; // strictly feasible
    return SubproblemStatus::failure;
}

} // namespace

SubproblemResult solve_convex_subproblem(const MiConvexProblem& problem,
                                         const std::unordered_map<int, double>& fixed,
                                         double kkt_tolerance) {
    SubproblemResult out;
    Canonical canon = canonicalize(problem, fixed);
    if (canon.trivially_infeasible) {
        out.status = SubproblemStatus::infeasible;
        out.message = canon.infeasibility_note;
        out.lower_bound = std::numeric_limits<double>::infinity();
        return out;
    }

    if (canon.keep.empty()) {
        out.x = canon.fixed_values;
        const double viol = problem.max_constraint_violation(out.x);
        if (viol > kConstRowTol) {
            out.status = SubproblemStatus::infeasible;
            out.lower_bound = std::numeric_limits<double>::infinity();
            out.message = "fully fixed assignment violates constraints";
        } else {
            out.status = SubproblemStatus::optimal;
            out.objective = canon.constant;
            out.lower_bound = canon.constant;
        }
        return out;
    }

    ConeQpSettings settings;
    settings.abstol = kkt_tolerance;
    settings.reltol = kkt_tolerance;
    settings.feastol = kkt_tolerance;

    ConeQpResult res = solve_cone_qp(canon.data, settings);
    if (res.status == ConeQpStatus::max_iters || res.status == ConeQpStatus::numerical_failure) {
        // retry once with more headroom before classifying via phase-I
        ConeQpSettings retry = settings;
        retry.max_iters = 3 * settings.max_iters;
        retry.refinement = 2;
        res = solve_cone_qp(canon.data, retry);
    }

    out.ipm_iterations = res.iterations;
    switch (res.status) {
    case ConeQpStatus::optimal:
        out.status = SubproblemStatus::optimal;
        out.x = expand_solution(canon, res.x);
        out.objective = res.primal_obj + canon.constant;
        out.lower_bound = res.dual_obj + canon.constant;
        out.kkt_residual = std::max({res.primal_res, res.dual_res,
                                     problem.max_constraint_violation(out.x)});
        out.message = res.message;
        return out;
    case ConeQpStatus::infeasible:
        out.status = SubproblemStatus::infeasible;
        out.lower_bound = std::numeric_limits<double>::infinity();
        out.farkas_y = res.y;
        out.farkas_z = res.z;
        out.message = res.message;
        return out;
    default:
        break;
    }

    switch (classify_by_phase1(canon.data, kkt_tolerance)) {
    case SubproblemStatus::infeasible:
        out.status = SubproblemStatus::infeasible;
        out.lower_bound = std::numeric_limits<double>::infinity();
        out.message = "phase-I certified infeasibility";
        return out;
    default:
        out.status = SubproblemStatus::failure;
        out.message = "interior-point solve failed: " + res.message;
        return out;
    }
}

} // namespace vucoord
