#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace vucoord {

using LinearTerm = std::pair<int, double>; // (variable index, coefficient)
using LinearExpr = std::vector<LinearTerm>;

/// ||F v + g|| <= c . v + d
struct SocConstraint {
    std::vector<LinearExpr> arg_rows;
    std::vector<double> arg_offsets;
    LinearExpr bound;
    double bound_offset = 0.0;
    std::string label;
};

struct AffineRow {
    LinearExpr terms;
    double rhs = 0.0;
    std::string label;
};

/// Solver-agnostic mixed-integer convex program in standard form:
/// minimize v'Qv + c'v + c0 over affine equalities, affine inequalities
/// (terms . v <= rhs), second-order cone constraints, variable bounds and
/// one-hot binary groups. Immutable once handed to a solver.
class MiConvexProblem {
public:
    static constexpr double kInf = std::numeric_limits<double>::infinity();

    int add_variable(std::string name, double lb = -kInf, double ub = kInf, bool binary = false);
    void add_equality(LinearExpr terms, double rhs, std::string label = {});
    void add_inequality(LinearExpr terms, double rhs, std::string label = {});
    void add_soc(SocConstraint soc);
    int add_onehot_group(std::vector<int> vars);

    void add_objective_quadratic(int var, double coeff);
    void add_objective_linear(int var, double coeff);
    void add_objective_constant(double value) { objective_constant_ += value; }

    void set_lower_bound(int var, double lb) { lb_[static_cast<size_t>(var)] = lb; }
    void set_upper_bound(int var, double ub) { ub_[static_cast<size_t>(var)] = ub; }
    void fix_variable(int var, double value) { set_lower_bound(var, value); set_upper_bound(var, value); }

    int num_vars() const { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(int var) const { return names_[static_cast<size_t>(var)]; }
    double lower_bound(int var) const { return lb_[static_cast<size_t>(var)]; }
    double upper_bound(int var) const { return ub_[static_cast<size_t>(var)]; }
    bool is_binary(int var) const { return binary_[static_cast<size_t>(var)] != 0; }
    const std::vector<AffineRow>& equalities() const { return equalities_; }
    const std::vector<AffineRow>& inequalities() const { return inequalities_; }
    const std::vector<SocConstraint>& socs() const { return socs_; }
    const std::vector<std::vector<int>>& onehot_groups() const { return groups_; }
    const std::vector<std::pair<std::pair<int, int>, double>>& objective_quadratic() const {
        return q_terms_;
    }
    const std::vector<LinearTerm>& objective_linear() const { return c_terms_; }
    double objective_constant() const { return objective_constant_; }

    double evaluate_objective(const Eigen::VectorXd& v) const;

    /// Worst violation of equalities, inequalities, bounds and SOCs at v.
    double max_constraint_violation(const Eigen::VectorXd& v) const;

    /// Debug dump: variables plus sparse constraint triplets.
    nlohmann::json to_json() const;

private:
    std::vector<std::string> names_;
    std::vector<double> lb_, ub_;
    std::vector<char> binary_;
    std::vector<AffineRow> equalities_;
    std::vector<AffineRow> inequalities_;
    std::vector<SocConstraint> socs_;
    std::vector<std::vector<int>> groups_;
    std::vector<std::pair<std::pair<int, int>, double>> q_terms_;
    std::vector<LinearTerm> c_terms_;
    double objective_constant_ = 0.0;
};

double evaluate_expr(const LinearExpr& terms, double offset, const Eigen::VectorXd& v);

} // namespace vucoord
