#include "vucoord/cone_program.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "vucoord/errors.hpp"

namespace vucoord {

double evaluate_expr(const LinearExpr& terms, double offset, const Eigen::VectorXd& v) {
    double out = offset;
    for (const auto& [var, coeff] : terms) out += coeff * v(var);
    return out;
}

int MiConvexProblem::add_variable(std::string name, double lb, double ub, bool binary) {
    names_.push_back(std::move(name));
    lb_.push_back(lb);
    ub_.push_back(ub);
    binary_.push_back(binary ? 1 : 0);
    return static_cast<int>(names_.size()) - 1;
}

void MiConvexProblem::add_equality(LinearExpr terms, double rhs, std::string label) {
    equalities_.push_back({std::move(terms), rhs, std::move(label)});
}

void MiConvexProblem::add_inequality(LinearExpr terms, double rhs, std::string label) {
    inequalities_.push_back({std::move(terms), rhs, std::move(label)});
}

void MiConvexProblem::add_soc(SocConstraint soc) {
    if (soc.arg_rows.size() != soc.arg_offsets.size())
        throw SolverError("SOC constraint rows/offsets size mismatch");
    socs_.push_back(std::move(soc));
}

int MiConvexProblem::add_onehot_group(std::vector<int> vars) {
    for (int v : vars)
        if (!is_binary(v)) throw SolverError("one-hot group member " + name(v) + " is not binary");
    groups_.push_back(std::move(vars));
    return static_cast<int>(groups_.size()) - 1;
}

void MiConvexProblem::add_objective_quadratic(int var, double coeff) {
    if (coeff < 0.0) throw SolverError("objective quadratic coefficient must be >= 0");
    q_terms_.push_back({{var, var}, coeff});
}

void MiConvexProblem::add_objective_linear(int var, double coeff) {
    c_terms_.push_back({var, coeff});
}

double MiConvexProblem::evaluate_objective(const Eigen::VectorXd& v) const {
    double out = objective_constant_;
    for (const auto& [ij, coeff] : q_terms_) out += coeff * v(ij.first) * v(ij.second);
    for (const auto& [var, coeff] : c_terms_) out += coeff * v(var);
    return out;
}

double MiConvexProblem::max_constraint_violation(const Eigen::VectorXd& v) const {
    double worst = 0.0;
    for (const auto& row : equalities_)
        worst = std::max(worst, std::abs(evaluate_expr(row.terms, -row.rhs, v)));
    for (const auto& row : inequalities_)
        worst = std::max(worst, evaluate_expr(row.terms, -row.rhs, v));
    for (int i = 0; i < num_vars(); ++i) {
        if (std::isfinite(lb_[static_cast<size_t>(i)]))
            worst = std::max(worst, lb_[static_cast<size_t>(i)] - v(i));
        if (std::isfinite(ub_[static_cast<size_t>(i)]))
            worst = std::max(worst, v(i) - ub_[static_cast<size_t>(i)]);
    }
    for (const auto& soc : socs_) {
        double norm_sq = 0.0;
        for (size_t r = 0; r < soc.arg_rows.size(); ++r) {
            const double val = evaluate_expr(soc.arg_rows[r], soc.arg_offsets[r], v);
            norm_sq += val * val;
        }
        worst = std::max(worst, std::sqrt(norm_sq) -
                                    evaluate_expr(soc.bound, soc.bound_offset, v));
    }
    return worst;
}

namespace {

nlohmann::json expr_triplets(const LinearExpr& terms) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [var, coeff] : terms) arr.push_back({var, coeff});
    return arr;
}

} // namespace

nlohmann::json MiConvexProblem::to_json() const {
    nlohmann::json j;
    j["variables"] = nlohmann::json::array();
    for (int i = 0; i < num_vars(); ++i) {
        nlohmann::json v = {{"index", i}, {"name", names_[static_cast<size_t>(i)]},
                            {"binary", is_binary(i)}};
        if (std::isfinite(lower_bound(i))) v["lb"] = lower_bound(i);
        if (std::isfinite(upper_bound(i))) v["ub"] = upper_bound(i);
        j["variables"].push_back(std::move(v));
    }
    j["objective"] = {{"constant", objective_constant_}};
    j["objective"]["quadratic"] = nlohmann::json::array();
    for (const auto& [ij, coeff] : q_terms_)
        j["objective"]["quadratic"].push_back({ij.first, ij.second, coeff});
    j["objective"]["linear"] = expr_triplets(c_terms_);
    j["equalities"] = nlohmann::json::array();
    for (const auto& row : equalities_)
        j["equalities"].push_back(
            {{"terms", expr_triplets(row.terms)}, {"rhs", row.rhs}, {"label", row.label}});
    j["inequalities"] = nlohmann::json::array();
    for (const auto& row : inequalities_)
        j["inequalities"].push_back(
            {{"terms", expr_triplets(row.terms)}, {"rhs", row.rhs}, {"label", row.label}});
    j["socs"] = nlohmann::json::array();
    for (const auto& soc : socs_) {
        nlohmann::json sj;
        sj["label"] = soc.label;
        sj["rows"] = nlohmann::json::array();
        for (size_t r = 0; r < soc.arg_rows.size(); ++r)
            sj["rows"].push_back(
                {{"terms", expr_triplets(soc.arg_rows[r])}, {"offset", soc.arg_offsets[r]}});
        sj["bound"] = {{"terms", expr_triplets(soc.bound)}, {"offset", soc.bound_offset}};
        j["socs"].push_back(std::move(sj));
    }
    j["onehot_groups"] = groups_;
    return j;
}

} // namespace vucoord
