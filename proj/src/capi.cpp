#include "vucoord.h"

#include <cstring>
#include <memory>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "vucoord/errors.hpp"
#include "vucoord/network_model.hpp"
#include "vucoord/orchestrator.hpp"
#include "vucoord/reports.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

} // namespace

struct vucoord_scenario {
    vucoord::Scenario scenario;
    vucoord::SequenceNetworkModel model;
    std::string json_cache;
};

struct vucoord_report {
    enum class Kind { solve, compare, verify } kind = Kind::solve;
    vucoord::SolveReport solve;
    vucoord::ComparisonReport compare;
    vucoord::VerificationReport verification;
    vucoord::Scenario scenario_copy; // keeps the borrowed pointers alive
    double objective = 0.0;
    int exit_code = 0;
    std::string json_cache;
    std::string table_cache;
};

namespace {

vucoord_status run_guarded(vucoord_status (*fn)(void*), void* ctx) {
    try {
        return fn(ctx);
    } catch (const vucoord::ParseError& e) {
        set_error(e.what());
        return VUCOORD_ERR_PARSE;
    } catch (const vucoord::ValidationError& e) {
        set_error(e.what());
        return VUCOORD_ERR_VALIDATION;
    } catch (const vucoord::ModelError& e) {
        set_error(e.what());
        return VUCOORD_ERR_MODEL;
    } catch (const vucoord::SolverError& e) {
        set_error(e.what());
        return VUCOORD_ERR_SOLVER;
    } catch (const std::exception& e) {
        set_error(e.what());
        return VUCOORD_ERR_INTERNAL;
    } catch (...) {
        set_error("unknown error");
        return VUCOORD_ERR_INTERNAL;
    }
}

template <typename Fn> vucoord_status guarded(Fn&& fn) {
    auto thunk = [](void* ctx) -> vucoord_status { return (*static_cast<Fn*>(ctx))(); };
    return run_guarded(thunk, &fn);
}

vucoord::OrchestratorSettings to_settings(const vucoord_solve_options& opts) {
    vucoord::OrchestratorSettings s;
    s.solver.kkt_tolerance = opts.kkt_tolerance > 0 ? opts.kkt_tolerance : 1e-7;
    s.solver.absolute_gap = opts.mip_gap > 0 ? opts.mip_gap : 1e-6;
    s.solver.max_nodes = opts.max_nodes > 0 ? opts.max_nodes : 10000;
    s.solver.heuristic_only = opts.heuristic_only != 0;
    s.solver.seed = opts.seed;
    s.max_sc_iters = opts.max_sc_iters > 0 ? opts.max_sc_iters : 20;
    s.sc_tolerance = opts.sc_tolerance > 0 ? opts.sc_tolerance : 1e-4;
    s.lambda = opts.lambda_weight >= 0 ? opts.lambda_weight : 1.0;
    if (opts.polygon_sides > 0) s.polygon_sides = opts.polygon_sides;
    if (opts.big_m > 0) s.big_m = opts.big_m;
    return s;
}

vucoord_status status_from_exit(int exit_code) {
    switch (exit_code) {
    case 0: return VUCOORD_OK;
    case 2: return VUCOORD_ERR_INFEASIBLE;
    case 4: return VUCOORD_ERR_INFEASIBLE;
    default: return VUCOORD_ERR_NO_CONVERGENCE;
    }
}

} // namespace

extern "C" {

void vucoord_solve_options_init(vucoord_solve_options* opts) {
    if (!opts) return;
    std::memset(opts, 0, sizeof *opts);
    opts->strategy = 3;
    opts->lambda_weight = 1.0;
    opts->polygon_sides = 0;
    opts->big_m = 0.0;
    opts->mip_gap = 1e-6;
    opts->kkt_tolerance = 1e-7;
    opts->max_nodes = 10000;
    opts->max_sc_iters = 20;
    opts->sc_tolerance = 1e-4;
}

const char* vucoord_version(void) { return "0.1.0"; }

const char* vucoord_last_error(void) { return g_last_error.c_str(); }

vucoord_status vucoord_scenario_load_file(const char* path, vucoord_scenario** out) {
    if (!path || !out) {
        set_error("null argument");
        return VUCOORD_ERR_INVALID_ARG;
    }
    *out = nullptr;
    return guarded([&]() {
        auto handle = std::make_unique<vucoord_scenario>();
        handle->scenario = vucoord::Scenario::load_file(path);
        handle->model = vucoord::build_network_model(handle->scenario);
        *out = handle.release();
        return VUCOORD_OK;
    });
}

vucoord_status vucoord_scenario_parse(const char* json_text, vucoord_scenario** out) {
    if (!json_text || !out) {
        set_error("null argument");
        return VUCOORD_ERR_INVALID_ARG;
    }
    *out = nullptr;
    return guarded([&]() {
        auto handle = std::make_unique<vucoord_scenario>();
        handle->scenario = vucoord::Scenario::from_json_text(json_text);
        handle->model = vucoord::build_network_model(handle->scenario);
        *out = handle.release();
        return VUCOORD_OK;
    });
}

void vucoord_scenario_free(vucoord_scenario* scenario) { delete scenario; }

vucoord_status vucoord_scenario_json(vucoord_scenario* scenario, const char** out_json) {
    if (!scenario || !out_json) {
        set_error("null argument");
        return VUCOORD_ERR_INVALID_ARG;
    }
    return guarded([&]() {
        scenario->json_cache = scenario->scenario.to_json_text();
        *out_json = scenario->json_cache.c_str();
        return VUCOORD_OK;
    });
}

int vucoord_scenario_bus_count(const vucoord_scenario* scenario) {
    return scenario ? scenario->scenario.bus_count : -1;
}

int vucoord_scenario_ibr_count(const vucoord_scenario* scenario) {
    return scenario ? static_cast<int>(scenario->scenario.ibrs.size()) : -1;
}

vucoord_status vucoord_solve(const vucoord_scenario* scenario, const vucoord_solve_options* opts,
                             vucoord_report** out) {
    if (!scenario || !out) {
        set_error("null argument");
        return VUCOORD_ERR_INVALID_ARG;
    }
    *out = nullptr;
    vucoord_solve_options defaults;
    vucoord_solve_options_init(&defaults);
    const vucoord_solve_options& o = opts ? *opts : defaults;
    if (o.strategy < 1 || o.strategy > 3) {
        set_error("strategy must be 1, 2 or 3");
        return VUCOORD_ERR_INVALID_ARG;
    }
    return guarded([&]() {
        auto report = std::make_unique<vucoord_report>();
        report->kind = vucoord_report::Kind::solve;
        report->scenario_copy = scenario->scenario;
        const auto settings = to_settings(o);
        report->solve.run = vucoord::run_strategy(
            scenario->scenario, scenario->model, static_cast<vucoord::StrategyId>(o.strategy),
            settings);
        report->solve.scenario_digest = scenario->scenario.digest();
        report->solve.solver_settings = settings.solver;
        report->solve.scenario = &report->scenario_copy;
        report->objective = report->solve.run.j_exact;
        report->exit_code = report->solve.exit_code();
        const vucoord_status st = status_from_exit(report->exit_code);
        if (st != VUCOORD_OK) set_error(report->solve.run.message);
        *out = report.release();
        return st;
    });
}

vucoord_status vucoord_compare(const vucoord_scenario* scenario, const vucoord_solve_options* opts,
                               vucoord_report** out) {
    if (!scenario || !out) {
        set_error("null argument");
        return VUCOORD_ERR_INVALID_ARG;
    }
    *out = nullptr;
    vucoord_solve_options defaults;
    vucoord_solve_options_init(&defaults);
    const vucoord_solve_options& o = opts ? *opts : defaults;
    return guarded([&]() {
        auto report = std::make_unique<vucoord_report>();
        report->kind = vucoord_report::Kind::compare;
        report->scenario_copy = scenario->scenario;
        const auto settings = to_settings(o);
        report->compare.comparison =
            vucoord::compare_strategies(scenario->scenario, scenario->model, settings);
        report->compare.scenario_digest = scenario->scenario.digest();
        report->compare.solver_settings = settings.solver;
        report->compare.scenario = &report->scenario_copy;
        report->exit_code = report->compare.exit_code();
        const vucoord_status st = status_from_exit(report->exit_code);
        if (st != VUCOORD_OK) set_error("one or more strategies did not fully converge");
        *out = report.release();
        return st;
    });
}

vucoord_status vucoord_verify(const vucoord_scenario* scenario, const char* injections_json,
                              vucoord_report** out) {
    if (!scenario || !injections_json || !out) {
        set_error("null argument");
        return VUCOORD_ERR_INVALID_ARG;
    }
    *out = nullptr;
    return guarded([&]() {
        const vucoord::InjectionSet inj =
            vucoord::parse_injections_text(scenario->scenario, injections_json);
        auto report = std::make_unique<vucoord_report>();
        report->kind = vucoord_report::Kind::verify;
        report->scenario_copy = scenario->scenario;
        report->verification =
            vucoord::verify_solution(scenario->scenario, scenario->model, inj);
        report->objective = report->verification.j_common;
        report->exit_code = report->verification.feasible ? 0 : 4;
        if (!report->verification.feasible)
            set_error("injections violate the exact constraint set");
        const bool feasible = report->verification.feasible;
        *out = report.release();
        return feasible ? VUCOORD_OK : VUCOORD_ERR_INFEASIBLE;
    });
}

const char* vucoord_report_json(vucoord_report* report) {
    if (!report) return nullptr;
    try {
        switch (report->kind) {
        case vucoord_report::Kind::solve:
            report->json_cache = report->solve.to_json().dump(2);
            break;
        case vucoord_report::Kind::compare:
            report->json_cache = report->compare.to_json().dump(2);
            break;
        case vucoord_report::Kind::verify:
            report->json_cache = report->verification.to_json().dump(2);
            break;
        }
        return report->json_cache.c_str();
    } catch (const std::exception& e) {
        set_error(e.what());
        return nullptr;
    }
}

const char* vucoord_report_table(vucoord_report* report, const char* table) {
    if (!report || !table) return nullptr;
    try {
        const std::string_view name(table);
        if (report->kind == vucoord_report::Kind::solve && name == "buses")
            report->table_cache = report->solve.buses_csv();
        else if (report->kind == vucoord_report::Kind::solve && name == "ibrs")
            report->table_cache = report->solve.ibrs_csv();
        else if (report->kind == vucoord_report::Kind::compare && name == "scatter")
            report->table_cache = report->compare.scatter_csv();
        else
            return nullptr;
        return report->table_cache.c_str();
    } catch (const std::exception& e) {
        set_error(e.what());
        return nullptr;
    }
}

double vucoord_report_objective(const vucoord_report* report) {
    return report ? report->objective : 0.0;
}

int vucoord_report_exit_code(const vucoord_report* report) {
    return report ? report->exit_code : 1;
}

void vucoord_report_free(vucoord_report* report) { delete report; }

} // extern "C"
