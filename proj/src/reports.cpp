#include "vucoord/reports.hpp"

#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vucoord/errors.hpp"

namespace vucoord {

using nlohmann::json;

std::string format_csv_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", value);
    return buf;
}

namespace {

const char* status_name(SolveStatus s) {
    switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::node_limit: return "node_limit";
    case SolveStatus::subproblem_failure: return "subproblem_failure";
    }
    return "?";
}

json run_to_json(const StrategyRun& run, const Scenario& scenario) {
    json j;
    j["strategy"] = strategy_name(run.strategy);
    j["status"] = status_name(run.status);
    j["converged"] = run.converged;
    j["message"] = run.message;
    j["objective"] = {{"j_exact", run.j_exact},
                      {"j_common", run.j_common},
                      {"j_model", run.j_model},
                      {"relaxation_discrepancy", run.j_discrepancy},
                      {"relaxation_discrepancy_bound", run.j_discrepancy_bound},
                      {"alpha", run.objective_cfg.alpha},
                      {"lambda", run.objective_cfg.lambda}};

    j["buses"] = json::array();
    for (size_t i = 0; i < run.flow.bus.size(); ++i) {
        const BusVoltage& v = run.flow.bus[i];
        j["buses"].push_back({{"bus", static_cast<int>(i + 1)},
                              {"v_plus", v.mag_plus()},
                              {"v_minus", v.mag_minus()},
                              {"vuf", v.vuf()}});
    }

    j["ibrs"] = json::array();
    for (size_t s = 0; s < run.injections.currents.size(); ++s) {
        const IbrSpec& ibr = scenario.ibrs[s];
        const SequenceCurrents& cur = run.injections.currents[s];
        const BusVoltage& v = run.flow.at_bus(ibr.bus);
        const PowerOutput pq = apparent_power(v, cur);
        j["ibrs"].push_back(
            {{"ibr", static_cast<int>(s + 1)},
             {"bus", ibr.bus},
             {"i_d_plus", cur.d_plus},
             {"i_q_plus", cur.q_plus},
             {"i_d_minus", cur.d_minus},
             {"i_q_minus", cur.q_minus},
             {"i_phase_a", phase_current_magnitude(cur, PhaseId::a)},
             {"i_phase_b", phase_current_magnitude(cur, PhaseId::b)},
             {"i_phase_c", phase_current_magnitude(cur, PhaseId::c)},
             {"p", pq.p},
             {"q", pq.q},
             {"s", pq.s()},
             {"utilization", ibr.s_max > 0.0 ? pq.s() / ibr.s_max : 0.0}});
    }

    j["verification"] = run.verification.to_json();

    j["sc_trace"] = json::array();
    for (const auto& it : run.trace)
        j["sc_trace"].push_back({{"iteration", it.index},
                                 {"estimate_change", it.estimate_change},
                                 {"model_objective", it.model_objective},
                                 {"exact_objective", it.exact_objective},
                                 {"feasible", it.feasible},
                                 {"bound_gap", it.bound_gap},
                                 {"nodes", it.nodes}});

    j["solver"] = {{"nodes", run.total_nodes},
                   {"ipm_iterations", run.total_ipm_iterations},
                   {"bound_gap", run.final_gap}};
    j["timing"] = {{"seconds", run.seconds}};
    return j;
}

json settings_to_json(const SolverSettings& s) {
    return {{"kkt_tolerance", s.kkt_tolerance},
            {"absolute_gap", s.absolute_gap},
            {"max_nodes", s.max_nodes},
            {"heuristic_only", s.heuristic_only},
            {"seed", s.seed}};
}

} // namespace

json SolveReport::to_json() const {
    json j = run_to_json(run, *scenario);
    j["scenario_digest"] = scenario_digest;
    j["settings"] = settings_to_json(solver_settings);
    return j;
}

std::string SolveReport::buses_csv() const {
    std::ostringstream out;
    out << "bus,v_plus,v_minus,vuf\n";
    for (size_t i = 0; i < run.flow.bus.size(); ++i) {
        const BusVoltage& v = run.flow.bus[i];
        out << (i + 1) << ',' << format_csv_number(v.mag_plus()) << ','
            << format_csv_number(v.mag_minus()) << ',' << format_csv_number(v.vuf()) << '\n';
    }
    return out.str();
}

std::string SolveReport::ibrs_csv() const {
    std::ostringstream out;
    out << "ibr,bus,i_d_plus,i_q_plus,i_d_minus,i_q_minus,i_phase_a,i_phase_b,i_phase_c,"
           "p,q,s,utilization\n";
    for (size_t s = 0; s < run.injections.currents.size(); ++s) {
        const IbrSpec& ibr = scenario->ibrs[s];
        const SequenceCurrents& cur = run.injections.currents[s];
        const BusVoltage& v = run.flow.at_bus(ibr.bus);
        const PowerOutput pq = apparent_power(v, cur);
        out << (s + 1) << ',' << ibr.bus << ',' << format_csv_number(cur.d_plus) << ','
            << format_csv_number(cur.q_plus) << ',' << format_csv_number(cur.d_minus) << ','
            << format_csv_number(cur.q_minus) << ','
            << format_csv_number(phase_current_magnitude(cur, PhaseId::a)) << ','
            << format_csv_number(phase_current_magnitude(cur, PhaseId::b)) << ','
            << format_csv_number(phase_current_magnitude(cur, PhaseId::c)) << ','
            << format_csv_number(pq.p) << ',' << format_csv_number(pq.q) << ','
            << format_csv_number(pq.s()) << ','
            << format_csv_number(ibr.s_max > 0.0 ? pq.s() / ibr.s_max : 0.0) << '\n';
    }
    return out.str();
}

int SolveReport::exit_code() const {
    if (run.status == SolveStatus::infeasible) return 2;
    if (run.status == SolveStatus::optimal && run.converged) return 0;
    return 3;
}

json ComparisonReport::to_json() const {
    json j;
    j["scenario_digest"] = scenario_digest;
    j["settings"] = settings_to_json(solver_settings);
    j["strategies"] = json::array();
    for (const auto& run : comparison.runs) j["strategies"].push_back(run_to_json(run, *scenario));
    return j;
}

std::string ComparisonReport::scatter_csv() const {
    std::ostringstream out;
    out << "strategy,bus,v_plus,v_minus\n";
    for (const auto& run : comparison.runs) {
        for (size_t i = 0; i < run.flow.bus.size(); ++i) {
            const BusVoltage& v = run.flow.bus[i];
            out << strategy_name(run.strategy) << ',' << (i + 1) << ','
                << format_csv_number(v.mag_plus()) << ',' << format_csv_number(v.mag_minus())
                << '\n';
        }
    }
    return out.str();
}

int ComparisonReport::exit_code() const {
    int code = 0;
    for (const auto& run : comparison.runs) {
        if (run.status == SolveStatus::infeasible) return 2;
        if (!(run.status == SolveStatus::optimal && run.converged)) code = 3;
    }
    return code;
}

InjectionSet parse_injections_json(const Scenario& scenario, const json& j) {
    if (!j.is_object()) throw ParseError("injections: top level must be a JSON object");
    const json* rows = nullptr;
    if (j.contains("injections") && j.at("injections").is_array())
        rows = &j.at("injections");
    else if (j.contains("ibrs") && j.at("ibrs").is_array())
        rows = &j.at("ibrs");
    else
        throw ParseError("injections: expected an 'injections' or 'ibrs' array");

    InjectionSet inj;
    inj.currents.resize(scenario.ibrs.size());
    for (const auto& row : *rows) {
        if (!row.contains("bus")) throw ParseError("injections: row missing 'bus'");
        const int bus = row.at("bus").get<int>();
        const int idx = scenario.ibr_index_of_bus(bus);
        if (idx < 0)
            throw ParseError("injections: bus " + std::to_string(bus) + " has no IBR");
        SequenceCurrents& cur = inj.currents[static_cast<size_t>(idx)];
        auto field = [&row](const char* key) {
            if (!row.contains(key))
                throw ParseError(std::string("injections: row missing '") + key + "'");
            return row.at(key).get<double>();
        };
        cur.d_plus = field("i_d_plus");
        cur.q_plus = field("i_q_plus");
        cur.d_minus = field("i_d_minus");
        cur.q_minus = field("i_q_minus");
    }
    return inj;
}

InjectionSet parse_injections_text(const Scenario& scenario, const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("injections JSON: ") + e.what());
    }
    return parse_injections_json(scenario, j);
}

} // namespace vucoord
