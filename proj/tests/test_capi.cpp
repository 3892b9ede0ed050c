#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <string>

#include <nlohmann/json.hpp>

#include "vucoord.h"

#ifndef VUCOORD_SCENARIO_DIR
#define VUCOORD_SCENARIO_DIR "."
#endif

namespace {

std::string scenario_path(const char* name) {
    return std::string(VUCOORD_SCENARIO_DIR) + "/" + name;
}

const char* kTinyScenario = R"({
  "m": 2,
  "v_ph_pk": 1.0,
  "polygon_sides": 8,
  "slack": {"v0_plus": {"mag": 0.8, "deg": 0.0}, "v0_minus": {"mag": 0.1, "deg": -90.0}},
  "lines": [{"from": 0, "to": 1, "r": 0.04, "x": 0.08}, {"from": 1, "to": 2, "r": 0.03, "x": 0.06}],
  "loads": [{"bus": 1, "g": 0.3, "b": -0.1}],
  "ibrs": [{"bus": 2, "i_max": 0.8, "s_max": 2.5, "p_min": -2.0, "q_min": -2.0}],
  "regulated_set": "ibr_buses"
})";

} // namespace

TEST_CASE("defaults are populated by options init") {
    vucoord_solve_options opts;
    vucoord_solve_options_init(&opts);
    CHECK(opts.strategy == 3);
    CHECK(opts.lambda_weight == 1.0);
    CHECK(opts.mip_gap == 1e-6);
    CHECK(opts.kkt_tolerance == 1e-7);
    CHECK(opts.max_nodes == 10000);
}

TEST_CASE("parse errors carry diagnostics") {
    vucoord_scenario* s = nullptr;
    CHECK(vucoord_scenario_parse("{not json", &s) == VUCOORD_ERR_PARSE);
    CHECK(s == nullptr);
    CHECK(std::strlen(vucoord_last_error()) > 0);

    CHECK(vucoord_scenario_parse(R"({"m": 1})", &s) == VUCOORD_ERR_PARSE);

    // cycle: validation error names the offending line
    const char* cyclic = R"({
      "m": 2,
      "slack": {"v0_plus": {"mag": 1.0, "deg": 0.0}, "v0_minus": {"mag": 0.0, "deg": 0.0}},
      "lines": [{"from": 0, "to": 1, "r": 0.1, "x": 0.1},
                {"from": 1, "to": 2, "r": 0.1, "x": 0.1},
                {"from": 2, "to": 1, "r": 0.1, "x": 0.1}]
    })";
    CHECK(vucoord_scenario_parse(cyclic, &s) == VUCOORD_ERR_VALIDATION);
    CHECK(std::string(vucoord_last_error()).find("cycle") != std::string::npos);

    CHECK(vucoord_scenario_load_file("/nonexistent/file.json", &s) == VUCOORD_ERR_PARSE);
    CHECK(vucoord_scenario_parse(nullptr, &s) == VUCOORD_ERR_INVALID_ARG);
}

TEST_CASE("scenario accessors and json echo") {
    vucoord_scenario* s = nullptr;
    REQUIRE(vucoord_scenario_parse(kTinyScenario, &s) == VUCOORD_OK);
    CHECK(vucoord_scenario_bus_count(s) == 2);
    CHECK(vucoord_scenario_ibr_count(s) == 1);
    const char* json_text = nullptr;
    REQUIRE(vucoord_scenario_json(s, &json_text) == VUCOORD_OK);
    const auto echoed = nlohmann::json::parse(json_text);
    CHECK(echoed.at("m") == 2);
    CHECK(echoed.at("slack").at("v0_minus").at("deg") == doctest::Approx(-90.0));
    vucoord_scenario_free(s);
}

TEST_CASE("solve produces a full report through the c api") {
    vucoord_scenario* s = nullptr;
    REQUIRE(vucoord_scenario_load_file(scenario_path("case1_2bus.json").c_str(), &s) == VUCOORD_OK);

    vucoord_solve_options opts;
    vucoord_solve_options_init(&opts);
    vucoord_report* report = nullptr;
    CHECK(vucoord_solve(s, &opts, &report) == VUCOORD_OK);
    REQUIRE(report != nullptr);
    CHECK(vucoord_report_exit_code(report) == 0);
    CHECK(vucoord_report_objective(report) > 0.0);

    const auto j = nlohmann::json::parse(vucoord_report_json(report));
    CHECK(j.at("status") == "optimal");
    CHECK(j.at("converged") == true);
    CHECK(j.at("verification").at("feasible") == true);
    CHECK(j.at("ibrs").size() == 1);

    const char* buses = vucoord_report_table(report, "buses");
    REQUIRE(buses != nullptr);
    CHECK(std::string(buses).rfind("bus,v_plus,v_minus,vuf", 0) == 0);
    const char* ibrs = vucoord_report_table(report, "ibrs");
    REQUIRE(ibrs != nullptr);
    CHECK(std::string(ibrs).find("i_d_plus") != std::string::npos);
    CHECK(vucoord_report_table(report, "scatter") == nullptr);

    vucoord_report_free(report);
    vucoord_scenario_free(s);
}

TEST_CASE("reports are deterministic apart from timing") {
    vucoord_scenario* s = nullptr;
    REQUIRE(vucoord_scenario_parse(kTinyScenario, &s) == VUCOORD_OK);
    vucoord_solve_options opts;
    vucoord_solve_options_init(&opts);

    nlohmann::json a, b;
    for (nlohmann::json* out : {&a, &b}) {
        vucoord_report* report = nullptr;
        REQUIRE(vucoord_solve(s, &opts, &report) == VUCOORD_OK);
        *out = nlohmann::json::parse(vucoord_report_json(report));
        out->erase("timing");
        vucoord_report_free(report);
    }
    CHECK(a == b);
    vucoord_scenario_free(s);
}

TEST_CASE("verify distinguishes feasible and infeasible payloads") {
    vucoord_scenario* s = nullptr;
    REQUIRE(vucoord_scenario_parse(kTinyScenario, &s) == VUCOORD_OK);

    vucoord_report* ok_report = nullptr;
    const char* zero = R"({"injections": [
        {"bus": 2, "i_d_plus": 0.0, "i_q_plus": 0.0, "i_d_minus": 0.0, "i_q_minus": 0.0}]})";
    CHECK(vucoord_verify(s, zero, &ok_report) == VUCOORD_OK);
    CHECK(vucoord_report_exit_code(ok_report) == 0);
    vucoord_report_free(ok_report);

    vucoord_report* bad_report = nullptr;
    const char* hot = R"({"injections": [
        {"bus": 2, "i_d_plus": 2.0, "i_q_plus": 0.0, "i_d_minus": 0.0, "i_q_minus": 0.0}]})";
    CHECK(vucoord_verify(s, hot, &bad_report) == VUCOORD_ERR_INFEASIBLE);
    REQUIRE(bad_report != nullptr);
    CHECK(vucoord_report_exit_code(bad_report) == 4);
    const auto j = nlohmann::json::parse(vucoord_report_json(bad_report));
    bool phase_violation = false;
    for (const auto& e : j.at("constraints"))
        if (e.at("kind") == "phase_current" && e.at("violated") == true) phase_violation = true;
    CHECK(phase_violation);
    vucoord_report_free(bad_report);

    vucoord_report* r = nullptr;
    CHECK(vucoord_verify(s, "{\"injections\": [{\"bus\": 1}]}", &r) == VUCOORD_ERR_PARSE);
    vucoord_scenario_free(s);
}

TEST_CASE("compare bundles the three strategies") {
    vucoord_scenario* s = nullptr;
    REQUIRE(vucoord_scenario_parse(kTinyScenario, &s) == VUCOORD_OK);
    vucoord_solve_options opts;
    vucoord_solve_options_init(&opts);
    vucoord_report* report = nullptr;
    CHECK(vucoord_compare(s, &opts, &report) == VUCOORD_OK);
    REQUIRE(report != nullptr);

    const auto j = nlohmann::json::parse(vucoord_report_json(report));
    REQUIRE(j.at("strategies").size() == 3);
    double j1 = 0, j2 = 0, j3 = 0;
    for (const auto& run : j.at("strategies")) {
        const double jc = run.at("objective").at("j_common").get<double>();
        if (run.at("strategy") == "s1") j1 = jc;
        if (run.at("strategy") == "s2") j2 = jc;
        if (run.at("strategy") == "s3") j3 = jc;
    }
    CHECK(j3 <= std::min(j1, j2) + 1e-3);

    const char* scatter = vucoord_report_table(report, "scatter");
    REQUIRE(scatter != nullptr);
    CHECK(std::string(scatter).rfind("strategy,bus,v_plus,v_minus", 0) == 0);
    vucoord_report_free(report);
    vucoord_scenario_free(s);
}

TEST_CASE("capacity utilization stays within the rating") {
    vucoord_scenario* s = nullptr;
    REQUIRE(vucoord_scenario_load_file(scenario_path("case2_23bus.json").c_str(), &s) ==
            VUCOORD_OK);
    vucoord_solve_options opts;
    vucoord_solve_options_init(&opts);
    vucoord_report* report = nullptr;
    REQUIRE(vucoord_solve(s, &opts, &report) == VUCOORD_OK);
    const auto j = nlohmann::json::parse(vucoord_report_json(report));
    for (const auto& row : j.at("ibrs")) {
        const double util = row.at("utilization").get<double>();
        CHECK(util >= 0.0);
        CHECK(util <= 1.0 + 1e-3);
    }
    vucoord_report_free(report);
    vucoord_scenario_free(s);
}
