// Command-line front end. Talks to the library exclusively through the
// public C API in vucoord.h.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "vucoord.h"

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
    std::string scenario_path;
    std::string out_dir = ".";
    std::string strategy = "s3";
    double lambda = 1.0;
    int polygon_sides = 0;
    double big_m = 0.0;
    double gap = 1e-6;
    int max_sc_iters = 20;
    bool heuristic_only = false;
    unsigned long long seed = 0;
};

void add_common_flags(CLI::App* cmd, CommonArgs& args, bool with_strategy) {
    cmd->add_option("--scenario", args.scenario_path, "Scenario JSON file")->required();
    cmd->add_option("--out", args.out_dir, "Output directory (default: current)");
    if (with_strategy)
        cmd->add_option("--strategy", args.strategy, "Strategy: s1, s2 or s3")
            ->check(CLI::IsMember({"s1", "s2", "s3"}));
    cmd->add_option("--lambda", args.lambda, "Positive-sequence weight for s3");
    cmd->add_option("--polygon-sides", args.polygon_sides, "Override the scenario polygon sides");
    cmd->add_option("--big-m", args.big_m, "Override the scenario big-M constant");
    cmd->add_option("--gap", args.gap, "Absolute branch-and-bound gap");
    cmd->add_option("--max-sc-iters", args.max_sc_iters, "Convexification iteration cap");
    cmd->add_flag("--heuristic-only", args.heuristic_only,
                  "Single solve with the nearest-side assignment");
    cmd->add_option("--seed", args.seed, "Seed recorded in reports");
}

vucoord_solve_options make_options(const CommonArgs& args) {
    vucoord_solve_options opts;
    vucoord_solve_options_init(&opts);
    opts.strategy = args.strategy == "s1" ? 1 : args.strategy == "s2" ? 2 : 3;
    opts.lambda_weight = args.lambda;
    opts.polygon_sides = args.polygon_sides;
    opts.big_m = args.big_m;
    opts.mip_gap = args.gap;
    opts.max_sc_iters = args.max_sc_iters;
    opts.heuristic_only = args.heuristic_only ? 1 : 0;
    opts.seed = args.seed;
    return opts;
}

int write_file(const fs::path& path, const char* content) {
    if (!content) {
        std::cerr << "error: missing report content for " << path << "\n";
        return 1;
    }
    std::ofstream out(path);
    if (!out) {
        std::cerr << "error: cannot write " << path << "\n";
        return 1;
    }
    out << content;
    return 0;
}

struct ScenarioHandle {
    vucoord_scenario* ptr = nullptr;
    ~ScenarioHandle() { vucoord_scenario_free(ptr); }
};

struct ReportHandle {
    vucoord_report* ptr = nullptr;
    ~ReportHandle() { vucoord_report_free(ptr); }
};

int load_scenario(const CommonArgs& args, ScenarioHandle& scenario) {
    const vucoord_status st = vucoord_scenario_load_file(args.scenario_path.c_str(), &scenario.ptr);
    if (st != VUCOORD_OK) {
        std::cerr << "error: " << vucoord_last_error() << "\n";
        return 1;
    }
    return 0;
}

int cmd_solve(const CommonArgs& args) {
    ScenarioHandle scenario;
    if (int rc = load_scenario(args, scenario)) return rc;

    const vucoord_solve_options opts = make_options(args);
    ReportHandle report;
    vucoord_solve(scenario.ptr, &opts, &report.ptr);
    if (!report.ptr) {
        std::cerr << "error: " << vucoord_last_error() << "\n";
        return 1;
    }

    const fs::path out_dir(args.out_dir);
    fs::create_directories(out_dir);
    if (write_file(out_dir / "report.json", vucoord_report_json(report.ptr))) return 1;
    if (write_file(out_dir / "buses.csv", vucoord_report_table(report.ptr, "buses"))) return 1;
    if (write_file(out_dir / "ibrs.csv", vucoord_report_table(report.ptr, "ibrs"))) return 1;

    const int code = vucoord_report_exit_code(report.ptr);
    std::cout << "strategy " << args.strategy << ": J_exact = "
              << vucoord_report_objective(report.ptr) << (code == 0 ? "" : " (not certified)")
              << "\n";
    if (code != 0) std::cerr << "solve status: " << vucoord_last_error() << "\n";
    return code;
}

int cmd_compare(const CommonArgs& args) {
    ScenarioHandle scenario;
    if (int rc = load_scenario(args, scenario)) return rc;

    const vucoord_solve_options opts = make_options(args);
    ReportHandle report;
    vucoord_compare(scenario.ptr, &opts, &report.ptr);
    if (!report.ptr) {
        std::cerr << "error: " << vucoord_last_error() << "\n";
        return 1;
    }

    const fs::path out_dir(args.out_dir);
    fs::create_directories(out_dir);
    if (write_file(out_dir / "compare.json", vucoord_report_json(report.ptr))) return 1;
    if (write_file(out_dir / "scatter.csv", vucoord_report_table(report.ptr, "scatter"))) return 1;

    std::cout << "comparison written to " << (out_dir / "compare.json").string() << "\n";
    return vucoord_report_exit_code(report.ptr);
}

int cmd_verify(const CommonArgs& args, const std::string& injections_path) {
    ScenarioHandle scenario;
    if (int rc = load_scenario(args, scenario)) return rc;

    std::ifstream in(injections_path);
    if (!in) {
        std::cerr << "error: cannot open injections file: " << injections_path << "\n";
        return 1;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string payload = ss.str();

    ReportHandle report;
    const vucoord_status st = vucoord_verify(scenario.ptr, payload.c_str(), &report.ptr);
    if (!report.ptr) {
        std::cerr << "error: " << vucoord_last_error() << "\n";
        return 1;
    }

    const fs::path out_dir(args.out_dir);
    fs::create_directories(out_dir);
    if (write_file(out_dir / "verify.json", vucoord_report_json(report.ptr))) return 1;

    if (st == VUCOORD_OK) {
        std::cout << "feasible: all exact constraints satisfied\n";
        return 0;
    }
    std::cout << vucoord_report_json(report.ptr) << "\n";
    std::cerr << "infeasible: " << vucoord_last_error() << "\n";
    return 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coordinated sequence-current optimization for community IBRs"};
    app.require_subcommand(1);

    CommonArgs solve_args, compare_args, verify_args;
    std::string injections_path;

    CLI::App* solve = app.add_subcommand("solve", "Optimize one strategy and write reports");
    add_common_flags(solve, solve_args, true);

    CLI::App* verify = app.add_subcommand("verify", "Check injections against exact constraints");
    add_common_flags(verify, verify_args, false);
    verify->add_option("--injections", injections_path,
                       "Injections JSON (or a prior report.json)")
        ->required();

    CLI::App* compare = app.add_subcommand("compare", "Run S1/S2/S3 and write comparison data");
    add_common_flags(compare, compare_args, false);

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed()) return cmd_solve(solve_args);
    if (verify->parsed()) return cmd_verify(verify_args, injections_path);
    if (compare->parsed()) return cmd_compare(compare_args);
    return 1;
}
