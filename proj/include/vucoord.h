/* Public C API of the voltage-unbalance coordination library.
 *
 * All functions are thread-compatible: distinct handles may be used from
 * distinct threads, a single handle must not be shared without external
 * synchronization. Errors are reported through vucoord_status codes; the
 * most recent error message of the calling thread is available via
 * vucoord_last_error().
 */
#ifndef VUCOORD_H
#define VUCOORD_H

#include <stddef.h>

#if defined(_WIN32)
#define VUCOORD_API __declspec(dllexport)
#else
#define VUCOORD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vucoord_status {
    VUCOORD_OK = 0,
    VUCOORD_ERR_INVALID_ARG = 1,
    VUCOORD_ERR_IO = 2,
    VUCOORD_ERR_PARSE = 3,
    VUCOORD_ERR_VALIDATION = 4,
    VUCOORD_ERR_MODEL = 5,
    VUCOORD_ERR_INFEASIBLE = 6,
    VUCOORD_ERR_NO_CONVERGENCE = 7,
    VUCOORD_ERR_SOLVER = 8,
    VUCOORD_ERR_INTERNAL = 9
} vucoord_status;

typedef struct vucoord_scenario vucoord_scenario;
typedef struct vucoord_report vucoord_report;

typedef struct vucoord_solve_options {
    int strategy;            /* 1, 2 or 3 */
    double lambda_weight;    /* S3 positive-sequence weight, default 1.0 */
    int polygon_sides;       /* <= 0: use the scenario value */
    double big_m;            /* <= 0: use the scenario value */
    double mip_gap;          /* absolute branch-and-bound gap, default 1e-6 */
    double kkt_tolerance;    /* interior-point tolerance, default 1e-7 */
    int max_nodes;           /* branch-and-bound node limit, default 10000 */
    int max_sc_iters;        /* successive-convexification cap, default 20 */
    double sc_tolerance;     /* voltage-estimate convergence, default 1e-4 pu */
    int heuristic_only;      /* 1: warm-start assignment + single solve */
    unsigned long long seed; /* recorded in reports */
} vucoord_solve_options;

VUCOORD_API void vucoord_solve_options_init(vucoord_solve_options* opts);

VUCOORD_API const char* vucoord_version(void);

/* Message describing the last failure on this thread; never NULL. */
VUCOORD_API const char* vucoord_last_error(void);

VUCOORD_API vucoord_status vucoord_scenario_load_file(const char* path, vucoord_scenario** out);
VUCOORD_API vucoord_status vucoord_scenario_parse(const char* json_text, vucoord_scenario** out);
VUCOORD_API void vucoord_scenario_free(vucoord_scenario* scenario);
VUCOORD_API vucoord_status vucoord_scenario_json(vucoord_scenario* scenario, const char** out_json);
VUCOORD_API int vucoord_scenario_bus_count(const vucoord_scenario* scenario);
VUCOORD_API int vucoord_scenario_ibr_count(const vucoord_scenario* scenario);

/* Solve one strategy. A report is produced whenever the inputs were valid,
 * including infeasible or non-converged outcomes; the status then reflects
 * the outcome (VUCOORD_OK only for a certified, converged solve). */
VUCOORD_API vucoord_status vucoord_solve(const vucoord_scenario* scenario,
                                         const vucoord_solve_options* opts,
                                         vucoord_report** out);

/* Run strategies S1, S2 and S3 and bundle them into one report. */
VUCOORD_API vucoord_status vucoord_compare(const vucoord_scenario* scenario,
                                           const vucoord_solve_options* opts,
                                           vucoord_report** out);

/* Exact feasibility check of explicit injections (JSON payload: either an
 * "injections" array or a previous solve report). VUCOORD_OK means
 * exact-feasible; VUCOORD_ERR_INFEASIBLE carries the margin report. */
VUCOORD_API vucoord_status vucoord_verify(const vucoord_scenario* scenario,
                                          const char* injections_json, vucoord_report** out);

/* Serialized report; the string is owned by the report handle. */
VUCOORD_API const char* vucoord_report_json(vucoord_report* report);

/* CSV tables: "buses", "ibrs" (solve reports) or "scatter" (compare
 * reports). NULL when the table does not apply. */
VUCOORD_API const char* vucoord_report_table(vucoord_report* report, const char* table);

VUCOORD_API double vucoord_report_objective(const vucoord_report* report);

/* CLI exit semantics: 0 ok, 2 infeasible, 3 not converged/certified,
 * 4 verification found violations. */
VUCOORD_API int vucoord_report_exit_code(const vucoord_report* report);

VUCOORD_API void vucoord_report_free(vucoord_report* report);

#ifdef __cplusplus
}
#endif

#endif /* VUCOORD_H */
