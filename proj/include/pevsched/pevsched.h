#ifndef PEVSCHED_PEVSCHED_H
#define PEVSCHED_PEVSCHED_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PEVSCHED_BUILDING_LIBRARY)
#    define PEVSCHED_API __declspec(dllexport)
#  else
#    define PEVSCHED_API __declspec(dllimport)
#  endif
#else
#  define PEVSCHED_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every call that can fail returns a status; on failure pev_last_error()
 * describes the problem until the next failing call on the same thread. */
typedef enum pev_status {
  PEV_OK = 0,
  PEV_ERR_PARSE = 1,
  PEV_ERR_TOPOLOGY = 2,
  PEV_ERR_CAPACITY = 3,
  PEV_ERR_WINDOW = 4,
  PEV_ERR_INFEASIBLE = 5,
  PEV_ERR_CONFIG = 6,
  PEV_ERR_NO_SOLUTION = 7,
  PEV_ERR_IO = 8,
  PEV_ERR_INTERNAL = 9,
  PEV_ERR_ARGUMENT = 10
} pev_status;

typedef enum pev_method {
  PEV_METHOD_PENALTY = 0,
  PEV_METHOD_PRIMAL_DUAL = 1,
  PEV_METHOD_UNCONSTRAINED = 2
} pev_method;

typedef enum pev_projection {
  PEV_PROJECTION_EXACT = 0,
  PEV_PROJECTION_BISECTION = 1
} pev_projection;

typedef struct pev_scenario pev_scenario;
typedef struct pev_result pev_result;

PEVSCHED_API const char* pev_version(void);
PEVSCHED_API const char* pev_last_error(void);
PEVSCHED_API const char* pev_status_name(pev_status status);

/* ---- scenarios ---- */

/* Parses and builds the network; feasibility is checked by pev_validate. */
PEVSCHED_API pev_status pev_scenario_load(const char* path, pev_scenario** out);
PEVSCHED_API pev_status pev_scenario_generate_desk13(uint64_t seed, double scale, double nu, pev_scenario** out);
PEVSCHED_API pev_status pev_scenario_save(const pev_scenario* scenario, const char* path);
PEVSCHED_API void pev_scenario_free(pev_scenario* scenario);
PEVSCHED_API pev_status pev_scenario_dims(const pev_scenario* scenario, size_t* pevs, size_t* feeders,
                                          size_t* horizon, size_t* max_depth);

typedef struct pev_validation {
  int necessary_ok;      /* per-PEV energy and per-feeder energy checks pass */
  int slater_verified;   /* the proportional fill is strictly feasible */
  double slater_slack;   /* kW */
  size_t warning_count;
} pev_validation;

/* Returns PEV_ERR_INFEASIBLE when a necessary condition fails; `out` is
 * filled either way. */
PEVSCHED_API pev_status pev_validate(pev_scenario* scenario, pev_validation* out);
/* Warning i of the last pev_validate call, or NULL. */
PEVSCHED_API const char* pev_validation_warning(const pev_scenario* scenario, size_t i);

/* ---- optimizer runs ---- */

typedef struct pev_run_options {
  pev_method method;
  double step;                  /* 0 selects the method default */
  size_t iterations;            /* M, or the iteration cap for penalty runs */
  double tolerance;             /* penalty stop on ||p^{m+1} - p^m||_inf */
  double eps_hat;               /* penalty exponent offset */
  double slater_slack;          /* primal-dual; 0 estimates it */
  int safeguard;                /* penalty: refuse unsafe steps */
  pev_projection projection;
  double projection_tolerance;  /* bisection epsilon' */
  size_t record_stride;         /* 0 selects ceil(M / 10^4) */
} pev_run_options;

PEVSCHED_API void pev_run_options_default(pev_method method, pev_run_options* out);

PEVSCHED_API pev_status pev_run(const pev_scenario* scenario, const pev_run_options* options, pev_result** out);

typedef struct pev_summary {
  size_t iterations;
  int converged;                   /* penalty only */
  double step;
  double objective;                /* sum_t (D + P)^2 */
  double variance;                 /* population variance of D + P */
  double max_normalized_overload;  /* max over hours */
  double max_violation;            /* kW */
  double wall_time_s;
  size_t downstream_messages;
  size_t downstream_hops;
  size_t upstream_announcements;
} pev_summary;

PEVSCHED_API pev_status pev_result_summary(const pev_result* result, pev_summary* out);
/* Row-major K x T copy of the reported profiles (p_hat for primal-dual). */
PEVSCHED_API pev_status pev_result_profiles(const pev_result* result, double* out, size_t length);
PEVSCHED_API pev_status pev_result_write_trace(const pev_result* result, const char* path);
PEVSCHED_API pev_status pev_result_write_hourly(const pev_result* result, const char* path);
PEVSCHED_API pev_status pev_result_write_profiles(const pev_result* result, const char* path);
PEVSCHED_API size_t pev_result_warning_count(const pev_result* result);
PEVSCHED_API const char* pev_result_warning(const pev_result* result, size_t i);
PEVSCHED_API void pev_result_free(pev_result* result);

/* Runs unconstrained, penalty and primal-dual and writes the comparison
 * CSVs into `directory`. `summaries` (3 entries, nullable) receives the rows
 * in that order. Either options pointer may be NULL for defaults. */
PEVSCHED_API pev_status pev_compare(const pev_scenario* scenario, const pev_run_options* penalty,
                                    const pev_run_options* primal_dual, const char* directory,
                                    pev_summary* summaries);

/* ---- single projection ---- */

/* Projects onto {0 <= p <= pmax, sum p = demand} minimizing
 * sum (p + b)^2. `out_level` and `out_steps` are nullable. */
PEVSCHED_API pev_status pev_project(const double* b, const double* pmax, size_t n, double demand,
                                    pev_projection method, double tolerance, double* out_profile,
                                    double* out_level, size_t* out_steps);

/* ---- reference solves ---- */

typedef struct pev_oracle_options {
  double step;          /* primal-dual step */
  size_t iterations;
  double slater_slack;  /* 0 estimates it */
  double grid;          /* > 0 also runs the exhaustive grid at this resolution */
} pev_oracle_options;

typedef struct pev_oracle_report {
  double value;             /* f* after repair */
  double unrepaired_value;
  double repair_shift;
  double max_violation;     /* relative to capacity */
  size_t iterations;
  int confident;
  double grid_value;        /* NaN unless a grid search ran */
  int grid_confident;
} pev_oracle_report;

PEVSCHED_API void pev_oracle_options_default(pev_oracle_options* out);
/* `profiles` (nullable, K x T) receives the repaired optimum. */
PEVSCHED_API pev_status pev_oracle_solve(const pev_scenario* scenario, const pev_oracle_options* options,
                                         pev_oracle_report* report, double* profiles, size_t length);

#ifdef __cplusplus
}
#endif

#endif
