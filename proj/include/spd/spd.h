#ifndef SPD_SPD_H
#define SPD_SPD_H

/* C interface to the shortest-path-distribution solver.
 *
 * Objects are opaque handles released with the matching *_free call.
 * Every fallible call returns an spd_status; on failure spd_last_error()
 * describes the problem (per thread, valid until the next failing call).
 * Strings returned through char** are released with spd_free_string. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32) && defined(SPD_BUILDING_LIBRARY)
#define SPD_API __declspec(dllexport)
#elif defined(_WIN32)
#define SPD_API __declspec(dllimport)
#elif defined(SPD_BUILDING_LIBRARY)
#define SPD_API __attribute__((visibility("default")))
#else
#define SPD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum spd_status {
  SPD_OK = 0,
  SPD_ERR_INVALID_ARGUMENT = 1,
  SPD_ERR_INFEASIBLE = 2,
  SPD_ERR_DOMAIN = 3,
  SPD_ERR_SINGULARITY = 4,
  SPD_ERR_NEGATIVITY = 5,
  SPD_ERR_SOLVER = 6,
  SPD_ERR_UNSUPPORTED = 7,
  SPD_ERR_IO = 8,
  SPD_ERR_INTERNAL = 9
} spd_status;

typedef enum spd_solver { SPD_SOLVER_DIRECT = 0, SPD_SOLVER_LAMBDA = 1 } spd_solver;

typedef struct spd_report spd_report;
typedef struct spd_case spd_case;
typedef struct spd_rows spd_rows;

SPD_API const char* spd_version(void);
SPD_API const char* spd_last_error(void);
SPD_API const char* spd_status_name(spd_status status);
SPD_API void spd_free_string(char* text);

/* ---- single solves ---------------------------------------------------- */

typedef struct spd_summary {
  double path_length;
  double uniformity_index;
  double peak_density;
  double max_equality_violation;
  double kkt_stationarity_residual;
  int iterations;
  int converged;
} spd_summary;

/* Solves on [a, b] with n cells and raw moments mu_0..mu_{count-1}
 * (mu_0 must be 1). The lambda route may return a report without a density
 * when the fitted multipliers leave the feasible region. */
SPD_API spd_status spd_solve(double a, double b, size_t n, const double* moments, size_t count, spd_solver solver,
                             spd_report** out);
SPD_API void spd_report_free(spd_report* report);
SPD_API spd_status spd_report_summary(const spd_report* report, spd_summary* out);
/* Writes min(size, capacity) density values; *size receives n. */
SPD_API spd_status spd_report_density(const spd_report* report, double* values, size_t capacity, size_t* size);
SPD_API spd_status spd_report_json(const spd_report* report, char** json);
SPD_API spd_status spd_report_density_csv(const spd_report* report, char** csv);

/* ---- maximum-entropy references -------------------------------------- */

/* Moment-matched reference on [a, b] as JSON {kind, a, b, params} plus its
 * CDF path length. */
SPD_API spd_status spd_reference_json(double a, double b, const double* moments, size_t count, char** json);
SPD_API spd_status spd_reference_path_length(double a, double b, const double* moments, size_t count,
                                             double* length);

/* ---- case studies ----------------------------------------------------- */

typedef struct spd_run_options {
  spd_solver solver;
  const char* out_dir;    /* NULL or "" writes no artifacts */
  const char* trace_path; /* NULL or "" disables the merit log */
  size_t trial_count;
  uint64_t seed;
  unsigned jobs;
} spd_run_options;

SPD_API void spd_run_options_init(spd_run_options* options);

SPD_API size_t spd_preset_count(void);
SPD_API const char* spd_preset_name(size_t index);

SPD_API spd_status spd_case_create(const char* name, double a, double b, const double* moments, size_t count, size_t n,
                                   spd_case** out);
SPD_API spd_status spd_case_preset(const char* name, spd_case** out);
SPD_API spd_status spd_case_sweep_preset(const char* name, spd_case** out);
SPD_API spd_status spd_case_from_json(const char* json, spd_case** out);
SPD_API spd_status spd_case_to_json(const spd_case* spec, char** json);
SPD_API spd_status spd_case_interval(const spd_case* spec, double* a, double* b);
SPD_API spd_status spd_case_add_sweep_interval(spd_case* spec, double a, double b);
SPD_API spd_status spd_case_clear_sweep(spd_case* spec);
SPD_API void spd_case_free(spd_case* spec);

/* One row for run, one per sweep interval for sweep. */
SPD_API spd_status spd_case_run(const spd_case* spec, const spd_run_options* options, spd_rows** out);
SPD_API spd_status spd_case_sweep(const spd_case* spec, const spd_run_options* options, spd_rows** out);

/* ---- comparison rows -------------------------------------------------- */

typedef struct spd_row {
  const char* case_name; /* owned by the row set */
  double spd_path_length;
  double me_path_length;
  double baseline;
  double difference_ratio; /* NaN when the solve failed */
  double spd_uniformity;
  double me_uniformity;
  double spd_peak_density;
  double a;
  double b;
  size_t n;
  double trial_min_path_length; /* NaN when no trials ran */
  int converged;
  int degenerate;
} spd_row;

SPD_API spd_status spd_rows_create(spd_rows** out);
SPD_API spd_status spd_rows_append(spd_rows* dst, const spd_rows* src);
SPD_API size_t spd_rows_count(const spd_rows* rows);
SPD_API spd_status spd_rows_get(const spd_rows* rows, size_t index, spd_row* out);
/* format: "csv", "json" or "markdown". */
SPD_API spd_status spd_rows_render(const spd_rows* rows, const char* format, char** text);
SPD_API spd_status spd_rows_from_json(const char* json, spd_rows** out);
SPD_API void spd_rows_free(spd_rows* rows);

#ifdef __cplusplus
}
#endif

#endif
