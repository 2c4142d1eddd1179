#ifndef MU2OPT_MU2OPT_H
#define MU2OPT_MU2OPT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MU2OPT_BUILDING)
#    define MU2_API __declspec(dllexport)
#  else
#    define MU2_API __declspec(dllimport)
#  endif
#else
#  define MU2_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mu2_status {
  MU2_OK = 0,
  MU2_ERR_CONFIG = 1,      /* invalid configuration or argument */
  MU2_ERR_NUMERIC = 2,     /* non-finite value in a direct oracle call */
  MU2_ERR_INGESTION = 3,   /* malformed corpus or results CSV */
  MU2_ERR_IO = 4,          /* unreadable input or unwritable output */
  MU2_ERR_DIAGNOSTIC = 5,  /* requested diagnostic is unavailable */
  MU2_ERR_BUFFER = 6,      /* caller buffer too small; see the needed size */
  MU2_ERR_INTERNAL = 7
} mu2_status;

typedef struct mu2_config mu2_config;
typedef struct mu2_problem mu2_problem;
typedef struct mu2_trajectory mu2_trajectory;

typedef struct mu2_log_point {
  size_t t;
  double f_gap;          /* NaN when the optimum is unknown */
  double eps_sq;         /* NaN when no estimator error is defined */
  double iterate_norm;
  size_t samples_used;
} mu2_log_point;

MU2_API const char* mu2_version(void);
MU2_API const char* mu2_status_string(mu2_status status);
/* Message of the last failed call on this thread; empty after success. */
MU2_API const char* mu2_last_error(void);

MU2_API mu2_status mu2_config_load_file(const char* path, mu2_config** out);
MU2_API mu2_status mu2_config_load_string(const char* text, mu2_config** out);
/* Applies a "key=value" override; dotted keys address tables. Recorded in
   the provenance of every artifact written from this configuration. */
MU2_API mu2_status mu2_config_set(mu2_config* config, const char* assignment);
MU2_API void mu2_config_free(mu2_config* config);

/* Single run: writes <out_dir>/trajectory.csv and <out_dir>/summary.json.
   *diverged receives 1 when the run diverged (artifacts are still written). */
MU2_API mu2_status mu2_run(const mu2_config* config, const char* out_dir, int* diverged);
/* Grid run from the [sweep] table: writes results.csv, provenance.json and
   sweep_summary.json. workers = 0 uses the configured worker count. */
MU2_API mu2_status mu2_sweep(const mu2_config* config, const char* out_dir, size_t workers);
/* Recomputes sweep_summary.json from a results CSV. factor <= 0 takes the
   factor from provenance.json beside the CSV, else 2. */
MU2_API mu2_status mu2_analyze(const char* csv_path, const char* out_dir, double factor);
/* Writes a NUL-terminated listing of problem tags and their constants.
   *needed receives the required capacity including the terminator. */
MU2_API mu2_status mu2_list_problems(char* buffer, size_t capacity, size_t* needed);

MU2_API mu2_status mu2_problem_create(const mu2_config* config, mu2_problem** out);
MU2_API void mu2_problem_free(mu2_problem* problem);
MU2_API int64_t mu2_problem_dimension(const mu2_problem* problem);
MU2_API mu2_status mu2_problem_exact_grad(const mu2_problem* problem, const double* x, size_t n,
                                          double* grad_out);
MU2_API mu2_status mu2_problem_exact_value(const mu2_problem* problem, const double* x, size_t n,
                                           double* value_out);

/* Runs the configured optimizer in memory. */
MU2_API mu2_status mu2_optimize(const mu2_config* config, mu2_trajectory** out);
MU2_API void mu2_trajectory_free(mu2_trajectory* trajectory);
MU2_API size_t mu2_trajectory_size(const mu2_trajectory* trajectory);
MU2_API mu2_status mu2_trajectory_point(const mu2_trajectory* trajectory, size_t index,
                                        mu2_log_point* out);
MU2_API int mu2_trajectory_diverged(const mu2_trajectory* trajectory);
/* Copies the output point; returns its dimension even when capacity is short. */
MU2_API size_t mu2_trajectory_output(const mu2_trajectory* trajectory, double* buffer, size_t capacity);

#ifdef __cplusplus
}
#endif

#endif
