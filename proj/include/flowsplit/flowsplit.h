/* C interface to the flowsplit library. All functions are thread-safe except
   that a handle must not be freed while another thread uses it. */
#ifndef FLOWSPLIT_H
#define FLOWSPLIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(FLOWSPLIT_BUILDING)
#define FS_API __attribute__((visibility("default")))
#else
#define FS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fs_status {
  FS_OK = 0,
  FS_INVALID_ARGUMENT = 1,
  FS_DIMENSION_MISMATCH = 2,
  FS_OUT_OF_RANGE = 3,
  FS_SINGULAR = 4,
  FS_EXPLOSION = 5,
  FS_NOT_CONVERGED = 6,
  FS_UNKNOWN_SCENARIO = 7,
  FS_PARSE_ERROR = 8,
  FS_IO_ERROR = 9,
  FS_CHECK_FAILED = 10,
  FS_INTERNAL = 99
} fs_status;

typedef enum fs_method { FS_METHOD_DIRECT = 0, FS_METHOD_ITO = 1, FS_METHOD_CB = 2 } fs_method;

typedef struct fs_scenario fs_scenario;
typedef struct fs_trace fs_trace;

typedef struct fs_scenario_info {
  size_t dim;      /* 0 for fixture-only scenarios */
  size_t vertical; /* k */
  size_t noises;   /* m */
  double horizon;
  double dt;
  uint64_t seed;
  int has_flow;
  int has_fixture;
  int has_transition;
} fs_scenario_info;

typedef struct fs_stopping_time {
  int found;
  double tau; /* NaN when not found */
  double t_lo;
  double t_hi;
  double horizon;
} fs_stopping_time;

FS_API const char* fs_version(void);
/* Message of the last failed call on this thread; never NULL. */
FS_API const char* fs_last_error(void);
FS_API const char* fs_status_string(fs_status s);

FS_API size_t fs_scenario_count(void);
/* Name of bundled scenario i, or NULL if out of range. */
FS_API const char* fs_scenario_name(size_t i);

/* params: JSON object of constant overrides, or NULL. */
FS_API fs_status fs_scenario_open(const char* name, const char* params_json, fs_scenario** out);
FS_API fs_status fs_scenario_load_json(const char* spec_json, fs_scenario** out);
FS_API void fs_scenario_free(fs_scenario* s);
FS_API fs_status fs_scenario_info_get(const fs_scenario* s, fs_scenario_info* info);

/* rows/cols: 1-based strictly increasing, length k. NULL selects the trailing
   vertical block. dt <= 0 or horizon <= 0 take the scenario defaults. */
FS_API fs_status fs_subdet_trace(const fs_scenario* s, fs_method method, const size_t* rows, const size_t* cols,
                                 size_t k, double horizon, double dt, uint64_t seed, fs_trace** out);
FS_API size_t fs_trace_length(const fs_trace* t);
FS_API const double* fs_trace_times(const fs_trace* t);
FS_API const double* fs_trace_values(const fs_trace* t);
/* -1 if the trace stayed finite. */
FS_API long long fs_trace_explosion_step(const fs_trace* t);
FS_API void fs_trace_free(fs_trace* t);

FS_API fs_status fs_stopping_time_estimate(const fs_trace* t, fs_stopping_time* out);

/* Row-major n x n matrix. */
FS_API fs_status fs_minor_det(const double* m, size_t n, const size_t* rows, const size_t* cols, size_t k,
                              double* out);
/* Integer determinant of an n x n row-major matrix, exact. */
FS_API fs_status fs_int_det(const int64_t* m, size_t n, int64_t* out);
/* Cauchy-Binet sum for (l x m) a and (m x l) b. */
FS_API fs_status fs_cauchy_binet(const double* a, const double* b, size_t l, size_t m, double* out);

/* Runs a pipeline described by a JSON config. *report receives a JSON string
   to release with fs_string_free; *exit_status gets 0, 1, 2 or 3. */
FS_API fs_status fs_run(const char* config_json, char** report, int* exit_status);
FS_API void fs_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
