// Copyright 2026 The sensmhe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


/* C interface to sensmhe. All functions return a status code; on failure
 * sensmhe_last_error() describes the problem for the calling thread.
 * Handles are opaque and owned by the caller until destroyed. */

#ifndef SENSMHE_SENSMHE_H_
#define SENSMHE_SENSMHE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(SENSMHE_BUILDING_LIBRARY)
#define SENSMHE_API __attribute__((visibility("default")))
#else
#define SENSMHE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define SENSMHE_AUGMENTED_DIM 11
#define SENSMHE_OUTPUT_DIM 2
#define SENSMHE_INPUT_DIM 2

typedef enum sensmhe_status {
  SENSMHE_OK = 0,
  SENSMHE_ERR_INVALID_ARGUMENT = 1, /* null pointer, short buffer, bad index */
  SENSMHE_ERR_CONTRACT = 2,         /* precondition or dimension violation */
  SENSMHE_ERR_NUMERICAL = 3,
  SENSMHE_ERR_DOMAIN = 4,           /* simulation left the model domain */
  SENSMHE_ERR_IO = 5,
  SENSMHE_ERR_CONFIG = 6,
  SENSMHE_ERR_INTERNAL = 7
} sensmhe_status;

typedef enum sensmhe_case {
  SENSMHE_CASE_1 = 1,       /* all components estimated */
  SENSMHE_CASE_2 = 2,       /* cutoff selection */
  SENSMHE_CASE_3 = 3,       /* physical states forced, parameters selected */
  SENSMHE_CASE_FIXED_N = 4, /* arg: number of components */
  SENSMHE_CASE_ALPHA = 5    /* arg: cutoff coefficient */
} sensmhe_case;

typedef struct sensmhe_config sensmhe_config;
typedef struct sensmhe_report sensmhe_report;
typedef struct sensmhe_estimator sensmhe_estimator;

typedef struct sensmhe_metrics {
  uint64_t seed; /* 0 for seed medians */
  double sigma[SENSMHE_AUGMENTED_DIM];
  double rmse_x;
  double rmse_theta;
  double rmse_xa;
  int failed_steps;
  double wall_seconds;
} sensmhe_metrics;

SENSMHE_API const char* sensmhe_version(void);
SENSMHE_API const char* sensmhe_status_string(sensmhe_status status);
SENSMHE_API const char* sensmhe_last_error(void);

/* Benchmark settings. Keys are "section.key" as in the settings file. */
SENSMHE_API sensmhe_status sensmhe_config_create(sensmhe_config** out);
SENSMHE_API sensmhe_status sensmhe_config_load(const char* path, sensmhe_config** out);
SENSMHE_API sensmhe_status sensmhe_config_set(sensmhe_config* config, const char* key,
                                              const char* value);
SENSMHE_API sensmhe_status sensmhe_config_set_seeds(sensmhe_config* config,
                                                    const uint64_t* seeds, size_t count);
SENSMHE_API void sensmhe_config_destroy(sensmhe_config* config);

/* Runs one case over every configured seed. `arg` is n or alpha for the
 * fixed-count and alpha cases and ignored otherwise. */
SENSMHE_API sensmhe_status sensmhe_run_case(const sensmhe_config* config, sensmhe_case kind,
                                            double arg, sensmhe_report** out);
/* Same for a single seed, overriding the configured list. */
SENSMHE_API sensmhe_status sensmhe_run_case_seed(const sensmhe_config* config,
                                                 sensmhe_case kind, double arg,
                                                 uint64_t seed, sensmhe_report** out);
/* kind is SENSMHE_CASE_FIXED_N or SENSMHE_CASE_ALPHA; one case per value. */
SENSMHE_API sensmhe_status sensmhe_sweep(const sensmhe_config* config, sensmhe_case kind,
                                         const double* values, size_t count,
                                         sensmhe_report** out);

SENSMHE_API sensmhe_status sensmhe_report_case_count(const sensmhe_report* report,
                                                     size_t* out);
/* The returned string lives as long as the report. */
SENSMHE_API sensmhe_status sensmhe_report_label(const sensmhe_report* report, size_t index,
                                                const char** out);
SENSMHE_API sensmhe_status sensmhe_report_median(const sensmhe_report* report, size_t index,
                                                 sensmhe_metrics* out);
SENSMHE_API sensmhe_status sensmhe_report_run_count(const sensmhe_report* report,
                                                    size_t index, size_t* out);
SENSMHE_API sensmhe_status sensmhe_report_run(const sensmhe_report* report, size_t index,
                                              size_t run, sensmhe_metrics* out);
/* Median inclusion counts; out holds SENSMHE_AUGMENTED_DIM values. */
SENSMHE_API sensmhe_status sensmhe_report_inclusion(const sensmhe_report* report,
                                                    size_t index, double* out);
/* Rank trace of one run. Writes min(capacity, steps) values and the full
 * length to *length; pass capacity 0 to query the length. */
SENSMHE_API sensmhe_status sensmhe_report_rank_trace(const sensmhe_report* report,
                                                     size_t index, size_t run, int* out,
                                                     size_t capacity, size_t* length);
/* Writes report.csv, summary.json and, if with_traces, per-case traces
 * and SVG plots into directory. */
SENSMHE_API sensmhe_status sensmhe_report_export(const sensmhe_report* report,
                                                 const char* directory, int with_traces);
SENSMHE_API void sensmhe_report_destroy(sensmhe_report* report);

/* Observability and sensitivity rank along the true trajectory. Either
 * output array may be null; directory may be null to skip file export. */
SENSMHE_API sensmhe_status sensmhe_diagnose_rank(const sensmhe_config* config, uint64_t seed,
                                                 const char* directory,
                                                 int* observability_rank,
                                                 int* sensitivity_rank, size_t capacity,
                                                 size_t* length);
SENSMHE_API sensmhe_status sensmhe_write_truth_csv(const sensmhe_config* config,
                                                   uint64_t seed, const char* path);

/* Greedy orthogonalization ranking of the columns of a column-major
 * rows x cols matrix. order receives cols 0-based indices, residuals their
 * residual norms at selection. */
SENSMHE_API sensmhe_status sensmhe_orthogonal_rank(const double* matrix, size_t rows,
                                                   size_t cols, int* order,
                                                   double* residuals);

/* Online estimator for the CSTR benchmark configured as for kind/arg. */
SENSMHE_API sensmhe_status sensmhe_estimator_create(const sensmhe_config* config,
                                                    sensmhe_case kind, double arg,
                                                    sensmhe_estimator** out);
/* y has SENSMHE_OUTPUT_DIM entries [T, h]. u_prev is null on the first call
 * and otherwise the input [Tc, F] applied since the previous measurement. */
SENSMHE_API sensmhe_status sensmhe_estimator_advance(sensmhe_estimator* estimator,
                                                     const double* y, const double* u_prev);
/* Current x_a(k|k), SENSMHE_AUGMENTED_DIM values. */
SENSMHE_API sensmhe_status sensmhe_estimator_estimate(const sensmhe_estimator* estimator,
                                                      double* out);
/* Selected components of the last step, 0-based in selection order. */
SENSMHE_API sensmhe_status sensmhe_estimator_selected(const sensmhe_estimator* estimator,
                                                      int* out, size_t capacity,
                                                      size_t* length);
SENSMHE_API void sensmhe_estimator_destroy(sensmhe_estimator* estimator);

#ifdef __cplusplus
}
#endif

#endif  // SENSMHE_SENSMHE_H_
