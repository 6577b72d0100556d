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


#include "sensmhe/sensmhe.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <memory>
#include <new>
#include <string>

#include "sensmhe/config.hpp"
#include "sensmhe/harness.hpp"
#include "sensmhe/report.hpp"
#include "sensmhe/selection.hpp"

struct sensmhe_config {
  sensmhe::harness::BenchmarkSettings settings;
};

struct sensmhe_report {
  std::vector<sensmhe::harness::CaseSummary> cases;
  std::vector<std::string> labels;
};

struct sensmhe_estimator {
  std::unique_ptr<sensmhe::MovingHorizonEstimator> estimator;
};

namespace {

using namespace sensmhe;

thread_local std::string g_last_error;

sensmhe_status fail(sensmhe_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

sensmhe_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::kContract: return SENSMHE_ERR_CONTRACT;
    case ErrorKind::kNumerical: return SENSMHE_ERR_NUMERICAL;
    case ErrorKind::kDomain: return SENSMHE_ERR_DOMAIN;
    case ErrorKind::kIo: return SENSMHE_ERR_IO;
    case ErrorKind::kConfig: return SENSMHE_ERR_CONFIG;
  }
  return SENSMHE_ERR_INTERNAL;
}

template <typename F>
sensmhe_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SENSMHE_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SENSMHE_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SENSMHE_ERR_INTERNAL, "unknown error");
  }
}

#define SENSMHE_CHECK_ARG(cond, msg) \
  if (!(cond)) return fail(SENSMHE_ERR_INVALID_ARGUMENT, msg)

// Translates the C case selector into a CaseSpec.
sensmhe_status make_spec(const sensmhe_config* config, sensmhe_case kind, double arg,
                         harness::CaseSpec* spec) {
  spec->settings = config->settings;
  switch (kind) {
    case SENSMHE_CASE_1: spec->kind = harness::CaseKind::kCase1; break;
    case SENSMHE_CASE_2: spec->kind = harness::CaseKind::kCase2; break;
    case SENSMHE_CASE_3: spec->kind = harness::CaseKind::kCase3; break;
    case SENSMHE_CASE_FIXED_N:
      if (!(arg >= 1 && arg <= SENSMHE_AUGMENTED_DIM) || arg != std::floor(arg))
        return fail(SENSMHE_ERR_INVALID_ARGUMENT, "n must be an integer in 1..11");
      spec->kind = harness::CaseKind::kFixedN;
      spec->n = static_cast<int>(arg);
      break;
    case SENSMHE_CASE_ALPHA:
      if (!(arg > 0.0)) return fail(SENSMHE_ERR_INVALID_ARGUMENT, "alpha must be positive");
      spec->kind = harness::CaseKind::kAlpha;
      spec->alpha = arg;
      break;
    default:
      return fail(SENSMHE_ERR_INVALID_ARGUMENT, "unknown case selector");
  }
  return SENSMHE_OK;
}

sensmhe_report* new_report(std::vector<harness::CaseSummary> cases) {
  auto* r = new sensmhe_report;
  r->cases = std::move(cases);
  for (const auto& c : r->cases) r->labels.push_back(c.spec.label());
  return r;
}

void fill_metrics(sensmhe_metrics* out, std::uint64_t seed, const Vec& sigma, double rx,
                  double rt, double ra, int failed, double wall) {
  out->seed = seed;
  for (int i = 0; i < SENSMHE_AUGMENTED_DIM; ++i) out->sigma[i] = sigma(i);
  out->rmse_x = rx;
  out->rmse_theta = rt;
  out->rmse_xa = ra;
  out->failed_steps = failed;
  out->wall_seconds = wall;
}

}  // namespace

extern "C" {

const char* sensmhe_version(void) { return "0.1.0"; }

const char* sensmhe_status_string(sensmhe_status s) {
  switch (s) {
    case SENSMHE_OK: return "ok";
    case SENSMHE_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SENSMHE_ERR_CONTRACT: return "contract violation";
    case SENSMHE_ERR_NUMERICAL: return "numerical failure";
    case SENSMHE_ERR_DOMAIN: return "domain error";
    case SENSMHE_ERR_IO: return "i/o error";
    case SENSMHE_ERR_CONFIG: return "configuration error";
    case SENSMHE_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* sensmhe_last_error(void) { return g_last_error.c_str(); }

sensmhe_status sensmhe_config_create(sensmhe_config** out) {
  SENSMHE_CHECK_ARG(out, "out is null");
  return guarded([&] {
    *out = new sensmhe_config;
    return SENSMHE_OK;
  });
}

sensmhe_status sensmhe_config_load(const char* path, sensmhe_config** out) {
  SENSMHE_CHECK_ARG(path && out, "path or out is null");
  return guarded([&] {
    auto c = std::make_unique<sensmhe_config>();
    c->settings = harness::load_settings(path);
    *out = c.release();
    return SENSMHE_OK;
  });
}

sensmhe_status sensmhe_config_set(sensmhe_config* config, const char* key, const char* value) {
  SENSMHE_CHECK_ARG(config && key && value, "null argument");
  return guarded([&] {
    harness::BenchmarkSettings s = config->settings;
    harness::apply_setting(s, key, value);
    s.validate();
    config->settings = std::move(s);
    return SENSMHE_OK;
  });
}

sensmhe_status sensmhe_config_set_seeds(sensmhe_config* config, const uint64_t* seeds,
                                        size_t count) {
  SENSMHE_CHECK_ARG(config && seeds && count > 0, "seeds must be a non-empty array");
  return guarded([&] {
    config->settings.seeds.assign(seeds, seeds + count);
    return SENSMHE_OK;
  });
}

void sensmhe_config_destroy(sensmhe_config* config) { delete config; }

sensmhe_status sensmhe_run_case(const sensmhe_config* config, sensmhe_case kind, double arg,
                                sensmhe_report** out) {
  SENSMHE_CHECK_ARG(config && out, "null argument");
  harness::CaseSpec spec;
  if (sensmhe_status s = make_spec(config, kind, arg, &spec); s != SENSMHE_OK) return s;
  return guarded([&] {
    *out = new_report({harness::run_case_seeds(spec)});
    return SENSMHE_OK;
  });
}

sensmhe_status sensmhe_run_case_seed(const sensmhe_config* config, sensmhe_case kind,
                                     double arg, uint64_t seed, sensmhe_report** out) {
  SENSMHE_CHECK_ARG(config && out, "null argument");
  harness::CaseSpec spec;
  if (sensmhe_status s = make_spec(config, kind, arg, &spec); s != SENSMHE_OK) return s;
  spec.settings.seeds = {seed};
  return guarded([&] {
    *out = new_report({harness::run_case_seeds(spec)});
    return SENSMHE_OK;
  });
}

sensmhe_status sensmhe_sweep(const sensmhe_config* config, sensmhe_case kind,
                             const double* values, size_t count, sensmhe_report** out) {
  SENSMHE_CHECK_ARG(config && values && out && count > 0, "null argument or empty list");
  SENSMHE_CHECK_ARG(kind == SENSMHE_CASE_FIXED_N || kind == SENSMHE_CASE_ALPHA,
                    "sweeps take SENSMHE_CASE_FIXED_N or SENSMHE_CASE_ALPHA");
  std::vector<harness::CaseSpec> specs(count);
  for (size_t i = 0; i < count; ++i)
    if (sensmhe_status s = make_spec(config, kind, values[i], &specs[i]); s != SENSMHE_OK)
      return s;
  return guarded([&] {
    std::vector<harness::CaseSummary> cases;
    for (const auto& spec : specs) cases.push_back(harness::run_case_seeds(spec));
    *out = new_report(std::move(cases));
    return SENSMHE_OK;
  });
}

sensmhe_status sensmhe_report_case_count(const sensmhe_report* report, size_t* out) {
  SENSMHE_CHECK_ARG(report && out, "null argument");
  *out = report->cases.size();
  return SENSMHE_OK;
}

sensmhe_status sensmhe_report_label(const sensmhe_report* report, size_t index,
                                    const char** out) {
  SENSMHE_CHECK_ARG(report && out, "null argument");
  SENSMHE_CHECK_ARG(index < report->cases.size(), "case index out of range");
  *out = report->labels[index].c_str();
  return SENSMHE_OK;
}

sensmhe_status sensmhe_report_median(const sensmhe_report* report, size_t index,
                                     sensmhe_metrics* out) {
  SENSMHE_CHECK_ARG(report && out, "null argument");
  SENSMHE_CHECK_ARG(index < report->cases.size(), "case index out of range");
  const auto& c = report->cases[index];
  int failed = 0;
  double wall = 0.0;
  for (const auto& r : c.runs) failed += r.failed_steps, wall += r.wall_seconds;
  fill_metrics(out, 0, c.sigma, c.rmse_x, c.rmse_theta, c.rmse_xa, failed, wall);
  return SENSMHE_OK;
}

sensmhe_status sensmhe_report_run_count(const sensmhe_report* report, size_t index,
                                        size_t* out) {
  SENSMHE_CHECK_ARG(report && out, "null argument");
  SENSMHE_CHECK_ARG(index < report->cases.size(), "case index out of range");
  *out = report->cases[index].runs.size();
  return SENSMHE_OK;
}

sensmhe_status sensmhe_report_run(const sensmhe_report* report, size_t index, size_t run,
                                  sensmhe_metrics* out) {
  SENSMHE_CHECK_ARG(report && out, "null argument");
  SENSMHE_CHECK_ARG(index < report->cases.size(), "case index out of range");
  SENSMHE_CHECK_ARG(run < report->cases[index].runs.size(), "run index out of range");
  const auto& r = report->cases[index].runs[run];
  fill_metrics(out, r.seed, r.sigma, r.rmse_x, r.rmse_theta, r.rmse_xa, r.failed_steps,
               r.wall_seconds);
  return SENSMHE_OK;
}

sensmhe_status sensmhe_report_inclusion(const sensmhe_report* report, size_t index,
                                        double* out) {
  SENSMHE_CHECK_ARG(report && out, "null argument");
  SENSMHE_CHECK_ARG(index < report->cases.size(), "case index out of range");
  const auto& counts = report->cases[index].inclusion_counts;
  for (size_t i = 0; i < counts.size(); ++i) out[i] = counts[i];
  return SENSMHE_OK;
}

sensmhe_status sensmhe_report_rank_trace(const sensmhe_report* report, size_t index,
                                         size_t run, int* out, size_t capacity,
                                         size_t* length) {
  SENSMHE_CHECK_ARG(report && length, "null argument");
  SENSMHE_CHECK_ARG(index < report->cases.size(), "case index out of range");
  SENSMHE_CHECK_ARG(run < report->cases[index].runs.size(), "run index out of range");
  SENSMHE_CHECK_ARG(out || capacity == 0, "out is null with nonzero capacity");
  const auto& trace = report->cases[index].runs[run].rank_trace;
  *length = trace.size();
  for (size_t i = 0; i < std::min(capacity, trace.size()); ++i) out[i] = trace[i];
  return SENSMHE_OK;
}

sensmhe_status sensmhe_report_export(const sensmhe_report* report, const char* directory,
                                     int with_traces) {
  SENSMHE_CHECK_ARG(report && directory, "null argument");
  return guarded([&] {
    report::export_reports(directory, report->cases, with_traces != 0);
    return SENSMHE_OK;
  });
}

void sensmhe_report_destroy(sensmhe_report* report) { delete report; }

sensmhe_status sensmhe_diagnose_rank(const sensmhe_config* config, uint64_t seed,
                                     const char* directory, int* observability_rank,
                                     int* sensitivity_rank, size_t capacity, size_t* length) {
  SENSMHE_CHECK_ARG(config && length, "null argument");
  return guarded([&] {
    const harness::RankDiagnostics d = harness::diagnose_rank(config->settings, seed);
    if (directory) report::export_rank_diagnostics(directory, d);
    *length = d.steps.size();
    for (size_t i = 0; i < std::min(capacity, d.steps.size()); ++i) {
      if (observability_rank) observability_rank[i] = d.observability[i].rank;
      if (sensitivity_rank) sensitivity_rank[i] = d.sensitivity[i].rank;
    }
    return SENSMHE_OK;
  });
}

sensmhe_status sensmhe_write_truth_csv(const sensmhe_config* config, uint64_t seed,
                                       const char* path) {
  SENSMHE_CHECK_ARG(config && path, "null argument");
  return guarded([&] {
    const auto scenario = harness::make_scenario(config->settings, seed);
    const auto truth = cstr::simulate_truth(scenario, config->settings.params);
    std::ofstream os(path);
    if (!os) throw IoError(std::string("cannot write '") + path + "'");
    cstr::write_truth_csv(os, truth);
    return SENSMHE_OK;
  });
}

sensmhe_status sensmhe_orthogonal_rank(const double* matrix, size_t rows, size_t cols,
                                       int* order, double* residuals) {
  SENSMHE_CHECK_ARG(matrix && order && residuals, "null argument");
  SENSMHE_CHECK_ARG(rows > 0 && cols > 0, "matrix must be non-empty");
  return guarded([&] {
    const Mat S = Eigen::Map<const Mat>(matrix, static_cast<Eigen::Index>(rows),
                                        static_cast<Eigen::Index>(cols));
    const OrthoRanking r = orthogonalize_rank(S);
    for (size_t i = 0; i < r.order.size(); ++i) {
      order[i] = r.order[i];
      residuals[i] = r.residual_norms[i];
    }
    return SENSMHE_OK;
  });
}

sensmhe_status sensmhe_estimator_create(const sensmhe_config* config, sensmhe_case kind,
                                        double arg, sensmhe_estimator** out) {
  SENSMHE_CHECK_ARG(config && out, "null argument");
  harness::CaseSpec spec;
  if (sensmhe_status s = make_spec(config, kind, arg, &spec); s != SENSMHE_OK) return s;
  return guarded([&] {
    spec.validate();
    auto e = std::make_unique<sensmhe_estimator>();
    e->estimator = std::make_unique<MovingHorizonEstimator>(
        augment(cstr::make_model(spec.settings.params, spec.settings.dt)),
        harness::estimator_options(spec));
    *out = e.release();
    return SENSMHE_OK;
  });
}

sensmhe_status sensmhe_estimator_advance(sensmhe_estimator* estimator, const double* y,
                                         const double* u_prev) {
  SENSMHE_CHECK_ARG(estimator && y, "null argument");
  const bool first = estimator->estimator->steps() == 0;
  SENSMHE_CHECK_ARG(first == (u_prev == nullptr),
                    "u_prev must be null exactly on the first call");
  return guarded([&] {
    const Vec yv = Eigen::Map<const Vec>(y, SENSMHE_OUTPUT_DIM);
    if (first) estimator->estimator->advance(yv);
    else estimator->estimator->advance(yv, Eigen::Map<const Vec>(u_prev, SENSMHE_INPUT_DIM));
    return SENSMHE_OK;
  });
}

sensmhe_status sensmhe_estimator_estimate(const sensmhe_estimator* estimator, double* out) {
  SENSMHE_CHECK_ARG(estimator && out, "null argument");
  const auto& recs = estimator->estimator->records();
  if (recs.empty()) return fail(SENSMHE_ERR_CONTRACT, "no measurement processed yet");
  const Vec& x = recs.back().estimate;
  for (int i = 0; i < SENSMHE_AUGMENTED_DIM; ++i) out[i] = x(i);
  return SENSMHE_OK;
}

sensmhe_status sensmhe_estimator_selected(const sensmhe_estimator* estimator, int* out,
                                          size_t capacity, size_t* length) {
  SENSMHE_CHECK_ARG(estimator && length, "null argument");
  SENSMHE_CHECK_ARG(out || capacity == 0, "out is null with nonzero capacity");
  const auto& recs = estimator->estimator->records();
  if (recs.empty()) return fail(SENSMHE_ERR_CONTRACT, "no measurement processed yet");
  const auto& sel = recs.back().selection.selected;
  *length = sel.size();
  for (size_t i = 0; i < std::min(capacity, sel.size()); ++i) out[i] = sel[i];
  return SENSMHE_OK;
}

void sensmhe_estimator_destroy(sensmhe_estimator* estimator) { delete estimator; }

}  // extern "C"
