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

#pragma once

// CSTR benchmark runs: the three selection cases, fixed-count and cutoff
// sweeps, the relative error metrics and multi-seed aggregation.

#include <cstdint>
#include <string>
#include <vector>

#include "sensmhe/config.hpp"
#include "sensmhe/cstr.hpp"
#include "sensmhe/estimator.hpp"

namespace sensmhe::harness {

enum class CaseKind {
  kCase1,   // everything estimated, selection bypassed
  kCase2,   // cutoff selection over all augmented components
  kCase3,   // physical states forced, parameters selected by cutoff
  kFixedN,  // first n ranked components
  kAlpha,   // cutoff selection with a given alpha
};

struct CaseSpec {
  CaseKind kind = CaseKind::kCase2;
  int n = 0;           // kFixedN
  double alpha = 2.0;  // kAlpha (other cutoff cases use settings.alpha)
  BenchmarkSettings settings;

  std::string label() const;
  void validate() const;
};

// Per-component RMS over the run of the relative error (xhat_i - x_i) / x_i.
Vec metric_sigma(const std::vector<Vec>& estimates, const std::vector<Vec>& truth);

struct RmseResult {
  std::vector<double> series;  // RMSE(k)
  double average = 0.0;
};

RmseResult metric_rmse(const std::vector<Vec>& estimates,
                       const std::vector<Vec>& truth,
                       const std::vector<int>& subset);

std::vector<int> state_indices();      // 0..2
std::vector<int> parameter_indices();  // 3..10
std::vector<int> all_indices();        // 0..10

struct RunReport {
  std::string label;
  std::uint64_t seed = 0;
  Vec sigma;  // per augmented component
  double rmse_x = 0.0;
  double rmse_theta = 0.0;
  double rmse_xa = 0.0;
  std::vector<double> rmse_x_series;
  std::vector<double> rmse_theta_series;
  std::vector<double> rmse_xa_series;
  std::vector<int> inclusion_counts;  // per augmented component
  std::vector<int> rank_trace;
  std::vector<double> condition_trace;
  std::vector<Vec> truth;
  std::vector<Vec> estimates;
  std::vector<EstimationRecord> records;
  int failed_steps = 0;
  double wall_seconds = 0.0;
};

// Augmented-model estimator options for one case.
EstimatorOptions estimator_options(const CaseSpec& spec);
cstr::CstrScenario make_scenario(const BenchmarkSettings& s, std::uint64_t seed);
Vec initial_guess(const BenchmarkSettings& s);

RunReport run_case(const CaseSpec& spec, std::uint64_t seed);

struct CaseSummary {
  CaseSpec spec;
  std::vector<RunReport> runs;  // one per seed, in seed order
  // Medians across seeds.
  Vec sigma;
  double rmse_x = 0.0;
  double rmse_theta = 0.0;
  double rmse_xa = 0.0;
  std::vector<double> inclusion_counts;
};

double median(std::vector<double> values);
CaseSummary summarize(const CaseSpec& spec, std::vector<RunReport> runs);

// Runs every seed in spec.settings.seeds, in parallel up to settings.threads.
CaseSummary run_case_seeds(const CaseSpec& spec);

std::vector<CaseSummary> sweep_fixed_n(const std::vector<int>& ns, const CaseSpec& base);
std::vector<CaseSummary> sweep_alpha(const std::vector<double>& alphas, const CaseSpec& base);

// Rank of the linearized observability matrix and of the normalized windowed
// sensitivity of the augmented model along the true trajectory.
struct RankDiagnostics {
  std::vector<int> steps;
  std::vector<RankReport> observability;
  std::vector<RankReport> sensitivity;
};

RankDiagnostics diagnose_rank(const BenchmarkSettings& settings, std::uint64_t seed);

}  // namespace sensmhe::harness
