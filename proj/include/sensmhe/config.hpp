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

// Benchmark settings and their key-value file format.
//
//   [plant]      F0 T0 c0 r k0 E_over_R U rho Cp dH
//   [scenario]   dt n_sim relative_noise initial_guess_mismatch
//                parameter_mismatch input_seed min_dwell max_dwell
//                F_low F_high Tc_offset
//   [estimator]  alpha cutoff_units (relative|absolute) bound_fraction full_information window rank_scale
//                sensitivity_window output_floor max_iterations
//                gradient_tolerance function_tolerance penalty_weight damping
//                max_damping
//   [run]        seeds (comma list) | seed_count seed_base, threads
//
// See README.md for defaults and meaning.

#include <cstdint>
#include <string>
#include <vector>

#include "sensmhe/cstr.hpp"
#include "sensmhe/estimator.hpp"

namespace sensmhe::harness {

// How the scalar noise variances of the selection cutoff are formed.
//   kRelative: the relative noise level squared, matching the dimensionless
//              normalized sensitivity.
//   kAbsolute: traces of the process and measurement noise covariances in
//              physical units.
enum class CutoffUnits { kRelative, kAbsolute };

struct BenchmarkSettings {
  cstr::CstrParams params;

  // Scenario
  double dt = 0.2;
  int n_sim = 400;
  double relative_noise = cstr::kRelativeNoise;
  double initial_guess_mismatch = 0.05;
  double parameter_mismatch = 0.05;
  std::uint64_t input_seed = 2023;
  int min_dwell = 10;
  int max_dwell = 30;
  double F_low = 0.095;
  double F_high = 0.105;
  double Tc_offset = 1.5;  // Tc levels are steady Tc -/+ offset

  // Estimator
  double alpha = 2.0;
  CutoffUnits cutoff_units = CutoffUnits::kAbsolute;
  double bound_fraction = 0.3;
  bool full_information = true;
  int window = 400;
  double rank_scale = 1.0;
  int sensitivity_window = 0;
  double output_floor = 1e-6;  // relative to |y_s|
  SolverSettings solver;

  // Run
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int threads = 0;  // 0: hardware concurrency

  void validate() const;
};

// Sets one "section.key" entry from its textual value.
void apply_setting(BenchmarkSettings& settings, const std::string& key,
                   const std::string& value);

BenchmarkSettings load_settings(const std::string& path);
BenchmarkSettings parse_settings(const std::string& text);

// Comma-separated list parsing shared with the CLI.
std::vector<double> parse_double_list(const std::string& text);

}  // namespace sensmhe::harness
