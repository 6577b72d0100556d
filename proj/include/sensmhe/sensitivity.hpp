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

// Output sensitivities along a trajectory, windowed sensitivity matrices and
// rank/conditioning diagnostics.

#include <iosfwd>
#include <optional>

#include "sensmhe/sysmodel.hpp"

namespace sensmhe {

// States x(0..K) and the inputs u(0..K-1) that connect them.
struct Trajectory {
  std::vector<Vec> states;
  std::vector<Vec> inputs;
};

struct SensitivityState {
  Mat S_x_theta;  // dx(k)/dtheta, n x p
  Mat S_x_x0;     // dx(k)/dx(0),  n x n
  int k = 0;

  static SensitivityState initial(int n, int p);
};

// S_{y,theta}(k) for k = 0..K by the forward sensitivity recursion.
std::vector<Mat> propagate_param_sensitivity(const SystemModel& model,
                                             const Trajectory& trajectory,
                                             const Vec& theta);

// S_{y,x(0)}(k) for k = 0..K.
std::vector<Mat> propagate_initial_state_sensitivity(const SystemModel& model,
                                                     const Trajectory& trajectory,
                                                     const Vec& theta);

enum class SensitivityTarget { kInitialState, kParameter };

struct ForwardDifferenceScheme {
  // Delta_j = relative * max(|z_j|, floor)
  double relative = 1e-6;
  double floor = 1.0;
};

// Indirect sensitivities by perturb-and-resimulate forward differences.
// Validation oracle only; cost is one full simulation per column.
std::vector<Mat> finite_difference_sensitivity(
    const SystemModel& model, const Vec& x0, const std::vector<Vec>& inputs,
    const Vec& theta, SensitivityTarget target,
    const ForwardDifferenceScheme& scheme = {});

struct SensitivityWindow {
  std::vector<Mat> blocks;  // S_{y, x_a(anchor)}(i), i = anchor..anchor+N
  int anchor = 0;
  bool normalized = false;
  // (block, output row) pairs whose normalizing output was floored.
  std::vector<std::pair<int, int>> floored_rows;

  int length() const { return static_cast<int>(blocks.size()); }
  int columns() const { return blocks.empty() ? 0 : static_cast<int>(blocks.front().cols()); }
  Mat stacked() const;
};

// Window blocks along x_a(anchor..anchor+N) with u(anchor..anchor+N-1) for an
// augmented model (or any model with param_dim == 0).
SensitivityWindow build_window_sensitivity(const SystemModel& augmented,
                                           const std::vector<Vec>& states,
                                           const std::vector<Vec>& inputs,
                                           int anchor = 0);

// Entry (i, j) of block l is multiplied by x_a,j(anchor) / y_i(l). Output
// magnitudes below output_floor_i are replaced by the floor and recorded.
SensitivityWindow normalize_sensitivity(const SensitivityWindow& window,
                                        const Vec& anchor_state,
                                        const std::vector<Vec>& outputs,
                                        const Vec& output_floor);

struct RankReport {
  int rank = 0;
  std::vector<double> singular_values;  // descending
  double condition_number = 1.0;
  double tolerance = 0.0;
};

RankReport numeric_rank(const Mat& m, double rank_scale = 1.0);

// [C; CA; ...; CA^{n-1}]
Mat observability_matrix_linear(const Mat& A, const Mat& C);

// Observability matrix of the model linearized at (x, u, theta).
Mat linearized_observability_matrix(const SystemModel& model, const Vec& x,
                                    const Vec& u, const Vec& theta);

// CSV: step,rank,cond,sv_1..sv_{columns}
void write_rank_csv(std::ostream& os, const std::vector<int>& steps,
                    const std::vector<RankReport>& reports, int columns);

}  // namespace sensmhe
