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

// Moving-horizon estimation of the augmented state with selection
// constraints: components outside the selected set start from their
// previous-cycle value and receive no disturbance, so they evolve open loop.

#include <optional>
#include <string>
#include <utility>

#include "sensmhe/selection.hpp"
#include "sensmhe/sensitivity.hpp"
#include "sensmhe/sysmodel.hpp"

namespace sensmhe {

struct SolverSettings {
  int max_iterations = 50;
  // Stop when the scaled projected gradient satisfies
  // |g|_inf <= gradient_tolerance * max(1, J).
  double gradient_tolerance = 1e-12;
  // Stop when an accepted step lowers J by less than this fraction.
  double function_tolerance = 1e-12;
  // Quadratic penalty weight for trajectory box constraints.
  double penalty_weight = 1e3;
  int max_backtracks = 30;
  // Levenberg damping on the initial-state block, relative to the largest
  // diagonal entry of its reduced (scaled) Hessian.
  double damping = 1e-10;
  // Ceiling for the damping raised after failed line searches.
  double max_damping = 1e4;
};

struct MheConfig {
  bool full_information = true;  // window = all data since time zero
  int window = 10;               // N when !full_information
  Mat Q;                         // n_a x n_a disturbance covariance; a zero
                                 // row means that component takes no disturbance
  Mat R;                         // r x r measurement covariance
  Vec lower, upper;              // X_a; empty means unbounded
  Vec w_lower, w_upper;          // W_a; empty means unbounded
  Vec v_lower, v_upper;          // V_set; reported, not enforced
  Mat arrival_P;                 // prior covariance; used when !full_information
  Vec scale;                     // variable scaling; empty means ones
  SolverSettings solver;

  void validate(int augmented_dim, int output_dim) const;
};

// V(x) = |x - prior|^2_{P^-1}, or identically zero.
struct ArrivalCost {
  bool active = false;
  Vec prior;
  Mat P_inv;

  double operator()(const Vec& x) const;
  Vec gradient(const Vec& x) const;
};

ArrivalCost arrival_cost(const MheConfig& config, const Vec& prior);

struct MheProblem {
  int anchor = 0;                  // k - N
  std::vector<Vec> outputs;        // y(anchor..k)
  std::vector<Vec> inputs;         // u(anchor..k-1)
  Vec initial_state;               // warm start for x_a(anchor)
  std::vector<Vec> disturbances;   // warm start for w_a(anchor..k-1)
  std::vector<int> unselected;     // I(k), 0-based ascending
  ArrivalCost arrival;

  int horizon() const { return static_cast<int>(inputs.size()); }
  int free_variable_count() const;
};

struct EstimateTrajectory {
  int anchor = 0;
  std::vector<Vec> states;         // x_a(anchor..k | k)
  std::vector<Vec> disturbances;   // w_a(anchor..k-1)
  std::vector<Vec> residuals;      // v(anchor..k)
  double objective = 0.0;
  std::vector<double> objective_history;
  int iterations = 0;
  bool converged = false;
  bool v_bounds_violated = false;

  const Vec& current() const { return states.back(); }
};

// Assembles the window ending at step k = outputs.size() - 1.
// `previous` is the trajectory returned at k - 1, if any.
MheProblem assemble_problem(const MheConfig& config, const SystemModel& augmented,
                            const std::vector<Vec>& outputs,
                            const std::vector<Vec>& inputs,
                            const SelectionResult& selection,
                            const EstimateTrajectory* previous,
                            const Vec& initial_guess);

// Single-shooting damped projected Gauss-Newton. Each step solves the
// linearized window problem exactly by a backward Riccati sweep.
EstimateTrajectory solve(const MheProblem& problem, const MheConfig& config,
                         const SystemModel& augmented);

// Objective of a given decision vector; +inf when the simulation leaves the
// model domain.
double objective(const MheProblem& problem, const MheConfig& config,
                 const SystemModel& augmented, const Vec& initial_state,
                 const std::vector<Vec>& disturbances);

struct EstimatorOptions {
  MheConfig mhe;
  // nullopt bypasses selection: every component is estimated.
  std::optional<SelectionPolicy> selection;
  double rank_scale = 1.0;
  Vec output_floor;     // normalization floor per output
  Vec initial_guess;    // x_a(0) guess
  // Points in the sensitivity window minus one; 0 uses the MHE window.
  int sensitivity_window = 0;
};

struct EstimationRecord {
  int step = 0;
  Vec estimate;                 // x_a(k|k)
  SelectionResult selection;
  RankReport rank;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  bool solve_failed = false;
  int free_variables = 0;
  std::string note;
};

class MovingHorizonEstimator {
 public:
  MovingHorizonEstimator(SystemModel augmented, EstimatorOptions options);

  // First measurement y(0).
  std::pair<SelectionResult, EstimateTrajectory> advance(const Vec& y);
  // Measurement y(k) and the input u(k-1) applied since the last one.
  std::pair<SelectionResult, EstimateTrajectory> advance(const Vec& y,
                                                         const Vec& u_prev);

  int steps() const { return static_cast<int>(outputs_.size()); }
  const std::vector<EstimationRecord>& records() const { return records_; }
  const std::optional<EstimateTrajectory>& last() const { return last_; }
  const SystemModel& model() const { return model_; }
  const EstimatorOptions& options() const { return options_; }

 private:
  std::pair<SelectionResult, EstimateTrajectory> cycle();

  SystemModel model_;
  EstimatorOptions options_;
  std::vector<Vec> outputs_;
  std::vector<Vec> inputs_;
  std::optional<EstimateTrajectory> last_;
  std::vector<EstimationRecord> records_;
};

}  // namespace sensmhe
