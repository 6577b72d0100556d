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

// Discrete-time parametric nonlinear systems
//
//   x(k+1) = F(x(k), u(k), theta)
//   y(k)   = H(x(k), theta)
//
// and the parameter-augmented system whose state is [x; theta].

#include <functional>
#include <utility>

#include "sensmhe/common.hpp"

namespace sensmhe {

// Jacobians of F and H at one evaluation point.
struct JacobianBundle {
  Mat dF_dx;      // n x n
  Mat dF_dtheta;  // n x p
  Mat dH_dx;      // r x n
  Mat dH_dtheta;  // r x p

  Vec x, u, theta;
  int k = 0;
};

using StepFn = std::function<Vec(const Vec& x, const Vec& u, const Vec& theta)>;
using OutputFn = std::function<Vec(const Vec& x, const Vec& theta)>;
// Returns (dF/dx, dF/dtheta).
using StepJacobianFn =
    std::function<std::pair<Mat, Mat>(const Vec& x, const Vec& u, const Vec& theta)>;
// Returns (dH/dx, dH/dtheta).
using OutputJacobianFn =
    std::function<std::pair<Mat, Mat>(const Vec& x, const Vec& theta)>;

struct SystemModel {
  int state_dim = 0;
  int input_dim = 0;
  int output_dim = 0;
  int param_dim = 0;

  StepFn step_fn;
  OutputFn output_fn;
  StepJacobianFn step_jacobian_fn;      // optional
  OutputJacobianFn output_jacobian_fn;  // optional

  // Boundary between physical states and augmented parameters. For a model
  // that is not the result of augment() this is (state_dim, 0).
  int physical_state_dim = 0;
  int augmented_param_dim = 0;

  bool is_augmented() const { return augmented_param_dim > 0; }
};

// Builds a model with the given dimensions and validates the closures.
SystemModel make_model(int state_dim, int input_dim, int output_dim,
                       int param_dim, StepFn step, OutputFn output,
                       StepJacobianFn step_jacobian = {},
                       OutputJacobianFn output_jacobian = {});

Vec step(const SystemModel& model, const Vec& x, const Vec& u, const Vec& theta);
Vec output(const SystemModel& model, const Vec& x, const Vec& theta);

struct FiniteDifferenceOptions {
  // Central-difference relative step; defaults to cbrt(machine epsilon).
  double epsilon = 6.0554544523933395e-06;
  double z_floor = 1e-8;
  // Ignore analytic closures even if the model provides them.
  bool force_finite_difference = false;
};

JacobianBundle jacobians(const SystemModel& model, const Vec& x, const Vec& u,
                         const Vec& theta, int k = 0,
                         const FiniteDifferenceOptions& options = {});

// [x; theta] as state, identity dynamics on theta. Output depends on the
// augmented state only. A model with param_dim == 0 is returned unchanged.
SystemModel augment(const SystemModel& model);

// Runs the model from x0 through every input; returns inputs.size() + 1 states.
std::vector<Vec> simulate(const SystemModel& model, const Vec& x0,
                          const std::vector<Vec>& inputs, const Vec& theta);

}  // namespace sensmhe
