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

// Benchmark plant: a non-isothermal CSTR with an irreversible first-order
// reaction, level dynamics and a cooling jacket. State x = [c, T, h],
// inputs u = [Tc, F], measured outputs y = [T, h].

#include <array>
#include <cstdint>
#include <iosfwd>
#include <utility>

#include "sensmhe/sysmodel.hpp"

namespace sensmhe::cstr {

inline constexpr int kStates = 3;
inline constexpr int kInputs = 2;
inline constexpr int kOutputs = 2;
inline constexpr int kParams = 8;
inline constexpr int kAugmented = kStates + kParams;

// Input vector layout.
inline constexpr int kCoolantTemp = 0;
inline constexpr int kOutletFlow = 1;

struct CstrParams {
  double F0 = 0.1;          // m^3/min
  double T0 = 350.0;        // K
  double c0 = 1.0;          // kmol/m^3
  double r = 0.219;         // m
  double k0 = 7.2e10;       // 1/min
  double E_over_R = 8750.0; // K
  double U = 54.94;         // kJ/(min m^2 K)
  double rho = 1000.0;      // kg/m^3
  double Cp = 0.239;        // kJ/(kg K)
  double dH = -5.0e4;       // kJ/kmol

  void validate() const;
};

// Parameter vector order: [F0, T0, c0, k0, E/R, U, Cp, dH].
Vec theta_of(const CstrParams& p);
CstrParams with_theta(const CstrParams& base, const Vec& theta);
const std::array<const char*, kAugmented>& augmented_names();

inline constexpr double kLevelFloor = 1e-6;

Vec cstr_derivatives(const Vec& x, const Vec& inputs, const CstrParams& p);

// Continuous-time Jacobians (d f/dx: 3x3, d f/dtheta: 3x8).
std::pair<Mat, Mat> cstr_derivative_jacobians(const Vec& x, const Vec& inputs,
                                              const CstrParams& p);

Vec rk4_step(const Vec& x, const Vec& inputs, const CstrParams& p, double dt);

// Exact Jacobians of rk4_step, differentiated through the four stages.
std::pair<Mat, Mat> rk4_step_jacobians(const Vec& x, const Vec& inputs,
                                       const CstrParams& p, double dt);

// Discrete model with theta as its parameter vector; r and rho come from
// `fixed`.
SystemModel make_model(const CstrParams& fixed, double dt);

inline constexpr double kSteadyTemperature = 324.5;
inline constexpr double kSteadyLevel = 0.659;

// Steady state consistent with the parameters: T and h are taken as given,
// c solves dc/dt = 0 in closed form.
Vec steady_state(const CstrParams& p, double T = kSteadyTemperature,
                 double h = kSteadyLevel);

struct SteadyInputs {
  double F;
  double Tc;
  Vec as_vector() const;
};

SteadyInputs steady_state_inputs(const CstrParams& p, const Vec& xs);

struct BinaryChannel {
  double low = 0.0;
  double high = 0.0;
  // Alternate levels with the same dwell in each up/down pair so that an
  // integrating response returns to its start.
  bool balanced = false;
};

struct BinaryInputSpec {
  std::array<BinaryChannel, kInputs> channels;
  int min_dwell = 10;
  int max_dwell = 30;
  std::uint64_t seed = 0;
  int horizon = 400;
};

BinaryInputSpec default_input_spec(const CstrParams& p);

// One input vector [Tc, F] per step.
std::vector<Vec> generate_binary_inputs(const BinaryInputSpec& spec);

struct CstrScenario {
  double dt = 0.2;
  int n_sim = 400;
  BinaryInputSpec inputs;
  Vec process_noise_std;      // length 3
  Vec measurement_noise_std;  // length 2
  std::uint64_t seed = 1;
  Vec initial_state;          // length 3
  double initial_guess_mismatch = 0.05;
  double parameter_mismatch = 0.05;

  void validate() const;
};

// Relative noise level applied to |x_s| and |y_s|.
inline constexpr double kRelativeNoise = 0.6e-3;

CstrScenario default_scenario(const CstrParams& p);

// [x_s; theta]
Vec augmented_steady_state(const CstrParams& p);

struct TruthTrajectory {
  std::vector<Vec> augmented_states;  // x_a(k), k = 0..n_sim-1
  std::vector<Vec> outputs;           // y(k)
  std::vector<Vec> inputs;            // u(k)
};

TruthTrajectory simulate_truth(const CstrScenario& scenario, const CstrParams& p);

// step,c,T,h,theta_1..theta_8,y_1,y_2,F,T_c
void write_truth_csv(std::ostream& os, const TruthTrajectory& truth);

}  // namespace sensmhe::cstr
