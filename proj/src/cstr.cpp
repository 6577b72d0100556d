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

#include "sensmhe/cstr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace sensmhe::cstr {

namespace {

constexpr double kPi = std::numbers::pi;

// Stream identifiers mixed into the seed so that input, process-noise and
// measurement-noise draws are independent.
constexpr std::uint64_t kStreamInputs = 0x1d;
constexpr std::uint64_t kStreamProcess = 0x2e;
constexpr std::uint64_t kStreamMeasurement = 0x3f;

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

void check_state(const Vec& x) {
  require(x.size() == kStates, "CSTR state must have 3 components");
  if (!x.allFinite()) throw DomainError("non-finite CSTR state");
  if (x(2) <= kLevelFloor) {
    std::ostringstream os;
    os << "reactor level h = " << x(2) << " is at or below the drain floor";
    throw DomainError(os.str());
  }
  if (x(1) <= 0.0) throw DomainError("reactor temperature must be positive");
}

}  // namespace

void CstrParams::validate() const {
  require(F0 > 0 && T0 > 0 && c0 > 0 && r > 0 && k0 > 0 && E_over_R > 0 &&
              U > 0 && rho > 0 && Cp > 0,
          "CSTR parameters must be positive");
  require(dH < 0, "reaction enthalpy must be negative (exothermic)");
}

Vec theta_of(const CstrParams& p) {
  Vec t(kParams);
  t << p.F0, p.T0, p.c0, p.k0, p.E_over_R, p.U, p.Cp, p.dH;
  return t;
}

CstrParams with_theta(const CstrParams& base, const Vec& theta) {
  require(theta.size() == kParams, "CSTR parameter vector must have 8 entries");
  CstrParams p = base;
  p.F0 = theta(0);
  p.T0 = theta(1);
  p.c0 = theta(2);
  p.k0 = theta(3);
  p.E_over_R = theta(4);
  p.U = theta(5);
  p.Cp = theta(6);
  p.dH = theta(7);
  return p;
}

const std::array<const char*, kAugmented>& augmented_names() {
  static const std::array<const char*, kAugmented> names = {
      "c", "T", "h", "F0", "T0", "c0", "k0", "E_over_R", "U", "Cp", "dH"};
  return names;
}

Vec cstr_derivatives(const Vec& x, const Vec& inputs, const CstrParams& p) {
  check_state(x);
  require(inputs.size() == kInputs, "CSTR inputs must be [Tc, F]");
  const double c = x(0), T = x(1), h = x(2);
  const double Tc = inputs(kCoolantTemp), F = inputs(kOutletFlow);
  const double area = kPi * p.r * p.r;
  const double dilution = p.F0 / (area * h);
  const double rate = p.k0 * std::exp(-p.E_over_R / T) * c;
  Vec d(kStates);
  d(0) = dilution * (p.c0 - c) - rate;
  d(1) = dilution * (p.T0 - T) - p.dH / (p.rho * p.Cp) * rate +
         2.0 * p.U / (p.r * p.rho * p.Cp) * (Tc - T);
  d(2) = (p.F0 - F) / area;
  return d;
}

std::pair<Mat, Mat> cstr_derivative_jacobians(const Vec& x, const Vec& inputs,
                                              const CstrParams& p) {
  check_state(x);
  const double c = x(0), T = x(1), h = x(2);
  const double Tc = inputs(kCoolantTemp);
  const double area = kPi * p.r * p.r;
  const double dilution = p.F0 / (area * h);
  const double k = p.k0 * std::exp(-p.E_over_R / T);
  const double rate = k * c;
  const double heat = -p.dH / (p.rho * p.Cp);
  const double jacket = 2.0 * p.U / (p.r * p.rho * p.Cp);

  Mat fx = Mat::Zero(kStates, kStates);
  fx(0, 0) = -dilution - k;
  fx(0, 1) = -rate * p.E_over_R / (T * T);
  fx(0, 2) = -dilution / h * (p.c0 - c);
  fx(1, 0) = heat * k;
  fx(1, 1) = -dilution + heat * rate * p.E_over_R / (T * T) - jacket;
  fx(1, 2) = -dilution / h * (p.T0 - T);

  // Columns: F0, T0, c0, k0, E/R, U, Cp, dH.
  Mat ft = Mat::Zero(kStates, kParams);
  ft(0, 0) = (p.c0 - c) / (area * h);
  ft(0, 2) = dilution;
  ft(0, 3) = -rate / p.k0;
  ft(0, 4) = rate / T;
  ft(1, 0) = (p.T0 - T) / (area * h);
  ft(1, 1) = dilution;
  ft(1, 3) = heat * rate / p.k0;
  ft(1, 4) = -heat * rate / T;
  ft(1, 5) = 2.0 / (p.r * p.rho * p.Cp) * (Tc - T);
  ft(1, 6) = -(heat * rate + jacket * (Tc - T)) / p.Cp;
  ft(1, 7) = -rate / (p.rho * p.Cp);
  ft(2, 0) = 1.0 / area;
  return {fx, ft};
}

Vec rk4_step(const Vec& x, const Vec& inputs, const CstrParams& p, double dt) {
  require(dt >= 0.0, "time step must be non-negative");
  if (dt == 0.0) return x;
  const Vec k1 = cstr_derivatives(x, inputs, p);
  const Vec k2 = cstr_derivatives(x + 0.5 * dt * k1, inputs, p);
  const Vec k3 = cstr_derivatives(x + 0.5 * dt * k2, inputs, p);
  const Vec k4 = cstr_derivatives(x + dt * k3, inputs, p);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::pair<Mat, Mat> rk4_step_jacobians(const Vec& x, const Vec& inputs,
                                       const CstrParams& p, double dt) {
  const Mat I = Mat::Identity(kStates, kStates);
  if (dt == 0.0) return {I, Mat::Zero(kStates, kParams)};

  const Vec k1 = cstr_derivatives(x, inputs, p);
  auto [a1, b1] = cstr_derivative_jacobians(x, inputs, p);
  const Mat K1x = a1, K1t = b1;

  const Vec z2 = x + 0.5 * dt * k1;
  const Vec k2 = cstr_derivatives(z2, inputs, p);
  auto [a2, b2] = cstr_derivative_jacobians(z2, inputs, p);
  const Mat K2x = a2 * (I + 0.5 * dt * K1x);
  const Mat K2t = a2 * (0.5 * dt * K1t) + b2;

  const Vec z3 = x + 0.5 * dt * k2;
  const Vec k3 = cstr_derivatives(z3, inputs, p);
  auto [a3, b3] = cstr_derivative_jacobians(z3, inputs, p);
  const Mat K3x = a3 * (I + 0.5 * dt * K2x);
  const Mat K3t = a3 * (0.5 * dt * K2t) + b3;

  const Vec z4 = x + dt * k3;
  auto [a4, b4] = cstr_derivative_jacobians(z4, inputs, p);
  const Mat K4x = a4 * (I + dt * K3x);
  const Mat K4t = a4 * (dt * K3t) + b4;

  return {I + dt / 6.0 * (K1x + 2.0 * K2x + 2.0 * K3x + K4x),
          dt / 6.0 * (K1t + 2.0 * K2t + 2.0 * K3t + K4t)};
}

SystemModel make_model(const CstrParams& fixed, double dt) {
  require(dt > 0.0, "sampling time must be positive");
  auto stepf = [fixed, dt](const Vec& x, const Vec& u, const Vec& theta) {
    return rk4_step(x, u, with_theta(fixed, theta), dt);
  };
  auto outf = [](const Vec& x, const Vec&) {
    Vec y(kOutputs);
    y << x(1), x(2);
    return y;
  };
  auto stepj = [fixed, dt](const Vec& x, const Vec& u, const Vec& theta) {
    return rk4_step_jacobians(x, u, with_theta(fixed, theta), dt);
  };
  auto outj = [](const Vec&, const Vec&) {
    Mat hx = Mat::Zero(kOutputs, kStates);
    hx(0, 1) = 1.0;
    hx(1, 2) = 1.0;
    return std::make_pair(hx, Mat(Mat::Zero(kOutputs, kParams)));
  };
  return sensmhe::make_model(kStates, kInputs, kOutputs, kParams, stepf, outf,
                             stepj, outj);
}

Vec steady_state(const CstrParams& p, double T, double h) {
  p.validate();
  require(T > 0.0 && h > kLevelFloor, "steady T and h must be positive");
  const double dilution = p.F0 / (kPi * p.r * p.r * h);
  const double k = p.k0 * std::exp(-p.E_over_R / T);
  Vec xs(kStates);
  xs << dilution * p.c0 / (dilution + k), T, h;
  return xs;
}

Vec SteadyInputs::as_vector() const {
  Vec u(kInputs);
  u(kCoolantTemp) = Tc;
  u(kOutletFlow) = F;
  return u;
}

SteadyInputs steady_state_inputs(const CstrParams& p, const Vec& xs) {
  check_state(xs);
  const double c = xs(0), T = xs(1), h = xs(2);
  const double dilution = p.F0 / (kPi * p.r * p.r * h);
  const double rate = p.k0 * std::exp(-p.E_over_R / T) * c;
  const double jacket = 2.0 * p.U / (p.r * p.rho * p.Cp);
  // dT/dt is affine in Tc.
  const double rest = dilution * (p.T0 - T) - p.dH / (p.rho * p.Cp) * rate;
  return SteadyInputs{p.F0, T - rest / jacket};
}

BinaryInputSpec default_input_spec(const CstrParams& p) {
  const SteadyInputs s = steady_state_inputs(p, steady_state(p));
  BinaryInputSpec spec;
  spec.channels[kCoolantTemp] = BinaryChannel{s.Tc - 1.5, s.Tc + 1.5, false};
  spec.channels[kOutletFlow] = BinaryChannel{0.095, 0.105, true};
  spec.min_dwell = 10;
  spec.max_dwell = 30;
  spec.seed = 2023;
  spec.horizon = 400;
  return spec;
}

std::vector<Vec> generate_binary_inputs(const BinaryInputSpec& spec) {
  require(spec.horizon > 0, "input horizon must be positive");
  require(spec.min_dwell >= 1 && spec.max_dwell >= spec.min_dwell,
          "dwell bounds must satisfy 1 <= min <= max");
  std::vector<Vec> out(spec.horizon, Vec::Zero(kInputs));
  for (int ch = 0; ch < kInputs; ++ch) {
    const BinaryChannel& c = spec.channels[ch];
    auto rng = make_engine(spec.seed, kStreamInputs + static_cast<std::uint64_t>(ch));
    std::uniform_int_distribution<int> dwell(spec.min_dwell, spec.max_dwell);
    std::bernoulli_distribution coin(0.5);
    bool high = coin(rng);
    int k = 0;
    if (c.balanced) {
      // Square wave with random half-periods: segments h1, 2h1, h1+h2, 2h2,
      // h2+h3, ... so the running integral of (level - mean) returns to zero
      // mid-way through every segment and never exceeds max_dwell / 2.
      std::uniform_int_distribution<int> half(std::max(1, spec.min_dwell / 2),
                                              std::max(1, spec.max_dwell / 2));
      int h = half(rng);
      std::vector<int> segments{h};
      while (true) {
        int total = 0;
        for (int s : segments) total += s;
        if (total >= spec.horizon) break;
        segments.push_back(2 * h);
        const int next = half(rng);
        segments.push_back(h + next);
        h = next;
      }
      for (int seg : segments) {
        for (int i = 0; i < seg && k < spec.horizon; ++i, ++k)
          out[k](ch) = high ? c.high : c.low;
        high = !high;
      }
    } else {
      while (k < spec.horizon) {
        const int d = dwell(rng);
        for (int i = 0; i < d && k < spec.horizon; ++i, ++k)
          out[k](ch) = high ? c.high : c.low;
        high = !high;
      }
    }
  }
  return out;
}

void CstrScenario::validate() const {
  require(dt > 0.0, "sampling time must be positive");
  require(n_sim > 0, "horizon must be positive");
  require(process_noise_std.size() == kStates && (process_noise_std.array() >= 0).all(),
          "process noise std must be 3 non-negative values");
  require(measurement_noise_std.size() == kOutputs &&
              (measurement_noise_std.array() >= 0).all(),
          "measurement noise std must be 2 non-negative values");
  require(initial_state.size() == kStates, "initial state must have 3 components");
  require(initial_guess_mismatch >= 0.0 && initial_guess_mismatch < 1.0,
          "initial guess mismatch must be in [0, 1)");
  require(parameter_mismatch >= 0.0 && parameter_mismatch < 1.0,
          "parameter mismatch must be in [0, 1)");
}

CstrScenario default_scenario(const CstrParams& p) {
  CstrScenario s;
  s.inputs = default_input_spec(p);
  s.inputs.horizon = s.n_sim;
  const Vec xs = steady_state(p);
  s.initial_state = xs;
  s.process_noise_std = kRelativeNoise * xs.cwiseAbs();
  Vec ys(kOutputs);
  ys << xs(1), xs(2);
  s.measurement_noise_std = kRelativeNoise * ys.cwiseAbs();
  return s;
}

Vec augmented_steady_state(const CstrParams& p) {
  Vec xa(kAugmented);
  xa << steady_state(p), theta_of(p);
  return xa;
}

TruthTrajectory simulate_truth(const CstrScenario& scenario, const CstrParams& p) {
  scenario.validate();
  p.validate();
  BinaryInputSpec ispec = scenario.inputs;
  ispec.horizon = scenario.n_sim;

  TruthTrajectory t;
  t.inputs = generate_binary_inputs(ispec);
  auto wrng = make_engine(scenario.seed, kStreamProcess);
  auto vrng = make_engine(scenario.seed, kStreamMeasurement);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Vec theta = theta_of(p);
  Vec x = scenario.initial_state;
  t.augmented_states.reserve(scenario.n_sim);
  t.outputs.reserve(scenario.n_sim);
  for (int k = 0; k < scenario.n_sim; ++k) {
    Vec xa(kAugmented);
    xa << x, theta;
    t.augmented_states.push_back(xa);
    Vec y(kOutputs);
    y << x(1), x(2);
    for (int i = 0; i < kOutputs; ++i)
      y(i) += scenario.measurement_noise_std(i) * gauss(vrng);
    t.outputs.push_back(y);
    if (k + 1 < scenario.n_sim) {
      x = rk4_step(x, t.inputs[k], p, scenario.dt);
      for (int i = 0; i < kStates; ++i)
        x(i) += scenario.process_noise_std(i) * gauss(wrng);
    }
  }
  return t;
}

void write_truth_csv(std::ostream& os, const TruthTrajectory& truth) {
  os << "step,c,T,h";
  for (int i = 1; i <= kParams; ++i) os << ",theta_" << i;
  os << ",y_1,y_2,F,T_c\n";
  os.precision(12);
  for (std::size_t k = 0; k < truth.augmented_states.size(); ++k) {
    os << k;
    for (Eigen::Index i = 0; i < kAugmented; ++i) os << "," << truth.augmented_states[k](i);
    os << "," << truth.outputs[k](0) << "," << truth.outputs[k](1);
    os << "," << truth.inputs[k](kOutletFlow) << "," << truth.inputs[k](kCoolantTemp) << "\n";
  }
}

}  // namespace sensmhe::cstr
