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

#include "sensmhe/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <future>
#include <numeric>
#include <sstream>
#include <thread>

#include "sensmhe/sensitivity.hpp"

namespace sensmhe::harness {

namespace {

Vec steady_outputs(const Vec& xs) {
  Vec ys(cstr::kOutputs);
  ys << xs(1), xs(2);
  return ys;
}

void check_metric_inputs(const std::vector<Vec>& est, const std::vector<Vec>& truth) {
  require(!truth.empty(), "metrics need at least one step");
  require(est.size() == truth.size(), "estimates and truth differ in length");
  for (std::size_t k = 0; k < truth.size(); ++k) {
    require(est[k].size() == truth[k].size(), "estimate and truth differ in dimension");
    for (Eigen::Index i = 0; i < truth[k].size(); ++i)
      if (truth[k](i) == 0.0) {
        std::ostringstream os;
        os << "relative error undefined: truth component " << i << " is zero at step " << k;
        throw ContractViolation(os.str());
      }
  }
}

std::vector<int> iota_range(int from, int to) {
  std::vector<int> v(to - from);
  std::iota(v.begin(), v.end(), from);
  return v;
}

}  // namespace

std::string CaseSpec::label() const {
  std::ostringstream os;
  switch (kind) {
    case CaseKind::kCase1: return "case1";
    case CaseKind::kCase2: return "case2";
    case CaseKind::kCase3: return "case3";
    case CaseKind::kFixedN: os << "n=" << n; return os.str();
    case CaseKind::kAlpha: os << "alpha=" << alpha; return os.str();
  }
  return "unknown";
}

void CaseSpec::validate() const {
  settings.validate();
  if (kind == CaseKind::kFixedN)
    require(n >= 1 && n <= cstr::kAugmented, "fixed n must be in 1..11");
  if (kind == CaseKind::kAlpha) require(alpha > 0.0, "alpha must be positive");
}

Vec metric_sigma(const std::vector<Vec>& estimates, const std::vector<Vec>& truth) {
  check_metric_inputs(estimates, truth);
  const Eigen::Index n = truth.front().size();
  Vec acc = Vec::Zero(n);
  for (std::size_t k = 0; k < truth.size(); ++k)
    acc += ((estimates[k] - truth[k]).array() / truth[k].array()).square().matrix();
  return (acc / static_cast<double>(truth.size())).cwiseSqrt();
}

RmseResult metric_rmse(const std::vector<Vec>& estimates, const std::vector<Vec>& truth,
                       const std::vector<int>& subset) {
  check_metric_inputs(estimates, truth);
  require(!subset.empty(), "RMSE subset must not be empty");
  RmseResult out;
  out.series.reserve(truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k) {
    double acc = 0.0;
    for (int i : subset) {
      require(i >= 0 && i < truth[k].size(), "RMSE subset index out of range");
      const double rel = (estimates[k](i) - truth[k](i)) / truth[k](i);
      acc += rel * rel;
    }
    out.series.push_back(std::sqrt(acc / static_cast<double>(subset.size())));
  }
  out.average = std::accumulate(out.series.begin(), out.series.end(), 0.0) /
                static_cast<double>(out.series.size());
  return out;
}

std::vector<int> state_indices() { return iota_range(0, cstr::kStates); }
std::vector<int> parameter_indices() { return iota_range(cstr::kStates, cstr::kAugmented); }
std::vector<int> all_indices() { return iota_range(0, cstr::kAugmented); }

cstr::CstrScenario make_scenario(const BenchmarkSettings& s, std::uint64_t seed) {
  cstr::CstrScenario sc;
  sc.dt = s.dt;
  sc.n_sim = s.n_sim;
  const Vec xs = cstr::steady_state(s.params);
  const cstr::SteadyInputs su = cstr::steady_state_inputs(s.params, xs);
  sc.inputs.channels[cstr::kCoolantTemp] =
      cstr::BinaryChannel{su.Tc - s.Tc_offset, su.Tc + s.Tc_offset, false};
  sc.inputs.channels[cstr::kOutletFlow] = cstr::BinaryChannel{s.F_low, s.F_high, true};
  sc.inputs.min_dwell = s.min_dwell;
  sc.inputs.max_dwell = s.max_dwell;
  sc.inputs.seed = s.input_seed;
  sc.inputs.horizon = s.n_sim;
  sc.process_noise_std = s.relative_noise * xs.cwiseAbs();
  sc.measurement_noise_std = s.relative_noise * steady_outputs(xs).cwiseAbs();
  sc.seed = seed;
  sc.initial_state = xs;
  sc.initial_guess_mismatch = s.initial_guess_mismatch;
  sc.parameter_mismatch = s.parameter_mismatch;
  return sc;
}

Vec initial_guess(const BenchmarkSettings& s) {
  Vec g = cstr::augmented_steady_state(s.params);
  g.head(cstr::kStates) *= 1.0 + s.initial_guess_mismatch;
  g.tail(cstr::kParams) *= 1.0 + s.parameter_mismatch;
  return g;
}

EstimatorOptions estimator_options(const CaseSpec& spec) {
  const BenchmarkSettings& s = spec.settings;
  const Vec xas = cstr::augmented_steady_state(s.params);
  const Vec ys = steady_outputs(xas.head(cstr::kStates));
  // Weights need a positive variance even for noise-free runs.
  const double weight_rel = std::max(s.relative_noise, 1e-6);

  EstimatorOptions o;
  MheConfig& m = o.mhe;
  m.full_information = s.full_information;
  m.window = s.window;
  // Noise enters the physical states only, so parameters get no disturbance.
  Vec q = (weight_rel * xas.cwiseAbs()).array().square().matrix();
  q.tail(cstr::kParams).setZero();
  m.Q = q.asDiagonal();
  m.R = (weight_rel * ys.cwiseAbs()).array().square().matrix().asDiagonal();
  m.lower = xas - s.bound_fraction * xas.cwiseAbs();
  m.upper = xas + s.bound_fraction * xas.cwiseAbs();
  m.scale = xas.cwiseAbs();
  m.solver = s.solver;
  if (!s.full_information) {
    const Vec spread = s.initial_guess_mismatch * xas.cwiseAbs();
    m.arrival_P = spread.array().square().matrix().asDiagonal();
  }

  o.rank_scale = s.rank_scale;
  o.output_floor = s.output_floor * ys.cwiseAbs();
  o.initial_guess = initial_guess(s);
  o.sensitivity_window = s.sensitivity_window;

  SelectionPolicy pol;
  pol.alpha = s.alpha;
  const double rel2 = s.relative_noise * s.relative_noise;
  if (s.cutoff_units == CutoffUnits::kRelative) {
    pol.sigma_w2 = rel2;
    pol.sigma_v2 = rel2;
  } else {
    pol.sigma_w2 = rel2 * xas.head(cstr::kStates).squaredNorm();
    pol.sigma_v2 = rel2 * ys.squaredNorm();
  }
  switch (spec.kind) {
    case CaseKind::kCase1:
      return o;
    case CaseKind::kCase2:
      pol.mode = SelectionMode::kCutoff;
      break;
    case CaseKind::kCase3:
      pol.mode = SelectionMode::kForcedSubsetCutoff;
      pol.forced = state_indices();
      break;
    case CaseKind::kFixedN:
      pol.mode = SelectionMode::kFixedCount;
      pol.fixed_count = spec.n;
      break;
    case CaseKind::kAlpha:
      pol.mode = SelectionMode::kCutoff;
      pol.alpha = spec.alpha;
      break;
  }
  o.selection = pol;
  return o;
}

RunReport run_case(const CaseSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const BenchmarkSettings& s = spec.settings;
  const cstr::CstrScenario scenario = make_scenario(s, seed);
  const cstr::TruthTrajectory truth = cstr::simulate_truth(scenario, s.params);

  MovingHorizonEstimator est(augment(cstr::make_model(s.params, s.dt)),
                             estimator_options(spec));
  RunReport rep;
  rep.label = spec.label();
  rep.seed = seed;
  rep.inclusion_counts.assign(cstr::kAugmented, 0);
  for (int k = 0; k < s.n_sim; ++k) {
    if (k == 0) est.advance(truth.outputs[0]);
    else est.advance(truth.outputs[k], truth.inputs[k - 1]);
    const EstimationRecord& rec = est.records().back();
    rep.estimates.push_back(rec.estimate);
    rep.rank_trace.push_back(rec.rank.rank);
    rep.condition_trace.push_back(rec.rank.condition_number);
    for (int i : rec.selection.selected) ++rep.inclusion_counts[i];
    if (rec.solve_failed) ++rep.failed_steps;
  }
  rep.truth = truth.augmented_states;
  rep.records = est.records();

  rep.sigma = metric_sigma(rep.estimates, rep.truth);
  const RmseResult rx = metric_rmse(rep.estimates, rep.truth, state_indices());
  const RmseResult rt = metric_rmse(rep.estimates, rep.truth, parameter_indices());
  const RmseResult ra = metric_rmse(rep.estimates, rep.truth, all_indices());
  rep.rmse_x = rx.average;
  rep.rmse_theta = rt.average;
  rep.rmse_xa = ra.average;
  rep.rmse_x_series = rx.series;
  rep.rmse_theta_series = rt.series;
  rep.rmse_xa_series = ra.series;
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

double median(std::vector<double> v) {
  require(!v.empty(), "median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

CaseSummary summarize(const CaseSpec& spec, std::vector<RunReport> runs) {
  require(!runs.empty(), "no runs to summarize");
  CaseSummary out;
  out.spec = spec;
  const Eigen::Index n = runs.front().sigma.size();
  out.sigma = Vec::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> v;
    for (const RunReport& r : runs) v.push_back(r.sigma(i));
    out.sigma(i) = median(v);
  }
  auto med = [&](auto field) {
    std::vector<double> v;
    for (const RunReport& r : runs) v.push_back(r.*field);
    return median(v);
  };
  out.rmse_x = med(&RunReport::rmse_x);
  out.rmse_theta = med(&RunReport::rmse_theta);
  out.rmse_xa = med(&RunReport::rmse_xa);
  out.inclusion_counts.assign(runs.front().inclusion_counts.size(), 0.0);
  for (std::size_t i = 0; i < out.inclusion_counts.size(); ++i) {
    std::vector<double> v;
    for (const RunReport& r : runs) v.push_back(r.inclusion_counts[i]);
    out.inclusion_counts[i] = median(v);
  }
  out.runs = std::move(runs);
  return out;
}

CaseSummary run_case_seeds(const CaseSpec& spec) {
  spec.validate();
  const auto& seeds = spec.settings.seeds;
  unsigned threads = spec.settings.threads > 0
                         ? static_cast<unsigned>(spec.settings.threads)
                         : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(seeds.size()));

  std::vector<RunReport> runs(seeds.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) runs[i] = run_case(spec, seeds[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> workers;
    for (unsigned t = 0; t < threads; ++t) {
      workers.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++)
          runs[i] = run_case(spec, seeds[i]);
      }));
    }
    for (auto& w : workers) w.get();
  }
  return summarize(spec, std::move(runs));
}

std::vector<CaseSummary> sweep_fixed_n(const std::vector<int>& ns, const CaseSpec& base) {
  std::vector<CaseSummary> out;
  for (int n : ns) {
    require(n >= 1 && n <= cstr::kAugmented, "n values must lie in 1..11");
    CaseSpec c = base;
    c.kind = CaseKind::kFixedN;
    c.n = n;
    out.push_back(run_case_seeds(c));
  }
  return out;
}

std::vector<CaseSummary> sweep_alpha(const std::vector<double>& alphas, const CaseSpec& base) {
  std::vector<CaseSummary> out;
  for (double a : alphas) {
    require(a > 0.0, "alpha values must be positive");
    CaseSpec c = base;
    c.kind = CaseKind::kAlpha;
    c.alpha = a;
    out.push_back(run_case_seeds(c));
  }
  return out;
}

RankDiagnostics diagnose_rank(const BenchmarkSettings& settings, std::uint64_t seed) {
  settings.validate();
  const cstr::CstrScenario scenario = make_scenario(settings, seed);
  const cstr::TruthTrajectory truth = cstr::simulate_truth(scenario, settings.params);
  const SystemModel aug = augment(cstr::make_model(settings.params, settings.dt));
  const Vec none(0);
  const Vec ys = steady_outputs(cstr::steady_state(settings.params));
  const Vec floor = settings.output_floor * ys.cwiseAbs();

  RankDiagnostics d;
  const int na = aug.state_dim;
  const int r = aug.output_dim;
  Mat transition = Mat::Identity(na, na);
  Mat stacked(0, na);
  const Vec& anchor = truth.augmented_states.front();
  for (int k = 0; k < settings.n_sim; ++k) {
    const Vec& x = truth.augmented_states[k];
    const Vec& u = truth.inputs[k];
    d.steps.push_back(k);
    d.observability.push_back(
        numeric_rank(linearized_observability_matrix(aug, x, u, none), settings.rank_scale));

    // Full-history window anchored at time zero, grown one block per step.
    const auto [C, ignored] = aug.output_jacobian_fn(x, none);
    (void)ignored;
    Mat block = C * transition;
    for (int i = 0; i < r; ++i) {
      double y = truth.outputs[k](i);
      if (std::abs(y) < floor(i)) y = y < 0 ? -floor(i) : floor(i);
      block.row(i) = block.row(i).cwiseProduct(anchor.transpose()) / y;
    }
    stacked.conservativeResize(stacked.rows() + r, Eigen::NoChange);
    stacked.bottomRows(r) = block;
    d.sensitivity.push_back(numeric_rank(stacked, settings.rank_scale));
    transition = aug.step_jacobian_fn(x, u, none).first * transition;
  }
  return d;
}

}  // namespace sensmhe::harness
