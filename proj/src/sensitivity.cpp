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

#include "sensmhe/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace sensmhe {

namespace {

void check_trajectory(const SystemModel& model, const Trajectory& t) {
  require(!t.states.empty(), "trajectory has no states");
  require(t.inputs.size() + 1 >= t.states.size(),
          "trajectory needs one input per transition");
  for (const Vec& x : t.states)
    require(x.size() == model.state_dim, "trajectory state has wrong length");
}

void check_step_finite(const Mat& m, int k) {
  if (!m.allFinite()) {
    std::ostringstream os;
    os << "sensitivity propagation became non-finite at step " << k;
    throw NumericalFailure(os.str());
  }
}

}  // namespace

SensitivityState SensitivityState::initial(int n, int p) {
  return SensitivityState{Mat::Zero(n, p), Mat::Identity(n, n), 0};
}

std::vector<Mat> propagate_param_sensitivity(const SystemModel& model,
                                             const Trajectory& trajectory,
                                             const Vec& theta) {
  check_trajectory(model, trajectory);
  const int K = static_cast<int>(trajectory.states.size());
  SensitivityState s = SensitivityState::initial(model.state_dim, model.param_dim);
  std::vector<Mat> out;
  out.reserve(K);
  for (int k = 0; k < K; ++k) {
    const Vec& x = trajectory.states[k];
    const Vec u = k < static_cast<int>(trajectory.inputs.size())
                      ? trajectory.inputs[k]
                      : Vec::Zero(model.input_dim);
    const JacobianBundle jb = jacobians(model, x, u, theta, k);
    out.push_back(jb.dH_dx * s.S_x_theta + jb.dH_dtheta);
    check_step_finite(out.back(), k);
    if (k + 1 < K) {
      s.S_x_theta = jb.dF_dx * s.S_x_theta + jb.dF_dtheta;
      s.k = k + 1;
    }
  }
  return out;
}

std::vector<Mat> propagate_initial_state_sensitivity(const SystemModel& model,
                                                     const Trajectory& trajectory,
                                                     const Vec& theta) {
  check_trajectory(model, trajectory);
  const int K = static_cast<int>(trajectory.states.size());
  SensitivityState s = SensitivityState::initial(model.state_dim, model.param_dim);
  std::vector<Mat> out;
  out.reserve(K);
  for (int k = 0; k < K; ++k) {
    const Vec& x = trajectory.states[k];
    const Vec u = k < static_cast<int>(trajectory.inputs.size())
                      ? trajectory.inputs[k]
                      : Vec::Zero(model.input_dim);
    const JacobianBundle jb = jacobians(model, x, u, theta, k);
    out.push_back(jb.dH_dx * s.S_x_x0);
    check_step_finite(out.back(), k);
    if (k + 1 < K) {
      s.S_x_x0 = jb.dF_dx * s.S_x_x0;
      s.k = k + 1;
    }
  }
  return out;
}

std::vector<Mat> finite_difference_sensitivity(const SystemModel& model,
                                               const Vec& x0,
                                               const std::vector<Vec>& inputs,
                                               const Vec& theta,
                                               SensitivityTarget target,
                                               const ForwardDifferenceScheme& scheme) {
  require(scheme.relative > 0.0 && scheme.floor > 0.0,
          "perturbation sizes must be strictly positive");
  const bool wrt_x0 = target == SensitivityTarget::kInitialState;
  const Vec& z = wrt_x0 ? x0 : theta;
  const int K = static_cast<int>(inputs.size()) + 1;
  const int r = model.output_dim;

  auto outputs_of = [&](const Vec& x_init, const Vec& th) {
    const std::vector<Vec> xs = simulate(model, x_init, inputs, th);
    std::vector<Vec> ys;
    ys.reserve(xs.size());
    for (const Vec& x : xs) ys.push_back(output(model, x, th));
    return ys;
  };

  const std::vector<Vec> nominal = outputs_of(x0, theta);
  std::vector<Mat> out(K, Mat::Zero(r, z.size()));
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const double delta = scheme.relative * std::max(std::abs(z(j)), scheme.floor);
    Vec zp = z;
    zp(j) += delta;
    const double taken = zp(j) - z(j);
    std::vector<Vec> perturbed;
    try {
      perturbed = wrt_x0 ? outputs_of(zp, theta) : outputs_of(x0, zp);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "simulation failed under perturbation of index " << j << ": " << e.what();
      throw NumericalFailure(os.str());
    }
    for (int k = 0; k < K; ++k) {
      if (!perturbed[k].allFinite()) {
        std::ostringstream os;
        os << "simulation diverged under perturbation of index " << j
           << " at step " << k;
        throw NumericalFailure(os.str());
      }
      out[k].col(j) = (perturbed[k] - nominal[k]) / taken;
    }
  }
  return out;
}

Mat SensitivityWindow::stacked() const {
  if (blocks.empty()) return Mat(0, 0);
  const Eigen::Index r = blocks.front().rows();
  Mat S(r * static_cast<Eigen::Index>(blocks.size()), blocks.front().cols());
  for (std::size_t i = 0; i < blocks.size(); ++i)
    S.middleRows(static_cast<Eigen::Index>(i) * r, r) = blocks[i];
  return S;
}

SensitivityWindow build_window_sensitivity(const SystemModel& augmented,
                                           const std::vector<Vec>& states,
                                           const std::vector<Vec>& inputs,
                                           int anchor) {
  require(augmented.param_dim == 0,
          "window sensitivity expects an augmented model (param_dim == 0)");
  require(!states.empty(), "window has no trajectory points");
  require(inputs.size() + 1 >= states.size(),
          "window needs one input per transition");
  const int na = augmented.state_dim;
  const Vec none(0);

  SensitivityWindow w;
  w.anchor = anchor;
  w.blocks.reserve(states.size());
  Mat transition = Mat::Identity(na, na);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const int k = anchor + static_cast<int>(i);
    require(states[i].size() == na, "window state has wrong length");
    const Vec u = i < inputs.size() ? inputs[i] : Vec::Zero(augmented.input_dim);
    const bool last = i + 1 == states.size();
    Mat C;
    Mat A;
    if (augmented.output_jacobian_fn && (last || augmented.step_jacobian_fn)) {
      C = augmented.output_jacobian_fn(states[i], none).first;
      if (!last) A = augmented.step_jacobian_fn(states[i], u, none).first;
      if (!C.allFinite() || (!last && !A.allFinite()))
        throw NumericalFailure("non-finite Jacobian in sensitivity window");
    } else {
      const JacobianBundle jb = jacobians(augmented, states[i], u, none, k);
      C = jb.dH_dx;
      A = jb.dF_dx;
    }
    w.blocks.push_back(C * transition);
    check_step_finite(w.blocks.back(), k);
    if (!last) transition = A * transition;
  }
  return w;
}

SensitivityWindow normalize_sensitivity(const SensitivityWindow& window,
                                        const Vec& anchor_state,
                                        const std::vector<Vec>& outputs,
                                        const Vec& output_floor) {
  require(!window.normalized, "window is already normalized");
  require(outputs.size() == window.blocks.size(),
          "need one output vector per window block");
  require(anchor_state.size() == window.columns(),
          "anchor state length must match the window column count");
  SensitivityWindow out = window;
  out.normalized = true;
  for (std::size_t l = 0; l < out.blocks.size(); ++l) {
    Mat& b = out.blocks[l];
    require(outputs[l].size() == b.rows(), "output vector has wrong length");
    require(output_floor.size() == 0 || output_floor.size() == b.rows(),
            "output floor has wrong length");
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      double y = outputs[l](i);
      const double floor = output_floor.size() == 0 ? 0.0 : output_floor(i);
      if (std::abs(y) < floor || y == 0.0) {
        out.floored_rows.emplace_back(static_cast<int>(l), static_cast<int>(i));
        if (floor <= 0.0)
          throw NumericalFailure("zero output with no normalization floor");
        y = y < 0.0 ? -floor : floor;
      }
      b.row(i) = b.row(i).cwiseProduct(anchor_state.transpose()) / y;
    }
  }
  return out;
}

RankReport numeric_rank(const Mat& m, double rank_scale) {
  require(m.rows() > 0 && m.cols() > 0, "rank of an empty matrix");
  if (!m.allFinite()) throw NumericalFailure("rank of a non-finite matrix");
  Eigen::JacobiSVD<Mat> svd(m);
  if (svd.info() != Eigen::Success) throw NumericalFailure("SVD did not converge");
  const Vec& sv = svd.singularValues();

  RankReport rep;
  rep.singular_values.assign(sv.data(), sv.data() + sv.size());
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  rep.tolerance = static_cast<double>(std::max(m.rows(), m.cols())) * smax *
                  std::numeric_limits<double>::epsilon() * rank_scale;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rep.tolerance) ++rep.rank;
  rep.condition_number = rep.rank > 0 ? smax / sv(rep.rank - 1)
                                      : std::numeric_limits<double>::infinity();
  return rep;
}

Mat observability_matrix_linear(const Mat& A, const Mat& C) {
  require(A.rows() == A.cols(), "A must be square");
  require(C.cols() == A.rows(), "C must have as many columns as A");
  const Eigen::Index n = A.rows();
  const Eigen::Index r = C.rows();
  Mat O(n * r, n);
  Mat block = C;
  for (Eigen::Index i = 0; i < n; ++i) {
    O.middleRows(i * r, r) = block;
    block = block * A;
  }
  return O;
}

Mat linearized_observability_matrix(const SystemModel& model, const Vec& x,
                                    const Vec& u, const Vec& theta) {
  const JacobianBundle jb = jacobians(model, x, u, theta);
  return observability_matrix_linear(jb.dF_dx, jb.dH_dx);
}

void write_rank_csv(std::ostream& os, const std::vector<int>& steps,
                    const std::vector<RankReport>& reports, int columns) {
  require(steps.size() == reports.size(), "one step index per rank report");
  os << "step,rank,cond";
  for (int j = 1; j <= columns; ++j) os << ",sv_" << j;
  os << "\n";
  os.precision(10);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const RankReport& r = reports[i];
    os << steps[i] << "," << r.rank << "," << r.condition_number;
    for (int j = 0; j < columns; ++j) {
      os << ",";
      if (j < static_cast<int>(r.singular_values.size())) os << r.singular_values[j];
    }
    os << "\n";
  }
}

}  // namespace sensmhe
