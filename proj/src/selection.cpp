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

#include "sensmhe/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sensmhe {

namespace {

constexpr double kGramRcondFloor = 1e-12;

// Residual of S after removing the span of its columns `basis`. Uses the
// Gram-matrix formula and falls back to an orthonormal basis from a pivoted
// QR when X'X is numerically singular.
Mat project_out(const Mat& S, const std::vector<int>& basis, bool* fallback) {
  if (basis.empty()) return S;
  Mat X(S.rows(), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j)
    X.col(static_cast<Eigen::Index>(j)) = S.col(basis[j]);

  const Mat gram = X.transpose() * X;
  Eigen::LLT<Mat> llt(gram);
  if (llt.info() == Eigen::Success && llt.rcond() > kGramRcondFloor) {
    return S - X * llt.solve(X.transpose() * S);
  }
  if (fallback) *fallback = true;
  Eigen::ColPivHouseholderQR<Mat> qr(X);
  const Eigen::Index rank = qr.rank();
  const Mat Q = qr.householderQ() * Mat::Identity(X.rows(), rank);
  return S - Q * (Q.transpose() * S);
}

struct Pick {
  int index = -1;
  double norm = 0.0;
};

Pick largest_column(const Mat& R, const std::vector<char>& candidate) {
  Pick best;
  for (Eigen::Index j = 0; j < R.cols(); ++j) {
    if (!candidate[j]) continue;
    const double nrm = R.col(j).norm();
    if (best.index < 0 || nrm > best.norm) best = {static_cast<int>(j), nrm};
  }
  return best;
}

std::vector<int> sorted_complement(const std::vector<int>& selected, int columns) {
  std::vector<char> in(columns, 0);
  for (int i : selected) in[i] = 1;
  std::vector<int> out;
  for (int i = 0; i < columns; ++i)
    if (!in[i]) out.push_back(i);
  return out;
}

}  // namespace

void SelectionPolicy::validate(int columns) const {
  require(alpha > 0.0, "selection alpha must be positive");
  require(sigma_w2 >= 0.0 && sigma_v2 >= 0.0, "noise variances must be non-negative");
  if (mode == SelectionMode::kFixedCount)
    require(fixed_count >= 1 && fixed_count <= columns,
            "fixed selection count must be in 1..columns");
  for (int f : forced)
    require(f >= 0 && f < columns, "forced index out of range");
}

OrthoRanking orthogonalize_rank(const Mat& S) {
  require(S.rows() > 0 && S.cols() > 0, "cannot rank an empty matrix");
  const int cols = static_cast<int>(S.cols());
  OrthoRanking out;
  std::vector<char> candidate(cols, 1);
  Mat R = S;
  while (static_cast<int>(out.order.size()) < cols) {
    const Pick p = largest_column(R, candidate);
    out.order.push_back(p.index);
    out.residual_norms.push_back(p.norm);
    candidate[p.index] = 0;
    R = project_out(S, out.order, &out.qr_fallback);
  }
  return out;
}

double cutoff_value(double alpha, double sigma_w2, double sigma_v2) {
  require(alpha > 0.0, "alpha must be positive");
  require(sigma_w2 >= 0.0 && sigma_v2 >= 0.0, "variances must be non-negative");
  return alpha * std::sqrt(sigma_w2 + sigma_v2);
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::kRank: return "rank";
    case Termination::kCutoff: return "cutoff";
    case Termination::kCount: return "count";
  }
  return "unknown";
}

bool SelectionResult::is_selected(int index) const {
  return std::find(selected.begin(), selected.end(), index) != selected.end();
}

SelectionResult select_all(int columns, int step) {
  SelectionResult r;
  r.selected.resize(columns);
  std::iota(r.selected.begin(), r.selected.end(), 0);
  r.residual_norms.assign(columns, std::numeric_limits<double>::quiet_NaN());
  r.terminated_by = Termination::kCount;
  r.step = step;
  return r;
}

std::vector<int> unselected_set(const SelectionResult& result, int columns) {
  return sorted_complement(result.selected, columns);
}

SelectionResult select_variables(const SelectionPolicy& policy,
                                 const SensitivityWindow& window,
                                 const RankReport& rank, int step) {
  require(window.normalized, "selection expects a normalized sensitivity window");
  const Mat S = window.stacked();
  const int cols = static_cast<int>(S.cols());
  policy.validate(cols);

  SelectionResult res;
  res.step = step;

  if (policy.mode == SelectionMode::kFixedCount) {
    const OrthoRanking ranking = orthogonalize_rank(S);
    res.selected.assign(ranking.order.begin(), ranking.order.begin() + policy.fixed_count);
    res.residual_norms.assign(ranking.residual_norms.begin(),
                              ranking.residual_norms.begin() + policy.fixed_count);
    res.qr_fallback = ranking.qr_fallback;
    res.terminated_by = Termination::kCount;
    res.unselected = sorted_complement(res.selected, cols);
    return res;
  }

  const double lambda = cutoff_value(policy.alpha, policy.sigma_w2, policy.sigma_v2);
  std::vector<char> candidate(cols, 1);
  std::vector<int> basis;  // independent columns spanning the removed information

  if (policy.mode == SelectionMode::kForcedSubsetCutoff) {
    for (int f : policy.forced) {
      if (!candidate[f]) continue;  // duplicate entry
      candidate[f] = 0;
      res.selected.push_back(f);
      const Mat R = project_out(S, basis, &res.qr_fallback);
      const double nrm = R.col(f).norm();
      res.residual_norms.push_back(nrm);
      if (nrm > rank.tolerance && nrm > 0.0) {
        basis.push_back(f);
      } else {
        res.forced_rank_deficient = true;
      }
    }
  }

  // With nothing forced, S1 picks unconditionally before any stopping test.
  const bool first_free = basis.empty() && res.selected.empty();
  res.terminated_by = Termination::kCount;
  while (static_cast<int>(res.selected.size()) < cols) {
    const bool unconditional = first_free && res.selected.empty();
    if (!unconditional && static_cast<int>(basis.size()) >= rank.rank) {
      res.terminated_by = Termination::kRank;
      break;
    }
    const Mat R = project_out(S, basis, &res.qr_fallback);
    const Pick p = largest_column(R, candidate);
    if (!unconditional && p.norm < lambda) {
      res.terminated_by = Termination::kCutoff;
      break;
    }
    candidate[p.index] = 0;
    res.selected.push_back(p.index);
    res.residual_norms.push_back(p.norm);
    basis.push_back(p.index);
  }
  if (static_cast<int>(res.selected.size()) == cols &&
      res.terminated_by == Termination::kCount)
    res.terminated_by = Termination::kRank;
  res.unselected = sorted_complement(res.selected, cols);
  return res;
}

}  // namespace sensmhe
