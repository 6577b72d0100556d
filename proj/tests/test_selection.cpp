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


#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "sensmhe/selection.hpp"
#include "sensmhe/sensitivity.hpp"
#include "test_systems.hpp"

using namespace sensmhe;

namespace {

// Greedy ranking computed with an explicit projector onto the orthogonal
// complement of the picked columns, built from a Householder basis.
std::vector<int> projector_oracle(const Mat& S) {
  const int cols = static_cast<int>(S.cols());
  std::vector<int> order;
  std::vector<char> used(cols, 0);
  Mat P = Mat::Identity(S.rows(), S.rows());
  while (static_cast<int>(order.size()) < cols) {
    const Mat R = P * S;
    int best = -1;
    for (int j = 0; j < cols; ++j)
      if (!used[j] && (best < 0 || R.col(j).norm() > R.col(best).norm())) best = j;
    order.push_back(best);
    used[best] = 1;
    Mat X(S.rows(), static_cast<Eigen::Index>(order.size()));
    for (std::size_t i = 0; i < order.size(); ++i) X.col(i) = S.col(order[i]);
    Eigen::HouseholderQR<Mat> qr(X);
    const Eigen::Index k = std::min<Eigen::Index>(X.cols(), X.rows());
    const Mat Q = qr.householderQ() * Mat::Identity(S.rows(), k);
    P = Mat::Identity(S.rows(), S.rows()) - Q * Q.transpose();
  }
  return order;
}

SensitivityWindow window_of(const Mat& S) {
  SensitivityWindow w;
  w.blocks = {S};
  w.normalized = true;
  return w;
}

SelectionPolicy cutoff_policy(double alpha, double sw2, double sv2) {
  SelectionPolicy p;
  p.mode = SelectionMode::kCutoff;
  p.alpha = alpha;
  p.sigma_w2 = sw2;
  p.sigma_v2 = sv2;
  return p;
}

}  // namespace

TEST_CASE("orthogonal columns are ranked by norm") {
  Mat S = Mat::Zero(4, 3);
  S(0, 0) = 3.0;
  S(1, 1) = 1.0;
  S(2, 2) = 2.0;
  const OrthoRanking r = orthogonalize_rank(S);
  CHECK(r.order == std::vector<int>{0, 2, 1});
  REQUIRE(r.residual_norms.size() == 3);
  CHECK(r.residual_norms[0] == doctest::Approx(3.0));
  CHECK(r.residual_norms[1] == doctest::Approx(2.0));
  CHECK(r.residual_norms[2] == doctest::Approx(1.0));
  CHECK_FALSE(r.qr_fallback);
}

TEST_CASE("three-vector illustration: largest first, then largest residual") {
  // v3 has the largest norm; after removing it, v1 keeps more than v2.
  Mat S(3, 3);
  S.col(0) << 1.0, 2.0, 0.0;
  S.col(1) << 2.0, 0.0, 1.0;
  S.col(2) << 3.0, 0.0, 0.0;
  CHECK(orthogonalize_rank(S).order == std::vector<int>{2, 0, 1});
}

TEST_CASE("ranking matches the projector oracle on random matrices") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> rows(8, 20), cols(4, 8);
  for (int t = 0; t < 200; ++t) {
    const Mat S = testing::random_matrix(rng, rows(rng), cols(rng));
    const OrthoRanking r = orthogonalize_rank(S);
    CHECK(r.order == projector_oracle(S));
    for (std::size_t i = 1; i < r.residual_norms.size(); ++i)
      CHECK(r.residual_norms[i] <= r.residual_norms[i - 1] * (1 + 1e-12));
  }
}

TEST_CASE("permuting columns permutes the ranking") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 50; ++t) {
    const Mat S = testing::random_matrix(rng, 12, 6);
    std::vector<int> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Mat P(12, 6);
    for (int j = 0; j < 6; ++j) P.col(j) = S.col(perm[j]);
    const std::vector<int> a = orthogonalize_rank(S).order;
    const std::vector<int> b = orthogonalize_rank(P).order;
    for (int i = 0; i < 6; ++i) CHECK(perm[b[i]] == a[i]);

    const RankReport rk = numeric_rank(S);
    const SelectionPolicy pol = cutoff_policy(1.0, 0.1, 0.1);
    const SelectionResult sa = select_variables(pol, window_of(S), rk);
    const SelectionResult sb = select_variables(pol, window_of(P), numeric_rank(P));
    REQUIRE(sa.selected.size() == sb.selected.size());
    for (std::size_t i = 0; i < sa.selected.size(); ++i)
      CHECK(perm[sb.selected[i]] == sa.selected[i]);
  }
}

TEST_CASE("scaling a column up never moves it later") {
  std::mt19937_64 rng(29);
  for (int t = 0; t < 50; ++t) {
    Mat S = testing::random_matrix(rng, 10, 5);
    const std::vector<int> before = orthogonalize_rank(S).order;
    const int j = t % 5;
    const auto pos = [&](const std::vector<int>& o) {
      return std::find(o.begin(), o.end(), j) - o.begin();
    };
    const OrthoRanking base = orthogonalize_rank(S);
    S.col(j) *= 1.0 + 0.5 * (1 + t % 4);
    const OrthoRanking scaled = orthogonalize_rank(S);
    CHECK(pos(scaled.order) <= pos(before));
    // Once j is picked, the remaining residuals are unaffected by its scale.
    if (scaled.order == base.order) {
      for (std::size_t i = pos(base.order) + 1; i < base.order.size(); ++i)
        CHECK(scaled.residual_norms[i] == doctest::Approx(base.residual_norms[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("dependent columns trigger the QR fallback") {
  std::mt19937_64 rng(31);
  Mat S = testing::random_matrix(rng, 8, 4);
  S.col(3) = 2.0 * S.col(0) - S.col(1);
  const OrthoRanking r = orthogonalize_rank(S);
  CHECK(r.order.size() == 4);
  CHECK(r.qr_fallback);
  CHECK(r.residual_norms.back() < 1e-10);
}

TEST_CASE("cutoff value") {
  CHECK(cutoff_value(2.0, 0.0, 1.0) == doctest::Approx(2.0));
  CHECK(cutoff_value(1.0, 9.0, 16.0) == doctest::Approx(5.0));
  CHECK_THROWS_AS(cutoff_value(0.0, 1.0, 1.0), ContractViolation);
  CHECK_THROWS_AS(cutoff_value(1.0, -1.0, 1.0), ContractViolation);
  CHECK(SelectionPolicy{}.alpha == 2.0);
}

TEST_CASE("a cutoff above every column norm still selects one variable") {
  std::mt19937_64 rng(37);
  const Mat S = testing::random_matrix(rng, 10, 5);
  const SelectionResult r =
      select_variables(cutoff_policy(1.0, 1e6, 1e6), window_of(S), numeric_rank(S));
  CHECK(r.selected.size() == 1);
  CHECK(r.selected[0] == orthogonalize_rank(S).order[0]);
  CHECK(r.terminated_by == Termination::kCutoff);
  CHECK(r.unselected.size() == 4);
}

TEST_CASE("cutoff mode stops at the numeric rank") {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 30; ++t) {
    Mat S = testing::random_matrix(rng, 12, 7);
    S.col(6) = S.col(0) + S.col(2);
    S.col(5) = S.col(1);
    const RankReport rk = numeric_rank(S);
    REQUIRE(rk.rank == 5);
    const SelectionResult r = select_variables(cutoff_policy(1e-9, 0.0, 1.0), window_of(S), rk);
    CHECK(r.selected.size() == 5);
    CHECK(r.terminated_by == Termination::kRank);
  }
}

TEST_CASE("fixed count") {
  std::mt19937_64 rng(43);
  const Mat S = testing::random_matrix(rng, 22, 11);
  SelectionPolicy p;
  p.mode = SelectionMode::kFixedCount;
  p.fixed_count = 4;
  const SelectionResult r = select_variables(p, window_of(S), numeric_rank(S));
  CHECK(r.selected.size() == 4);
  CHECK(unselected_set(r, 11).size() == 7);
  const std::vector<int> order = orthogonalize_rank(S).order;
  CHECK(std::equal(r.selected.begin(), r.selected.end(), order.begin()));
  CHECK(r.terminated_by == Termination::kCount);

  p.fixed_count = 12;
  CHECK_THROWS_AS(select_variables(p, window_of(S), numeric_rank(S)), ContractViolation);
}

TEST_CASE("forced subset") {
  std::mt19937_64 rng(47);
  SUBCASE("empty forced set reduces to the cutoff mode") {
    for (int t = 0; t < 50; ++t) {
      const Mat S = testing::random_matrix(rng, 14, 6);
      const RankReport rk = numeric_rank(S);
      SelectionPolicy a = cutoff_policy(1.0 + t % 3, 0.5, 0.5);
      SelectionPolicy b = a;
      b.mode = SelectionMode::kForcedSubsetCutoff;
      const SelectionResult ra = select_variables(a, window_of(S), rk);
      const SelectionResult rb = select_variables(b, window_of(S), rk);
      CHECK(ra.selected == rb.selected);
      CHECK(ra.residual_norms == rb.residual_norms);
      CHECK(ra.terminated_by == rb.terminated_by);
    }
  }
  SUBCASE("forced columns come first and are projected out") {
    const Mat S = testing::random_matrix(rng, 14, 6);
    SelectionPolicy p = cutoff_policy(1e-6, 0.0, 1.0);
    p.mode = SelectionMode::kForcedSubsetCutoff;
    p.forced = {4, 1};
    const SelectionResult r = select_variables(p, window_of(S), numeric_rank(S));
    REQUIRE(r.selected.size() == 6);
    CHECK(r.selected[0] == 4);
    CHECK(r.selected[1] == 1);
    // The remaining order is the greedy order on the deflated matrix.
    Mat X(14, 2);
    X << S.col(4), S.col(1);
    const Mat R = S - X * (X.transpose() * X).ldlt().solve(X.transpose() * S);
    int best = -1;
    for (int j : {0, 2, 3, 5})
      if (best < 0 || R.col(j).norm() > R.col(best).norm()) best = j;
    CHECK(r.selected[2] == best);
  }
  SUBCASE("rank-deficient forced columns are flagged") {
    Mat S = testing::random_matrix(rng, 10, 5);
    S.col(2) = 3.0 * S.col(0);
    SelectionPolicy p = cutoff_policy(1.0, 0.0, 1.0);
    p.mode = SelectionMode::kForcedSubsetCutoff;
    p.forced = {0, 2};
    const SelectionResult r = select_variables(p, window_of(S), numeric_rank(S));
    CHECK(r.forced_rank_deficient);
    CHECK(r.is_selected(0));
    CHECK(r.is_selected(2));
  }
  SUBCASE("forced indices are validated") {
    SelectionPolicy p;
    p.mode = SelectionMode::kForcedSubsetCutoff;
    p.forced = {7};
    CHECK_THROWS_AS(p.validate(5), ContractViolation);
  }
}

TEST_CASE("selection needs a normalized window") {
  SensitivityWindow w;
  w.blocks = {Mat::Identity(2, 2)};
  CHECK_THROWS_AS(select_variables(SelectionPolicy{}, w, numeric_rank(w.stacked())),
                  ContractViolation);
}

TEST_CASE("unselected set") {
  CHECK(unselected_set(select_all(5), 5).empty());
  SelectionResult r;
  r.selected = {0, 2};
  CHECK(unselected_set(r, 3) == std::vector<int>{1});
}

TEST_CASE("selected and unselected partition the columns") {
  std::mt19937_64 rng(53);
  for (int t = 0; t < 40; ++t) {
    const Mat S = testing::random_matrix(rng, 9, 7, 0.2 + t * 0.05);
    const SelectionResult r =
        select_variables(cutoff_policy(2.0, 0.01, 0.01), window_of(S), numeric_rank(S));
    std::vector<int> all = r.selected;
    all.insert(all.end(), r.unselected.begin(), r.unselected.end());
    std::sort(all.begin(), all.end());
    std::vector<int> expected(7);
    std::iota(expected.begin(), expected.end(), 0);
    CHECK(all == expected);
    CHECK(r.selected.size() <= 7u);
    for (std::size_t i = 1; i < r.residual_norms.size(); ++i)
      CHECK(r.residual_norms[i] <= r.residual_norms[i - 1] * (1 + 1e-12));
  }
}
