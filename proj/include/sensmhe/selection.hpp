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

// Estimability ranking of augmented-state components by the orthogonalization
// method, and the per-step selected / unselected index sets.

#include <string>
#include <vector>

#include "sensmhe/sensitivity.hpp"

namespace sensmhe {

enum class SelectionMode { kCutoff, kFixedCount, kForcedSubsetCutoff };

struct SelectionPolicy {
  SelectionMode mode = SelectionMode::kCutoff;
  double alpha = 2.0;
  int fixed_count = 0;       // kFixedCount
  std::vector<int> forced;   // kForcedSubsetCutoff, 0-based
  double sigma_w2 = 0.0;     // process-noise variance
  double sigma_v2 = 0.0;     // measurement-noise variance

  void validate(int columns) const;
};

// Full greedy ordering of the columns of S.
struct OrthoRanking {
  std::vector<int> order;
  // Largest residual column norm at the moment each pick was made.
  std::vector<double> residual_norms;
  bool qr_fallback = false;
};

// S1-S3 run to exhaustion: pick the largest column, project it out of S via
// Z = X (X'X)^-1 X' S, repeat on the residual. Ties go to the lowest index.
OrthoRanking orthogonalize_rank(const Mat& S);

double cutoff_value(double alpha, double sigma_w2, double sigma_v2);

enum class Termination { kRank, kCutoff, kCount };

const char* to_string(Termination t);

struct SelectionResult {
  std::vector<int> selected;           // selection order, 0-based
  std::vector<double> residual_norms;  // one per selected index
  Termination terminated_by = Termination::kCount;
  std::vector<int> unselected;         // I(k), ascending
  int step = 0;
  bool qr_fallback = false;
  bool forced_rank_deficient = false;

  bool is_selected(int index) const;
};

SelectionResult select_variables(const SelectionPolicy& policy,
                                 const SensitivityWindow& window,
                                 const RankReport& rank, int step = 0);

// Everything selected; used when selection is bypassed.
SelectionResult select_all(int columns, int step = 0);

// Complement of the selected set in {0..columns-1}.
std::vector<int> unselected_set(const SelectionResult& result, int columns);

}  // namespace sensmhe
