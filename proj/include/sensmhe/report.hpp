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

// Exports for benchmark runs: σ/RMSE tables, JSON summary, per-step traces,
// selection logs, rank traces and static SVG plots.
//
// Table columns are percentages: label, sigma_1..sigma_11, rmse_x,
// rmse_theta, rmse_xa.

#include <ostream>
#include <string>
#include <vector>

#include "sensmhe/harness.hpp"

namespace sensmhe::report {

struct TableRow {
  std::string label;
  Vec sigma;
  double rmse_x = 0.0;
  double rmse_theta = 0.0;
  double rmse_xa = 0.0;
};

TableRow row_of(const harness::RunReport& run);
TableRow row_of(const harness::CaseSummary& summary);  // seed medians

void write_table_csv(std::ostream& os, const std::vector<TableRow>& rows,
                     int columns = cstr::kAugmented);
void write_summary_json(std::ostream& os, const std::vector<harness::CaseSummary>& cases);
// step, true x_a, estimated x_a, selected bitmask (bit i = component i), J,
// iterations, converged.
void write_trace_csv(std::ostream& os, const harness::RunReport& run);
// step, selected (1-based, ';'-joined, selection order), residual norms,
// termination.
void write_selection_csv(std::ostream& os, const std::vector<EstimationRecord>& records);
void write_rank_trace_csv(std::ostream& os, const harness::RunReport& run);
void write_rank_diagnostics_csv(std::ostream& os, const harness::RankDiagnostics& d);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<double> reference_lines;  // horizontal
  int width = 720;
  int height = 360;
};

std::string render_svg(const Plot& plot);

// Truth vs estimate, one panel per augmented component.
std::string trajectory_svg(const harness::RunReport& run);
std::string rmse_svg(const std::vector<harness::RunReport>& runs);
// Rank trace with the reference line at the augmented dimension.
std::string rank_svg(const std::vector<int>& steps, const std::vector<int>& ranks,
                     const std::string& title);

// Writes report.csv and summary.json for all cases; for each case, the first
// run's trace, selection log, rank trace and plots go to files prefixed by
// the case label.
void export_reports(const std::string& directory,
                    const std::vector<harness::CaseSummary>& cases,
                    bool with_traces = true);
void export_rank_diagnostics(const std::string& directory, const harness::RankDiagnostics& d);

}  // namespace sensmhe::report
