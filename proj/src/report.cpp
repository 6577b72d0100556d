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


#include "sensmhe/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace sensmhe::report {

namespace {

using nlohmann::json;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string file_safe(const std::string& label) {
  std::string out;
  for (char c : label) out += std::isalnum(static_cast<unsigned char>(c)) || c == '.' ? c : '_';
  return out;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw IoError("cannot write '" + p.string() + "'");
  return os;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

json vec_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json run_json(const harness::RunReport& r) {
  return {{"seed", r.seed},
          {"sigma", vec_json(r.sigma)},
          {"rmse_x", r.rmse_x},
          {"rmse_theta", r.rmse_theta},
          {"rmse_xa", r.rmse_xa},
          {"inclusion_counts", r.inclusion_counts},
          {"failed_steps", r.failed_steps},
          {"wall_seconds", r.wall_seconds}};
}

// Draws one plot into the rectangle at (ox, oy).
void render_panel(std::ostringstream& os, const Plot& plot, double ox, double oy) {
  const double left = 64, right = 16, top = 28, bottom = 44;
  const double w = plot.width - left - right;
  const double h = plot.height - top - bottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const Series& s : plot.series) {
    for (double v : s.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
    for (double v : s.y)
      if (std::isfinite(v)) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
  }
  for (double r : plot.reference_lines) ymin = std::min(ymin, r), ymax = std::max(ymax, r);
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1;
  if (!std::isfinite(ymin)) ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) {
    const double pad = ymin == 0.0 ? 1.0 : 0.05 * std::abs(ymin);
    ymin -= pad;
    ymax += pad;
  } else {
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
  }
  auto px = [&](double x) { return ox + left + (x - xmin) / (xmax - xmin) * w; };
  auto py = [&](double y) { return oy + top + (ymax - y) / (ymax - ymin) * h; };

  os << "<rect x=\"" << ox + left << "\" y=\"" << oy + top << "\" width=\"" << w
     << "\" height=\"" << h << "\" fill=\"none\" stroke=\"#444\"/>\n";
  os << "<text x=\"" << ox + left + w / 2 << "\" y=\"" << oy + 18
     << "\" text-anchor=\"middle\" font-size=\"13\">" << escape_xml(plot.title) << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4.0;
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << oy + top + h + 14
       << "\" text-anchor=\"middle\" font-size=\"10\">" << fmt(xv) << "</text>\n";
    os << "<text x=\"" << ox + left - 4 << "\" y=\"" << py(yv) + 3
       << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(yv) << "</text>\n";
  }
  os << "<text x=\"" << ox + left + w / 2 << "\" y=\"" << oy + plot.height - 6
     << "\" text-anchor=\"middle\" font-size=\"11\">" << escape_xml(plot.x_label) << "</text>\n";
  os << "<text x=\"" << ox + 12 << "\" y=\"" << oy + top + h / 2
     << "\" text-anchor=\"middle\" font-size=\"11\" transform=\"rotate(-90 " << ox + 12 << " "
     << oy + top + h / 2 << ")\">" << escape_xml(plot.y_label) << "</text>\n";

  for (double r : plot.reference_lines)
    os << "<line x1=\"" << ox + left << "\" x2=\"" << ox + left + w << "\" y1=\"" << py(r)
       << "\" y2=\"" << py(r) << "\" stroke=\"#888\" stroke-dasharray=\"6,4\"/>\n";

  int legend = 0;
  for (const Series& s : plot.series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.3\"";
    if (s.dashed) os << " stroke-dasharray=\"4,3\"";
    os << " points=\"";
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < n; ++i)
      if (std::isfinite(s.y[i])) os << px(s.x[i]) << "," << py(s.y[i]) << " ";
    os << "\"/>\n";
    if (!s.name.empty()) {
      const double ly = oy + top + 12 + 13 * legend++;
      os << "<line x1=\"" << ox + left + w - 90 << "\" x2=\"" << ox + left + w - 72 << "\" y1=\""
         << ly - 4 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << s.color << "\"";
      if (s.dashed) os << " stroke-dasharray=\"4,3\"";
      os << "/>\n<text x=\"" << ox + left + w - 68 << "\" y=\"" << ly
         << "\" font-size=\"10\">" << escape_xml(s.name) << "</text>\n";
    }
  }
}

std::vector<double> steps_axis(std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i);
  return x;
}

}  // namespace

TableRow row_of(const harness::RunReport& run) {
  return TableRow{run.label + " seed " + std::to_string(run.seed), run.sigma, run.rmse_x,
                  run.rmse_theta, run.rmse_xa};
}

TableRow row_of(const harness::CaseSummary& s) {
  return TableRow{s.spec.label(), s.sigma, s.rmse_x, s.rmse_theta, s.rmse_xa};
}

void write_table_csv(std::ostream& os, const std::vector<TableRow>& rows, int columns) {
  os << "label";
  for (int i = 1; i <= columns; ++i) os << ",sigma_" << i;
  os << ",rmse_x,rmse_theta,rmse_xa\n";
  os << std::fixed << std::setprecision(4);
  for (const TableRow& r : rows) {
    require(r.sigma.size() == columns, "table row has the wrong number of sigma entries");
    os << r.label;
    for (int i = 0; i < columns; ++i) os << "," << 100.0 * r.sigma(i);
    os << "," << 100.0 * r.rmse_x << "," << 100.0 * r.rmse_theta << "," << 100.0 * r.rmse_xa
       << "\n";
  }
  os.unsetf(std::ios::floatfield);
}

void write_summary_json(std::ostream& os, const std::vector<harness::CaseSummary>& cases) {
  json out = json::array();
  for (const harness::CaseSummary& c : cases) {
    json runs = json::array();
    for (const harness::RunReport& r : c.runs) runs.push_back(run_json(r));
    out.push_back({{"label", c.spec.label()},
                   {"median", {{"sigma", vec_json(c.sigma)},
                               {"rmse_x", c.rmse_x},
                               {"rmse_theta", c.rmse_theta},
                               {"rmse_xa", c.rmse_xa},
                               {"inclusion_counts", c.inclusion_counts}}},
                   {"runs", runs}});
  }
  os << json{{"components", std::vector<std::string>(cstr::augmented_names().begin(),
                                                     cstr::augmented_names().end())},
             {"cases", out}}
            .dump(2)
     << "\n";
}

void write_trace_csv(std::ostream& os, const harness::RunReport& run) {
  const auto& names = cstr::augmented_names();
  os << "step";
  for (const char* n : names) os << ",true_" << n;
  for (const char* n : names) os << ",est_" << n;
  os << ",selected_mask,objective,iterations,converged\n";
  os.precision(12);
  for (std::size_t k = 0; k < run.records.size(); ++k) {
    const EstimationRecord& rec = run.records[k];
    os << rec.step;
    for (int i = 0; i < cstr::kAugmented; ++i) {
      os << ",";
      if (k < run.truth.size()) os << run.truth[k](i);
    }
    for (int i = 0; i < cstr::kAugmented; ++i) os << "," << rec.estimate(i);
    unsigned mask = 0;
    for (int i : rec.selection.selected) mask |= 1u << i;
    os << "," << mask << "," << rec.objective << "," << rec.iterations << ","
       << (rec.converged ? 1 : 0) << "\n";
  }
}

void write_selection_csv(std::ostream& os, const std::vector<EstimationRecord>& records) {
  os << "step,selected,residual_norms,termination\n";
  os.precision(8);
  for (const EstimationRecord& rec : records) {
    os << rec.step << ",";
    for (std::size_t i = 0; i < rec.selection.selected.size(); ++i)
      os << (i ? ";" : "") << rec.selection.selected[i] + 1;
    os << ",";
    for (std::size_t i = 0; i < rec.selection.residual_norms.size(); ++i)
      os << (i ? ";" : "") << rec.selection.residual_norms[i];
    os << "," << to_string(rec.selection.terminated_by) << "\n";
  }
}

void write_rank_trace_csv(std::ostream& os, const harness::RunReport& run) {
  std::vector<int> steps;
  std::vector<RankReport> ranks;
  for (const EstimationRecord& rec : run.records) {
    steps.push_back(rec.step);
    ranks.push_back(rec.rank);
  }
  write_rank_csv(os, steps, ranks, cstr::kAugmented);
}

void write_rank_diagnostics_csv(std::ostream& os, const harness::RankDiagnostics& d) {
  require(d.steps.size() == d.observability.size() && d.steps.size() == d.sensitivity.size(),
          "rank diagnostics are inconsistent");
  os << "step,observability_rank,observability_cond,sensitivity_rank,sensitivity_cond\n";
  os.precision(10);
  for (std::size_t i = 0; i < d.steps.size(); ++i)
    os << d.steps[i] << "," << d.observability[i].rank << ","
       << d.observability[i].condition_number << "," << d.sensitivity[i].rank << ","
       << d.sensitivity[i].condition_number << "\n";
}

std::string render_svg(const Plot& plot) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width << "\" height=\""
     << plot.height << "\" font-family=\"sans-serif\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  render_panel(os, plot, 0, 0);
  os << "</svg>\n";
  return os.str();
}

std::string trajectory_svg(const harness::RunReport& run) {
  const int cols = 3;
  const int rows = (cstr::kAugmented + cols - 1) / cols;
  const int pw = 380, ph = 220;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cols * pw << "\" height=\""
     << rows * ph << "\" font-family=\"sans-serif\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const auto x = steps_axis(run.estimates.size());
  for (int i = 0; i < cstr::kAugmented; ++i) {
    Plot p;
    p.title = std::string(cstr::augmented_names()[i]) + " (" + run.label + ")";
    p.x_label = "step";
    p.width = pw;
    p.height = ph;
    Series truth{"truth", x, {}, "#000000", false};
    Series est{"estimate", x, {}, kPalette[1], true};
    for (std::size_t k = 0; k < run.estimates.size(); ++k) {
      truth.y.push_back(run.truth[k](i));
      est.y.push_back(run.estimates[k](i));
    }
    p.series = {truth, est};
    render_panel(os, p, (i % cols) * pw, (i / cols) * ph);
  }
  os << "</svg>\n";
  return os.str();
}

std::string rmse_svg(const std::vector<harness::RunReport>& runs) {
  Plot p;
  p.title = "RMSE(k)";
  p.x_label = "step";
  p.y_label = "relative RMSE";
  p.height = 400;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const harness::RunReport& r = runs[i];
    const auto x = steps_axis(r.rmse_xa_series.size());
    const char* color = kPalette[i % std::size(kPalette)];
    p.series.push_back({r.label + " x_a", x, r.rmse_xa_series, color, false});
    p.series.push_back({r.label + " x", x, r.rmse_x_series, color, true});
  }
  return render_svg(p);
}

std::string rank_svg(const std::vector<int>& steps, const std::vector<int>& ranks,
                     const std::string& title) {
  require(steps.size() == ranks.size(), "one rank per step");
  Plot p;
  p.title = title;
  p.x_label = "step";
  p.y_label = "numeric rank";
  Series s{"rank", {}, {}, kPalette[0], false};
  for (std::size_t i = 0; i < steps.size(); ++i) {
    s.x.push_back(steps[i]);
    s.y.push_back(ranks[i]);
  }
  p.series = {s};
  p.reference_lines = {static_cast<double>(cstr::kAugmented)};
  return render_svg(p);
}

void export_reports(const std::string& directory,
                    const std::vector<harness::CaseSummary>& cases, bool with_traces) {
  namespace fs = std::filesystem;
  const fs::path dir(directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + directory + "': " + ec.message());

  std::vector<TableRow> rows;
  for (const harness::CaseSummary& c : cases) rows.push_back(row_of(c));
  {
    auto os = open_out(dir / "report.csv");
    write_table_csv(os, rows);
  }
  {
    auto os = open_out(dir / "summary.json");
    write_summary_json(os, cases);
  }
  if (!with_traces) return;

  std::vector<harness::RunReport> firsts;
  for (const harness::CaseSummary& c : cases) {
    if (c.runs.empty()) continue;
    const harness::RunReport& r = c.runs.front();
    firsts.push_back(r);
    const std::string prefix = cases.size() == 1 ? "" : file_safe(c.spec.label()) + "_";
    {
      auto os = open_out(dir / (prefix + "trace.csv"));
      write_trace_csv(os, r);
    }
    {
      auto os = open_out(dir / (prefix + "selection.csv"));
      write_selection_csv(os, r.records);
    }
    {
      auto os = open_out(dir / (prefix + "rank.csv"));
      write_rank_trace_csv(os, r);
    }
    {
      auto os = open_out(dir / (prefix + "trajectories.svg"));
      os << trajectory_svg(r);
    }
    {
      std::vector<int> steps;
      for (const EstimationRecord& rec : r.records) steps.push_back(rec.step);
      auto os = open_out(dir / (prefix + "rank.svg"));
      os << rank_svg(steps, r.rank_trace, "Sensitivity rank along the estimates (" + r.label + ")");
    }
  }
  if (!firsts.empty()) {
    auto os = open_out(dir / "rmse.svg");
    os << rmse_svg(firsts);
  }
}

void export_rank_diagnostics(const std::string& directory, const harness::RankDiagnostics& d) {
  namespace fs = std::filesystem;
  const fs::path dir(directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + directory + "': " + ec.message());
  {
    auto os = open_out(dir / "rank_diagnostics.csv");
    write_rank_diagnostics_csv(os, d);
  }
  {
    auto os = open_out(dir / "observability_rank.csv");
    write_rank_csv(os, d.steps, d.observability, cstr::kAugmented);
  }
  {
    auto os = open_out(dir / "sensitivity_rank.csv");
    write_rank_csv(os, d.steps, d.sensitivity, cstr::kAugmented);
  }
  std::vector<int> obs, sens;
  for (const RankReport& r : d.observability) obs.push_back(r.rank);
  for (const RankReport& r : d.sensitivity) sens.push_back(r.rank);
  {
    auto os = open_out(dir / "observability_rank.svg");
    os << rank_svg(d.steps, obs, "Rank of the linearized observability matrix");
  }
  {
    auto os = open_out(dir / "sensitivity_rank.svg");
    os << rank_svg(d.steps, sens, "Rank of the normalized sensitivity matrix");
  }
}

}  // namespace sensmhe::report
