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

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sensmhe/config.hpp"
#include "sensmhe/harness.hpp"
#include "sensmhe/report.hpp"

using namespace sensmhe;
using namespace sensmhe::harness;

namespace {

std::vector<Vec> constant_series(const Vec& v, int n) { return std::vector<Vec>(n, v); }

CaseSpec short_case(CaseKind kind, int n_sim = 30) {
  CaseSpec spec;
  spec.kind = kind;
  spec.settings.n_sim = n_sim;
  spec.settings.seeds = {1, 2};
  return spec;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

int field_count(const std::string& line) {
  return 1 + static_cast<int>(std::count(line.begin(), line.end(), ','));
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("sensmhe_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("sigma metric") {
  const Vec truth = Vec::LinSpaced(4, 1.0, 4.0);
  CHECK(metric_sigma(constant_series(truth, 5), constant_series(truth, 5)).isZero(0.0));
  const Vec s = metric_sigma(constant_series(truth * 1.05, 7), constant_series(truth, 7));
  for (int i = 0; i < 4; ++i) CHECK(s(i) == doctest::Approx(0.05).epsilon(1e-12));

  Vec bad = truth;
  bad(2) = 0.0;
  CHECK_THROWS_AS(metric_sigma(constant_series(truth, 2), constant_series(bad, 2)),
                  ContractViolation);
  CHECK_THROWS_AS(metric_sigma(constant_series(truth, 2), constant_series(truth, 3)),
                  ContractViolation);
}

TEST_CASE("RMSE metric") {
  const Vec truth = Vec::Constant(11, 2.0);
  const RmseResult zero = metric_rmse(constant_series(truth, 4), constant_series(truth, 4), all_indices());
  CHECK(zero.average == 0.0);

  Vec est = truth;
  est(5) *= 1.03;
  const RmseResult one = metric_rmse(constant_series(est, 6), constant_series(truth, 6), {5});
  for (double v : one.series) CHECK(v == doctest::Approx(0.03));
  CHECK(one.average == doctest::Approx(0.03));
}

TEST_CASE("RMSE subsets are consistent with the full set") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 0.05);
  std::vector<Vec> est, truth;
  for (int k = 0; k < 20; ++k) {
    Vec t = Vec::LinSpaced(11, 1.0, 11.0);
    Vec e = t;
    for (int i = 0; i < 11; ++i) e(i) *= 1.0 + nd(rng);
    truth.push_back(t);
    est.push_back(e);
  }
  const RmseResult x = metric_rmse(est, truth, state_indices());
  const RmseResult th = metric_rmse(est, truth, parameter_indices());
  const RmseResult xa = metric_rmse(est, truth, all_indices());
  for (int k = 0; k < 20; ++k) {
    const double combined = std::sqrt((3 * x.series[k] * x.series[k] +
                                       8 * th.series[k] * th.series[k]) / 11.0);
    CHECK(xa.series[k] == doctest::Approx(combined).epsilon(1e-12));
  }
  CHECK(state_indices().size() == 3);
  CHECK(parameter_indices().front() == 3);
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK_THROWS(median({}));
}

TEST_CASE("settings parsing") {
  const BenchmarkSettings s = parse_settings(R"(
; comment
[scenario]
n_sim = 120
Tc_offset = 1.0

[estimator]
alpha = 3
cutoff_units = relative
full_information = false
window = 25

[run]
seeds = 4, 5, 6
)");
  CHECK(s.n_sim == 120);
  CHECK(s.Tc_offset == 1.0);
  CHECK(s.alpha == 3.0);
  CHECK(s.cutoff_units == CutoffUnits::kRelative);
  CHECK_FALSE(s.full_information);
  CHECK(s.window == 25);
  CHECK(s.seeds == std::vector<std::uint64_t>{4, 5, 6});

  const BenchmarkSettings d;
  CHECK(d.alpha == 2.0);
  CHECK(d.n_sim == 400);
  CHECK(d.dt == 0.2);
  CHECK(d.seeds.size() == 10);

  CHECK_THROWS_AS(parse_settings("[scenario]\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_settings("[scenario]\nn_sim = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_settings("[scenario]\nn_sim = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_settings("[estimator]\nalpha = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_settings("[estimator]\ncutoff_units = meters\n"), ConfigError);
  CHECK_THROWS_AS(load_settings("/nonexistent/settings.ini"), Error);

  BenchmarkSettings t;
  apply_setting(t, "run.seed_count", "3");
  CHECK(t.seeds.size() == 3);
  CHECK(parse_double_list("1, 2.5,3") == std::vector<double>{1.0, 2.5, 3.0});
  CHECK_THROWS_AS(parse_double_list("1,,x"), ConfigError);
}

TEST_CASE("case labels and validation") {
  CaseSpec spec;
  spec.kind = CaseKind::kFixedN;
  spec.n = 5;
  CHECK(spec.label() == "n=5");
  spec.n = 12;
  CHECK_THROWS_AS(spec.validate(), ContractViolation);
  spec.kind = CaseKind::kCase3;
  CHECK(spec.label() == "case3");
}

TEST_CASE("estimator options per case") {
  const EstimatorOptions c1 = estimator_options(short_case(CaseKind::kCase1));
  CHECK_FALSE(c1.selection.has_value());
  const EstimatorOptions c3 = estimator_options(short_case(CaseKind::kCase3));
  REQUIRE(c3.selection.has_value());
  CHECK(c3.selection->mode == SelectionMode::kForcedSubsetCutoff);
  CHECK(c3.selection->forced == std::vector<int>{0, 1, 2});
  CaseSpec fixed = short_case(CaseKind::kFixedN);
  fixed.n = 6;
  const EstimatorOptions fn = estimator_options(fixed);
  CHECK(fn.selection->mode == SelectionMode::kFixedCount);
  CHECK(fn.selection->fixed_count == 6);

  const Vec xas = cstr::augmented_steady_state(cstr::CstrParams{});
  CHECK(((c1.mhe.upper - xas).array() > 0).all());
  CHECK(((xas - c1.mhe.lower).array() > 0).all());
  CHECK((c1.initial_guess - 1.05 * xas).cwiseAbs().maxCoeff() < 1e-9 * xas.cwiseAbs().maxCoeff());
}

TEST_CASE("runs are deterministic per seed and keep their bookkeeping") {
  const CaseSpec spec = short_case(CaseKind::kCase2);
  const RunReport a = run_case(spec, 3);
  const RunReport b = run_case(spec, 3);
  CHECK(a.sigma == b.sigma);
  CHECK(a.rmse_xa == b.rmse_xa);
  CHECK(a.estimates.size() == 30);
  for (std::size_t k = 0; k < a.estimates.size(); ++k) CHECK(a.estimates[k] == b.estimates[k]);

  for (const EstimationRecord& r : a.records)
    CHECK(r.selection.selected.size() + r.selection.unselected.size() == 11);
  for (int c : a.inclusion_counts) {
    CHECK(c >= 0);
    CHECK(c <= 30);
  }
  CHECK((a.sigma.array() >= 0).all());
  CHECK(a.rank_trace.size() == 30);

  // A parameter never selected keeps its initial mismatch exactly.
  for (int i = cstr::kStates; i < cstr::kAugmented; ++i)
    if (a.inclusion_counts[i] == 0) CHECK(std::abs(a.sigma(i) - 0.05) < 1e-12);
}

TEST_CASE("case 1 estimates every component at every step") {
  const RunReport r = run_case(short_case(CaseKind::kCase1, 15), 1);
  for (int c : r.inclusion_counts) CHECK(c == 15);
}

TEST_CASE("case 3 always includes the physical states") {
  const RunReport r = run_case(short_case(CaseKind::kCase3, 20), 1);
  for (int i = 0; i < 3; ++i) CHECK(r.inclusion_counts[i] == 20);
}

TEST_CASE("without noise or mismatch case 1 reproduces the truth") {
  CaseSpec spec = short_case(CaseKind::kCase1, 15);
  spec.settings.relative_noise = 0.0;
  spec.settings.initial_guess_mismatch = 0.0;
  spec.settings.parameter_mismatch = 0.0;
  const RunReport r = run_case(spec, 1);
  CHECK(r.sigma.maxCoeff() < 1e-9);
}

TEST_CASE("fixed n equal to the augmented dimension matches case 1") {
  CaseSpec all = short_case(CaseKind::kFixedN, 15);
  all.n = 11;
  const RunReport a = run_case(all, 2);
  const RunReport b = run_case(short_case(CaseKind::kCase1, 15), 2);
  CHECK(a.rmse_xa == doctest::Approx(b.rmse_xa).epsilon(1e-6));
}

TEST_CASE("multi-seed summaries are seed medians") {
  const CaseSummary s = run_case_seeds(short_case(CaseKind::kCase2, 12));
  REQUIRE(s.runs.size() == 2);
  CHECK(s.runs[0].seed == 1);
  CHECK(s.runs[1].seed == 2);
  CHECK(s.rmse_xa == doctest::Approx((s.runs[0].rmse_xa + s.runs[1].rmse_xa) / 2));
  const RunReport again = run_case(s.spec, 2);
  CHECK(again.rmse_xa == s.runs[1].rmse_xa);
}

TEST_CASE("sweeps produce one summary per value") {
  CaseSpec base = short_case(CaseKind::kCase2, 10);
  base.settings.seeds = {1};
  const auto n = sweep_fixed_n({4, 6}, base);
  REQUIRE(n.size() == 2);
  CHECK(n[0].spec.label() == "n=4");
  for (const EstimationRecord& r : n[1].runs[0].records) CHECK(r.selection.selected.size() == 6);
  const auto a = sweep_alpha({1.0, 3.0}, base);
  REQUIRE(a.size() == 2);
  CHECK(a[1].spec.alpha == 3.0);
  CHECK_THROWS_AS(sweep_fixed_n({0}, base), ContractViolation);
}

TEST_CASE("rank diagnostics along the truth stay below full rank") {
  BenchmarkSettings s;
  s.n_sim = 40;
  const RankDiagnostics d = diagnose_rank(s, 1);
  REQUIRE(d.steps.size() == 40);
  for (const RankReport& r : d.sensitivity) CHECK(r.rank < 11);
  for (const RankReport& r : d.observability) CHECK(r.rank < 11);
}

TEST_CASE("report tables") {
  SUBCASE("empty list gives the header only") {
    std::ostringstream os;
    report::write_table_csv(os, {});
    const auto l = lines_of(os.str());
    REQUIRE(l.size() == 1);
    CHECK(l[0].rfind("label,sigma_1,", 0) == 0);
    CHECK(field_count(l[0]) == 1 + 11 + 3);
  }
  SUBCASE("a case row has 11 sigma columns and 3 RMSE columns") {
    const RunReport r = run_case(short_case(CaseKind::kCase2, 8), 1);
    std::ostringstream os;
    report::write_table_csv(os, {report::row_of(r)});
    const auto l = lines_of(os.str());
    REQUIRE(l.size() == 2);
    CHECK(field_count(l[1]) == 15);
    CHECK(l[0].find("rmse_x,rmse_theta,rmse_xa") != std::string::npos);
  }
}

TEST_CASE("trace, selection and rank outputs") {
  const CaseSummary s = run_case_seeds(short_case(CaseKind::kCase2, 8));
  const RunReport& r = s.runs[0];
  std::ostringstream trace, sel, rank, js;
  report::write_trace_csv(trace, r);
  auto l = lines_of(trace.str());
  REQUIRE(l.size() == 9);
  CHECK(l[0].rfind("step,true_", 0) == 0);
  CHECK(l[0].find("selected_mask,objective,iterations,converged") != std::string::npos);
  CHECK(field_count(l[1]) == field_count(l[0]));

  report::write_selection_csv(sel, r.records);
  l = lines_of(sel.str());
  REQUIRE(l.size() == 9);
  CHECK(l[0] == "step,selected,residual_norms,termination");

  report::write_rank_trace_csv(rank, r);
  CHECK(lines_of(rank.str()).size() == 9);

  report::write_summary_json(js, {s});
  const auto j = nlohmann::json::parse(js.str());
  REQUIRE(j.is_object());
  CHECK(j.dump().find("case2") != std::string::npos);
}

TEST_CASE("SVG plots") {
  const std::string svg = report::rank_svg({0, 1, 2}, {5, 7, 9}, "rank");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);  // reference line

  report::Plot p;
  p.series.push_back({"a", {0, 1}, {1, 2}});
  CHECK(report::render_svg(p).find("<polyline") != std::string::npos);
}

TEST_CASE("export writes the declared files") {
  const auto dir = scratch_dir("export");
  const CaseSummary s = run_case_seeds(short_case(CaseKind::kCase2, 6));
  report::export_reports(dir.string(), {s});
  for (const char* f : {"report.csv", "summary.json", "trace.csv", "selection.csv", "rank.csv"})
    CHECK(std::filesystem::exists(dir / f));
  bool any_svg = false;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    any_svg |= e.path().extension() == ".svg";
  CHECK(any_svg);
  std::filesystem::remove_all(dir);

  CHECK_THROWS_AS(report::export_reports("/proc/sensmhe/forbidden", {s}), IoError);
}

TEST_CASE("benchmark inclusion pattern over the full horizon") {
  CaseSpec c2;
  c2.kind = CaseKind::kCase2;
  const RunReport r2 = run_case(c2, 1);
  CHECK(r2.inclusion_counts[0] == 0);
  CHECK(r2.inclusion_counts[1] == 400);
  CHECK(r2.inclusion_counts[2] == 400);

  CaseSpec c3 = c2;
  c3.kind = CaseKind::kCase3;
  const RunReport r3 = run_case(c3, 1);
  for (int i = 0; i < 3; ++i) CHECK(r3.inclusion_counts[i] == 400);
  CHECK(r3.inclusion_counts[5] == 0);

  // Same seed: selection helps over estimating everything.
  CaseSpec c1 = c2;
  c1.kind = CaseKind::kCase1;
  const RunReport r1 = run_case(c1, 1);
  CHECK(r2.rmse_xa < r1.rmse_xa);
  CHECK(r2.rmse_xa <= 1.2 * r3.rmse_xa);
}
