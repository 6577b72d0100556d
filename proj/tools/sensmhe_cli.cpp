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


// Command-line front end. Links only the C interface.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sensmhe/sensmhe.h"

namespace {

int report_error(sensmhe_status s, const char* what) {
  std::fprintf(stderr, "sensmhe: %s failed: %s: %s\n", what, sensmhe_status_string(s),
               sensmhe_last_error());
  return 1;
}

void print_table(const sensmhe_report* report) {
  size_t n = 0;
  sensmhe_report_case_count(report, &n);
  std::printf("%-12s", "case");
  for (int i = 1; i <= SENSMHE_AUGMENTED_DIM; ++i) std::printf(" %7s", ("s" + std::to_string(i)).c_str());
  std::printf(" %8s %8s %8s\n", "RMSE_x", "RMSE_th", "RMSE_xa");
  for (size_t c = 0; c < n; ++c) {
    const char* label = nullptr;
    sensmhe_metrics m{};
    sensmhe_report_label(report, c, &label);
    sensmhe_report_median(report, c, &m);
    std::printf("%-12s", label);
    for (double s : m.sigma) std::printf(" %6.2f%%", 100.0 * s);
    std::printf(" %7.2f%% %7.2f%% %7.2f%%\n", 100.0 * m.rmse_x, 100.0 * m.rmse_theta,
                100.0 * m.rmse_xa);
  }
}

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::vector<uint64_t> seeds;
  std::string out = "out";
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Settings file (INI)")->check(CLI::ExistingFile);
  app->add_option("--set", c.overrides, "Override a setting, section.key=value");
  app->add_option("--seed", c.seeds, "Seed(s); replaces the configured list")->delimiter(',');
  app->add_option("--out", c.out, "Output directory");
}

// Returns 0 and a config handle, or an exit code.
int load_config(const Common& c, sensmhe_config** config) {
  sensmhe_status s = c.config.empty() ? sensmhe_config_create(config)
                                      : sensmhe_config_load(c.config.c_str(), config);
  if (s != SENSMHE_OK) return report_error(s, "loading settings");
  for (const std::string& o : c.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "sensmhe: --set expects section.key=value, got '%s'\n", o.c_str());
      return 2;
    }
    s = sensmhe_config_set(*config, o.substr(0, eq).c_str(), o.substr(eq + 1).c_str());
    if (s != SENSMHE_OK) return report_error(s, "applying --set");
  }
  if (!c.seeds.empty()) {
    s = sensmhe_config_set_seeds(*config, c.seeds.data(), c.seeds.size());
    if (s != SENSMHE_OK) return report_error(s, "setting seeds");
  }
  return 0;
}

int finish(sensmhe_report* report, const Common& c, bool traces) {
  print_table(report);
  const sensmhe_status s = sensmhe_report_export(report, c.out.c_str(), traces ? 1 : 0);
  sensmhe_report_destroy(report);
  if (s != SENSMHE_OK) return report_error(s, "export");
  std::printf("wrote %s\n", c.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensitivity-based variable selection with moving horizon estimation"};
  app.require_subcommand(1);

  Common run_opts;
  int case_number = 2;
  bool no_traces = false;
  auto* run = app.add_subcommand("run", "Run case 1, 2 or 3 of the CSTR benchmark");
  run->add_option("--case", case_number, "Case number")->required()->check(CLI::IsMember({1, 2, 3}));
  run->add_flag("--no-traces", no_traces, "Skip per-step traces and plots");
  add_common(run, run_opts);

  Common sweep_opts;
  std::string param;
  std::vector<double> values;
  auto* sweep = app.add_subcommand("sweep", "Sweep the fixed count n or the cutoff alpha");
  sweep->add_option("--param", param, "n or alpha")->required()->check(CLI::IsMember({"n", "alpha"}));
  sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
  add_common(sweep, sweep_opts);

  Common diag_opts;
  bool rank = false;
  auto* diagnose = app.add_subcommand("diagnose", "Rank diagnostics along the true trajectory");
  diagnose->add_flag("--rank", rank, "Emit observability and sensitivity rank traces")->required();
  add_common(diagnose, diag_opts);

  Common truth_opts;
  auto* truth = app.add_subcommand("truth", "Write the simulated plant trajectory as CSV");
  add_common(truth, truth_opts);

  CLI11_PARSE(app, argc, argv);

  sensmhe_config* config = nullptr;
  int rc = 0;
  if (*run) {
    if ((rc = load_config(run_opts, &config))) return rc;
    sensmhe_report* report = nullptr;
    const sensmhe_status s =
        sensmhe_run_case(config, static_cast<sensmhe_case>(case_number), 0.0, &report);
    sensmhe_config_destroy(config);
    if (s != SENSMHE_OK) return report_error(s, "run");
    return finish(report, run_opts, !no_traces);
  }
  if (*sweep) {
    if ((rc = load_config(sweep_opts, &config))) return rc;
    sensmhe_report* report = nullptr;
    const sensmhe_case kind = param == "n" ? SENSMHE_CASE_FIXED_N : SENSMHE_CASE_ALPHA;
    const sensmhe_status s = sensmhe_sweep(config, kind, values.data(), values.size(), &report);
    sensmhe_config_destroy(config);
    if (s != SENSMHE_OK) return report_error(s, "sweep");
    return finish(report, sweep_opts, false);
  }
  if (*diagnose) {
    if ((rc = load_config(diag_opts, &config))) return rc;
    const uint64_t seed = diag_opts.seeds.empty() ? 1 : diag_opts.seeds.front();
    size_t length = 0;
    sensmhe_status s =
        sensmhe_diagnose_rank(config, seed, diag_opts.out.c_str(), nullptr, nullptr, 0, &length);
    if (s != SENSMHE_OK) {
      sensmhe_config_destroy(config);
      return report_error(s, "diagnose");
    }
    std::vector<int> obs(length), sens(length);
    s = sensmhe_diagnose_rank(config, seed, nullptr, obs.data(), sens.data(), length, &length);
    sensmhe_config_destroy(config);
    if (s != SENSMHE_OK) return report_error(s, "diagnose");
    int obs_max = 0, sens_max = 0;
    for (size_t i = 0; i < length; ++i) {
      obs_max = std::max(obs_max, obs[i]);
      sens_max = std::max(sens_max, sens[i]);
    }
    std::printf("steps %zu  max observability rank %d  max sensitivity rank %d  (of %d)\n",
                length, obs_max, sens_max, SENSMHE_AUGMENTED_DIM);
    std::printf("wrote %s\n", diag_opts.out.c_str());
    return 0;
  }
  if (*truth) {
    if ((rc = load_config(truth_opts, &config))) return rc;
    const uint64_t seed = truth_opts.seeds.empty() ? 1 : truth_opts.seeds.front();
    const sensmhe_status s = sensmhe_write_truth_csv(config, seed, truth_opts.out.c_str());
    sensmhe_config_destroy(config);
    if (s != SENSMHE_OK) return report_error(s, "truth");
    return 0;
  }
  return 0;
}
