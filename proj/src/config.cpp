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

#include "sensmhe/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace sensmhe::harness {

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw ConfigError("'" + key + "' expects an integer");
  return static_cast<int>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string s = boost::algorithm::to_lower_copy(v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("'" + key + "' expects a boolean, got '" + v + "'");
}

}  // namespace

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, text, boost::algorithm::is_any_of(", "),
                          boost::algorithm::token_compress_on);
  std::vector<double> out;
  for (std::string& p : parts) {
    boost::algorithm::trim(p);
    if (!p.empty()) out.push_back(to_double("list", p));
  }
  return out;
}

void BenchmarkSettings::validate() const {
  params.validate();
  if (!(dt > 0.0)) throw ConfigError("scenario.dt must be positive");
  if (n_sim < 1) throw ConfigError("scenario.n_sim must be at least 1");
  if (relative_noise < 0.0) throw ConfigError("scenario.relative_noise must be >= 0");
  if (initial_guess_mismatch < 0.0 || initial_guess_mismatch >= 1.0 ||
      parameter_mismatch < 0.0 || parameter_mismatch >= 1.0)
    throw ConfigError("mismatch fractions must lie in [0, 1)");
  if (min_dwell < 1 || max_dwell < min_dwell)
    throw ConfigError("dwell bounds must satisfy 1 <= min_dwell <= max_dwell");
  if (!(alpha > 0.0)) throw ConfigError("estimator.alpha must be positive");
  if (!(bound_fraction > 0.0)) throw ConfigError("estimator.bound_fraction must be positive");
  if (!full_information && window < 1) throw ConfigError("estimator.window must be >= 1");
  if (!(rank_scale > 0.0)) throw ConfigError("estimator.rank_scale must be positive");
  if (seeds.empty()) throw ConfigError("run.seeds must not be empty");
}

void apply_setting(BenchmarkSettings& s, const std::string& key, const std::string& raw) {
  const std::string v = boost::algorithm::trim_copy(raw);
  auto num = [&] { return to_double(key, v); };
  auto integer = [&] { return to_int(key, v); };

  if (key == "plant.F0") s.params.F0 = num();
  else if (key == "plant.T0") s.params.T0 = num();
  else if (key == "plant.c0") s.params.c0 = num();
  else if (key == "plant.r") s.params.r = num();
  else if (key == "plant.k0") s.params.k0 = num();
  else if (key == "plant.E_over_R") s.params.E_over_R = num();
  else if (key == "plant.U") s.params.U = num();
  else if (key == "plant.rho") s.params.rho = num();
  else if (key == "plant.Cp") s.params.Cp = num();
  else if (key == "plant.dH") s.params.dH = num();
  else if (key == "scenario.dt") s.dt = num();
  else if (key == "scenario.n_sim") s.n_sim = integer();
  else if (key == "scenario.relative_noise") s.relative_noise = num();
  else if (key == "scenario.initial_guess_mismatch") s.initial_guess_mismatch = num();
  else if (key == "scenario.parameter_mismatch") s.parameter_mismatch = num();
  else if (key == "scenario.input_seed") s.input_seed = static_cast<std::uint64_t>(integer());
  else if (key == "scenario.min_dwell") s.min_dwell = integer();
  else if (key == "scenario.max_dwell") s.max_dwell = integer();
  else if (key == "scenario.F_low") s.F_low = num();
  else if (key == "scenario.F_high") s.F_high = num();
  else if (key == "scenario.Tc_offset") s.Tc_offset = num();
  else if (key == "estimator.alpha") s.alpha = num();
  else if (key == "estimator.cutoff_units") {
    if (v == "relative") s.cutoff_units = CutoffUnits::kRelative;
    else if (v == "absolute") s.cutoff_units = CutoffUnits::kAbsolute;
    else throw ConfigError("estimator.cutoff_units must be 'relative' or 'absolute'");
  } else if (key == "estimator.bound_fraction") s.bound_fraction = num();
  else if (key == "estimator.full_information") s.full_information = to_bool(key, v);
  else if (key == "estimator.window") s.window = integer();
  else if (key == "estimator.rank_scale") s.rank_scale = num();
  else if (key == "estimator.sensitivity_window") s.sensitivity_window = integer();
  else if (key == "estimator.output_floor") s.output_floor = num();
  else if (key == "estimator.max_iterations") s.solver.max_iterations = integer();
  else if (key == "estimator.gradient_tolerance") s.solver.gradient_tolerance = num();
  else if (key == "estimator.function_tolerance") s.solver.function_tolerance = num();
  else if (key == "estimator.penalty_weight") s.solver.penalty_weight = num();
  else if (key == "estimator.damping") s.solver.damping = num();
  else if (key == "estimator.max_damping") s.solver.max_damping = num();
  else if (key == "run.seeds") {
    s.seeds.clear();
    for (double d : parse_double_list(v)) {
      if (d < 0 || d != std::floor(d)) throw ConfigError("run.seeds expects non-negative integers");
      s.seeds.push_back(static_cast<std::uint64_t>(d));
    }
  } else if (key == "run.seed_count" || key == "run.seed_base") {
    // Regenerate a contiguous seed range; base defaults to 1.
    const int value = integer();
    if (value < 0) throw ConfigError("'" + key + "' must be non-negative");
    const std::uint64_t base = s.seeds.empty() ? 1 : s.seeds.front();
    const std::size_t count = s.seeds.size();
    s.seeds.clear();
    if (key == "run.seed_count") {
      for (int i = 0; i < value; ++i) s.seeds.push_back(base + static_cast<std::uint64_t>(i));
    } else {
      for (std::size_t i = 0; i < count; ++i) s.seeds.push_back(static_cast<std::uint64_t>(value) + i);
    }
  } else if (key == "run.threads") s.threads = integer();
  else throw ConfigError("unknown setting '" + key + "'");
}

BenchmarkSettings parse_settings(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed settings: ") + e.what());
  }
  BenchmarkSettings s;
  for (const auto& [section, entries] : tree) {
    if (entries.empty()) {
      throw ConfigError("setting '" + section + "' must live inside a [section]");
    }
    for (const auto& [key, value] : entries)
      apply_setting(s, section + "." + key, value.get_value<std::string>());
  }
  s.validate();
  return s;
}

BenchmarkSettings load_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open settings file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_settings(ss.str());
}

}  // namespace sensmhe::harness
