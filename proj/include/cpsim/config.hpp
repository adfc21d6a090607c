// Copyright 2026 The cpsim Authors
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

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "cpsim/common.hpp"

namespace cpsim::config {

using json = nlohmann::json;

namespace detail {

/// Reads one JSON object, remembering which keys were consumed so that
/// finish() can reject the rest. Every error names the full field path.
class Reader {
public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const json* v = fetch(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_number()) throw ConfigError(field(key) + ": expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) throw ConfigError(field(key) + ": must be finite");
    return x;
  }

  double positive(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const double x = number(key, fallback);
    if (!(x > 0.0)) throw ConfigError(field(key) + ": must be positive");
    return x;
  }

  double non_negative(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const double x = number(key, fallback);
    if (x < 0.0) throw ConfigError(field(key) + ": must be non-negative");
    return x;
  }

  std::uint64_t count(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt,
                      std::uint64_t min = 1) {
    const json* v = fetch(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
      throw ConfigError(field(key) + ": expected a non-negative integer");
    const auto n = v->get<std::uint64_t>();
    if (n < min) throw ConfigError(field(key) + ": must be at least " + std::to_string(min));
    return n;
  }

  std::string choice(const std::string& key, const std::vector<std::string>& allowed,
                     std::optional<std::string> fallback = std::nullopt) {
    const json* v = fetch(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_string()) throw ConfigError(field(key) + ": expected a string");
    const auto s = v->get<std::string>();
    for (const auto& a : allowed)
      if (s == a) return s;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    throw ConfigError(field(key) + ": '" + s + "' is not one of {" + list + "}");
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const json* v = fetch(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_string() || v->get<std::string>().empty()) throw ConfigError(field(key) + ": expected a non-empty string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) {
    const json* v = fetch(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_array() || v->empty()) throw ConfigError(field(key) + ": expected a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto& e = (*v)[i];
      if (!e.is_number() || !std::isfinite(e.get<double>()))
        throw ConfigError(field(key) + "[" + std::to_string(i) + "]: expected a finite number");
      out.push_back(e.get<double>());
    }
    return out;
  }

  const json& raw(const std::string& key) { return *fetch(key, false); }

  Reader object(const std::string& key) { return Reader(*fetch(key, false), field(key)); }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "config" : path_; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(field(it.key()) + ": unknown key");
  }

private:
  const json* fetch(const std::string& key, bool optional) {
    if (!j_.contains(key)) {
      if (optional) return nullptr;
      throw ConfigError(field(key) + ": required field missing");
    }
    used_.insert(key);
    return &j_.at(key);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

}  // namespace detail

struct GridConfig {
  double lower = 0.0;
  double upper = 0.0;
  std::uint64_t nodes = 0;
};

/// Equal-weight superposition of gaussian packets |psi|^2 ~ exp(-(x-c)^2 / (2 w^2)).
struct StateConfig {
  std::vector<double> centers{0.0};
  std::optional<double> width;  // defaults to r_C
};

struct ParamsConfig {
  double lambda_grw = 0.0;
  std::string units = "si";
  double hbar = constants::hbar;
  double c_light = constants::c_light;
  double m_R = constants::nucleon_mass;
  double mass = constants::nucleon_mass;
  std::optional<double> dt;
  double r_C = constants::grw_collapse_radius;
  double hopping = 0.0;  // tight-binding energy J in H = -J sum (|k><k+1| + h.c.)
  std::string family = "grw_position";
  std::optional<GridConfig> grid;
  StateConfig initial_state;
};

struct GravityConfig {
  double G = constants::G;
  double r_G = 0.0;
  std::optional<double> r_m;
  std::string F_kind = "gaussian_smeared";
};

struct ExactConfig {
  double gamma = 0.0;
  double mu = 0.0;
  double window = 0.0;
  std::uint64_t samples = 1;
};

struct TrajectoriesConfig {
  double t_end = 0.0;
  std::uint64_t n_traj = 1;
  std::uint64_t checkpoints = 10;
};

struct MasterConfig {
  double t_end = 0.0;
  std::uint64_t checkpoints = 10;
};

struct BornConfig {
  std::vector<double> amplitudes;  // real amplitudes c_i
  std::uint64_t amplification = 1;
  double t_obs = 0.0;
  std::uint64_t runs = 1;
};

struct GammaConfig {
  std::vector<double> d_values;
  double quad_tol = 1e-10;
};

struct EnergyConfig {
  std::vector<double> r_G_values;
  double psi_width = 0.0;
  double r_max = 0.0;
  std::uint64_t points = 0;
};

struct PotentialConfig {
  double source_mass = 0.0;
  double source_width = 0.0;
  double half_extent = 0.0;
  std::uint64_t nodes = 0;
  std::vector<double> probe_distances;
};

inline const std::vector<std::string> kExperiments = {"exact", "trajectories", "master", "compare",
                                                      "born",  "gamma",        "energy", "potential"};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string output_path;
  std::string output_format = "csv";
  ParamsConfig params;
  std::optional<GravityConfig> gravity;
  ExactConfig exact;
  TrajectoriesConfig trajectories;
  MasterConfig master;
  BornConfig born;
  GammaConfig gamma;
  EnergyConfig energy;
  PotentialConfig potential;
  json echo;  // the document as read
};

namespace detail {

inline ParamsConfig read_params(Reader r, const std::string& experiment) {
  ParamsConfig p;
  p.lambda_grw = r.non_negative("lambda_grw");
  p.units = r.choice("units", {"si", "natural"}, std::string("si"));
  const bool natural = p.units == "natural";
  p.hbar = r.positive("hbar", natural ? 1.0 : constants::hbar);
  p.c_light = r.positive("c_light", natural ? 1.0 : constants::c_light);
  p.m_R = r.positive("m_R", natural ? 1.0 : constants::nucleon_mass);
  p.mass = r.positive("mass", p.m_R);
  p.r_C = r.positive("r_C");
  p.hopping = r.number("hopping", 0.0);
  p.family = r.choice("family", {"grw_position"}, std::string("grw_position"));

  const bool needs_dt = experiment == "trajectories" || experiment == "master" || experiment == "compare" ||
                        experiment == "born";
  if (needs_dt || r.has("dt")) p.dt = r.positive("dt");
  const bool needs_grid = experiment == "exact" || experiment == "trajectories" || experiment == "master" ||
                          experiment == "compare";
  if (needs_grid || r.has("grid")) {
    auto g = r.object("grid");
    GridConfig gc;
    gc.lower = g.number("lower");
    gc.upper = g.number("upper");
    gc.nodes = g.count("nodes", std::nullopt, 2);
    if (!(gc.upper > gc.lower)) throw ConfigError(g.field("upper") + ": must exceed lower");
    g.finish();
    p.grid = gc;
  }
  if (r.has("initial_state")) {
    auto s = r.object("initial_state");
    p.initial_state.centers = s.numbers("centers", std::vector<double>{0.0});
    if (s.has("width")) p.initial_state.width = s.positive("width");
    s.finish();
  }
  r.finish();
  return p;
}

inline GravityConfig read_gravity(Reader r, const ParamsConfig& p) {
  GravityConfig g;
  g.G = r.non_negative("G", p.units == "natural" ? 1.0 : constants::G);
  g.r_G = r.positive("r_G", p.r_C);
  if (r.has("r_m")) g.r_m = r.non_negative("r_m");
  g.F_kind = r.choice("F_kind", {"gaussian_smeared", "point_source"}, std::string("gaussian_smeared"));
  r.finish();
  return g;
}

}  // namespace detail

/// Parses and validates a configuration document. Throws ConfigError naming
/// the offending field (or line and column for malformed JSON).
inline ExperimentConfig parse(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < e.byte - 1 && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": malformed JSON");
  }

  detail::Reader r(doc, "");
  ExperimentConfig c;
  c.echo = doc;
  c.experiment = r.choice("experiment", kExperiments);
  c.seed = r.count("seed", std::uint64_t{0}, 0);
  c.output_path = r.text("output_path", std::string("results.csv"));
  c.output_format = r.choice("output_format", {"csv", "json"}, std::string("csv"));
  c.params = detail::read_params(r.object("params"), c.experiment);

  const bool needs_gravity = c.experiment == "gamma" || c.experiment == "energy" || c.experiment == "potential";
  if (needs_gravity || r.has("gravity")) c.gravity = detail::read_gravity(r.object("gravity"), c.params);

  auto block = r.object(c.experiment);
  if (c.experiment == "exact") {
    c.exact.gamma = block.non_negative("gamma");
    c.exact.mu = block.non_negative("mu");
    c.exact.window = block.positive("window");
    c.exact.samples = block.count("samples");
  } else if (c.experiment == "trajectories" || c.experiment == "compare") {
    c.trajectories.t_end = block.positive("t_end");
    c.trajectories.n_traj = block.count("n_traj");
    c.trajectories.checkpoints = block.count("checkpoints", std::uint64_t{10});
  } else if (c.experiment == "master") {
    c.master.t_end = block.positive("t_end");
    c.master.checkpoints = block.count("checkpoints", std::uint64_t{10});
  } else if (c.experiment == "born") {
    c.born.amplitudes = block.numbers("amplitudes");
    if (c.born.amplitudes.size() < 2) throw ConfigError(block.field("amplitudes") + ": need at least two outcomes");
    double norm = 0.0;
    for (double a : c.born.amplitudes) norm += a * a;
    if (std::abs(norm - 1.0) > 1e-10) throw ConfigError(block.field("amplitudes") + ": squares must sum to 1");
    c.born.amplification = block.count("amplification");
    c.born.t_obs = block.positive("t_obs");
    c.born.runs = block.count("runs");
  } else if (c.experiment == "gamma") {
    c.gamma.d_values = block.numbers("d_values");
    for (double d : c.gamma.d_values)
      if (d < 0.0) throw ConfigError(block.field("d_values") + ": entries must be non-negative");
    c.gamma.quad_tol = block.positive("quad_tol", 1e-10);
  } else if (c.experiment == "energy") {
    c.energy.r_G_values = block.numbers("r_G_values");
    for (double v : c.energy.r_G_values)
      if (!(v > 0.0)) throw ConfigError(block.field("r_G_values") + ": entries must be positive");
    c.energy.psi_width = block.positive("psi_width");
    c.energy.r_max = block.positive("r_max");
    c.energy.points = block.count("points", std::nullopt, 5);
  } else if (c.experiment == "potential") {
    c.potential.source_mass = block.positive("source_mass");
    c.potential.source_width = block.positive("source_width");
    c.potential.half_extent = block.positive("half_extent");
    c.potential.nodes = block.count("nodes", std::nullopt, 2);
    c.potential.probe_distances = block.numbers("probe_distances");
  }
  block.finish();
  r.finish();
  return c;
}

}  // namespace cpsim::config
