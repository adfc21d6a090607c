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
#include <memory>
#include <string>
#include <vector>

#include "cpsim/coarse_grain.hpp"
#include "cpsim/config.hpp"
#include "cpsim/dynamics.hpp"
#include "cpsim/exact_cp.hpp"
#include "cpsim/gravity.hpp"
#include "cpsim/io.hpp"
#include "cpsim/lindblad.hpp"
#include "cpsim/measure.hpp"

#ifndef CPSIM_VERSION
#define CPSIM_VERSION "0.0.0"
#endif

namespace cpsim {

struct ExperimentResult {
  io::Table table;
  io::json summary = io::json::object();
};

namespace detail {

inline Units units_of(const config::ParamsConfig& p) { return Units{p.hbar}; }

inline SpatialGrid grid_of(const config::ParamsConfig& p) {
  require(p.grid.has_value(), "experiment: params.grid is required");
  return SpatialGrid::uniform_1d(p.grid->lower, p.grid->upper, p.grid->nodes);
}

/// Tight-binding H = -J sum_k (|k><k+1| + |k+1><k|) on the grid nodes.
inline HermitianOperator hopping_hamiltonian(std::size_t n, double J) {
  Matrix h = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k + 1 < h.rows(); ++k) h(k, k + 1) = h(k + 1, k) = -J;
  return HermitianOperator(std::move(h));
}

/// Equal-weight sum of gaussian packets with |psi|^2 of standard deviation `width`.
inline StateVector initial_state(const SpatialGrid& grid, const config::ParamsConfig& p) {
  const double w = p.initial_state.width.value_or(p.r_C);
  Vector v = Vector::Zero(static_cast<Eigen::Index>(grid.size()));
  for (double c : p.initial_state.centers)
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double x = grid.position(k)[0] - c;
      v(static_cast<Eigen::Index>(k)) += std::sqrt(grid.weight(k)) * std::exp(-x * x / (4.0 * w * w));
    }
  if (v.norm() == 0.0) throw ContractViolation("initial_state: packets have no weight on the grid");
  return StateVector::normalized(std::move(v));
}

inline GravityParams gravity_of(const config::ExperimentConfig& c) {
  const auto& g = *c.gravity;
  const auto& p = c.params;
  GravityParams gp;
  gp.G = g.G;
  gp.r_G = g.r_G;
  gp.F_kind = g.F_kind == "point_source" ? GravityParams::FKind::point_source
                                         : GravityParams::FKind::gaussian_smeared;
  if (g.r_m) {
    gp.r_m = *g.r_m;
    // An explicit G alongside r_m must agree with it.
    if (c.echo.at("gravity").contains("G")) gp.check_consistency(p.m_R, p.mass, p.lambda_grw, p.hbar);
  } else {
    gp.r_m = GravityParams::gravitational_length(g.G, p.m_R, p.mass, p.lambda_grw, p.hbar);
  }
  gp.validate();
  return gp;
}

inline ModelParams model_of(const config::ExperimentConfig& c) {
  const auto& p = c.params;
  const auto grid = grid_of(p);
  ModelParams m;
  m.lambda_grw = p.lambda_grw;
  m.units = units_of(p);
  m.c_light = p.c_light;
  m.mass = p.mass;
  m.m_ref = p.m_R;
  m.dt = p.dt.value_or(1.0);
  m.hamiltonian = hopping_hamiltonian(grid.size(), p.hopping);
  auto fam = build_grw_family(grid, SmearingFunction::gaussian_amplitude(p.r_C, 1));
  if (c.gravity) fam = grav_unitary(fam, gravity_of(c), p.m_R, p.lambda_grw, m.units);
  m.family = std::make_shared<OperatorFamily>(std::move(fam));
  m.validate();
  return m;
}

inline io::json doubles(const std::vector<double>& v) {
  io::json a = io::json::array();
  for (double x : v) a.push_back(x);
  return a;
}

inline ExperimentResult run_exact(const config::ExperimentConfig& c, std::uint64_t seed) {
  const auto& e = c.exact;
  const auto m = model_of(c);
  const auto psi0 = initial_state(m.grid(), c.params);
  ExperimentResult r;
  r.table.columns = {"sample", "points", "flashes", "outcome_bits"};
  std::size_t total_flashes = 0, total_points = 0;
  for (std::uint64_t i = 0; i < e.samples; ++i) {
    RngStream rng(seed, i);
    const auto placed = place_collapse_points(m.grid(), 0.0, e.window, e.mu, m.c_light, rng);
    const auto chain = make_chain(placed, *m.family, e.gamma, m.mass / m.m_ref);
    const auto rec = sample_chain(psi0, chain, m.hamiltonian, rng, m.units);
    std::string bits = "0b";
    std::int64_t flashes = 0;
    for (auto o : rec.outcomes) {
      bits += o ? '1' : '0';
      flashes += o;
    }
    total_flashes += static_cast<std::size_t>(flashes);
    total_points += chain.size();
    r.table.add_row({static_cast<std::int64_t>(i), static_cast<std::int64_t>(chain.size()), flashes, bits});
  }
  r.summary = {{"samples", e.samples}, {"total_points", total_points}, {"total_flashes", total_flashes}};
  return r;
}

inline ExperimentResult run_trajectories_exp(const config::ExperimentConfig& c, std::uint64_t seed,
                                             unsigned threads) {
  const auto& t = c.trajectories;
  const auto m = model_of(c);
  const auto psi0 = initial_state(m.grid(), c.params);
  TrajectoryOptions opt;
  opt.checkpoints = static_cast<int>(t.checkpoints);
  opt.store_states = false;
  opt.threads = threads;
  const auto runs = run_trajectories(psi0, m, t.t_end, t.n_traj, seed, opt);
  ExperimentResult r;
  r.table.columns = {"traj", "flash_index", "time", "node", "x"};
  std::size_t flashes = 0, silent = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].flashes.empty()) ++silent;
    for (std::size_t j = 0; j < runs[i].flashes.size(); ++j) {
      const auto& f = runs[i].flashes[j];
      r.table.add_row({static_cast<std::int64_t>(i), static_cast<std::int64_t>(j), f.time,
                       static_cast<std::int64_t>(f.node), f.position[0]});
      ++flashes;
    }
  }
  r.summary = {{"n_traj", t.n_traj}, {"total_flashes", flashes}, {"trajectories_without_flash", silent}};
  return r;
}

inline ExperimentResult run_master(const config::ExperimentConfig& c) {
  const auto m = model_of(c);
  const auto psi0 = initial_state(m.grid(), c.params);
  const std::size_t n_steps = step_count(c.master.t_end, m.dt);
  const auto cps = checkpoint_steps(n_steps, static_cast<int>(c.master.checkpoints));
  LindbladIntegrator integ(m);
  Matrix rho = psi0.projector();
  const Matrix rho0 = rho;
  const double base = (rho0 - Matrix(rho0.diagonal().asDiagonal())).norm();
  RealVector x(static_cast<Eigen::Index>(m.grid().size()));
  for (std::size_t k = 0; k < m.grid().size(); ++k) x(static_cast<Eigen::Index>(k)) = m.grid().position(k)[0];

  ExperimentResult r;
  r.table.columns = {"time", "trace", "purity", "min_eigenvalue", "mean_x", "coherence"};
  std::size_t at = 0;
  for (auto s : cps) {
    rho = integ.evolve(rho, s - at);
    at = s;
    const DensityMatrix dm(rho);
    const double off = (rho - Matrix(rho.diagonal().asDiagonal())).norm();
    r.table.add_row({static_cast<double>(s) * m.dt, dm.trace(), dm.purity(), dm.min_eigenvalue(),
                     rho.diagonal().real().dot(x), base > 0.0 ? off / base : 0.0});
  }
  r.summary = {{"steps", n_steps}};
  return r;
}

inline ExperimentResult run_compare(const config::ExperimentConfig& c, std::uint64_t seed, unsigned threads) {
  const auto& t = c.trajectories;
  const auto m = model_of(c);
  const auto psi0 = initial_state(m.grid(), c.params);
  const auto cmp = ensemble_vs_master(psi0, m, t.t_end, t.n_traj, seed, static_cast<int>(t.checkpoints), threads);
  ExperimentResult r;
  r.table.columns = {"time", "frobenius_distance", "bound"};
  for (std::size_t i = 0; i < cmp.times.size(); ++i)
    r.table.add_row({cmp.times[i], cmp.frobenius_distance[i], cmp.bound[i]});
  r.summary = {{"max_distance", cmp.max_distance}, {"within_bound", cmp.within_bound}};
  return r;
}

inline ExperimentResult run_born(const config::ExperimentConfig& c, std::uint64_t seed, unsigned threads) {
  const auto& b = c.born;
  const auto& p = c.params;
  std::vector<cplx> amps(b.amplitudes.begin(), b.amplitudes.end());
  const auto pointer = PointerModel::standard(p.r_C, static_cast<int>(b.amplification),
                                              static_cast<int>(amps.size()));
  const auto rep = born_experiment(amps, pointer, p.lambda_grw, *p.dt, b.t_obs, b.runs, seed, threads);
  ExperimentResult r;
  r.table.columns = {"region", "expected", "count", "frequency", "wilson_lower", "wilson_upper"};
  for (std::size_t i = 0; i < rep.counts.size(); ++i)
    r.table.add_row({static_cast<std::int64_t>(i), rep.expected[i], static_cast<std::int64_t>(rep.counts[i]),
                     rep.frequencies[i], rep.intervals[i].lower, rep.intervals[i].upper});
  auto nan_null = [](double v) { return std::isfinite(v) ? io::json(v) : io::json(nullptr); };
  r.summary = {{"runs", rep.runs},
               {"zero_flash_runs", rep.zero_flash_runs},
               {"cross_region_runs", rep.cross_region_runs},
               {"cross_region_fraction", rep.cross_region_fraction()},
               {"frequencies_consistent", rep.frequencies_consistent()},
               {"median_first_flash_time", nan_null(rep.median_first_flash_time)},
               {"mean_fidelity", rep.mean_fidelity},
               {"max_tail_amplitude", rep.max_tail_amplitude},
               {"coherence_at_median", nan_null(rep.coherence_at_median)},
               {"coherence_time_1pct", nan_null(rep.coherence_time_1pct)},
               {"decoherence_precedes_reduction", rep.decoherence_precedes_reduction()}};
  return r;
}

inline ExperimentResult run_gamma(const config::ExperimentConfig& c) {
  const auto gp = gravity_of(c);
  const auto curve = dephasing_curve(c.gamma.d_values, gp, c.params.r_C, c.gamma.quad_tol);
  ExperimentResult r;
  r.table.columns = {"d_m", "gamma", "err_estimate"};
  for (std::size_t i = 0; i < curve.d_values.size(); ++i)
    r.table.add_row({curve.d_values[i], curve.gamma_values[i], curve.quadrature_error_estimates[i]});
  r.summary = {{"r_m", gp.r_m}, {"r_G", gp.r_G}, {"F_kind", to_string(gp.F_kind)}, {"r_C", c.params.r_C}};
  return r;
}

inline ExperimentResult run_energy(const config::ExperimentConfig& c) {
  const auto& e = c.energy;
  const auto base = gravity_of(c);
  RadialWavefunction w;
  w.h = e.r_max / static_cast<double>(e.points - 1);
  for (std::uint64_t i = 0; i < e.points; ++i) {
    const double rr = static_cast<double>(i) * w.h;
    w.psi.emplace_back(std::exp(-rr * rr / (4.0 * e.psi_width * e.psi_width)));
  }
  const double nrm = std::sqrt(radial_norm(w));
  for (auto& v : w.psi) v /= nrm;

  ExperimentResult r;
  r.table.columns = {"r_G", "bare", "gravity", "cross", "total"};
  for (double rg : e.r_G_values) {
    auto gp = base;
    gp.r_G = rg;
    const auto t = energy_after_flash_terms(w, gp, c.params.mass, units_of(c.params));
    r.table.add_row({rg, t.bare, t.gravity, t.cross, t.total()});
  }
  r.summary = {{"r_m", base.r_m}, {"psi_width", e.psi_width}};
  return r;
}

/// Gaussian source of total mass M on a cubic grid; <M(y)> per unit volume
/// in units of m_R, normalized so that its grid sum is exactly M / m_R.
inline ExperimentResult run_potential(const config::ExperimentConfig& c) {
  const auto& q = c.potential;
  const auto gp = gravity_of(c);
  const double m_R = c.params.m_R;
  const auto grid = SpatialGrid::uniform_3d(-q.half_extent, q.half_extent, q.nodes);
  RealVector rho(static_cast<Eigen::Index>(grid.size()));
  double sum = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto y = grid.position(k);
    const double r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    rho(static_cast<Eigen::Index>(k)) = std::exp(-r2 / (2.0 * q.source_width * q.source_width));
    sum += grid.weight(k) * rho(static_cast<Eigen::Index>(k));
  }
  rho *= q.source_mass / m_R / sum;

  ExperimentResult r;
  r.table.columns = {"distance", "potential", "newtonian", "rel_dev", "warning"};
  std::size_t warnings = 0;
  for (double d : q.probe_distances) {
    const auto res = macro_potential(grid, rho, gp, m_R, Point{d, 0.0, 0.0});
    const double newton = -gp.G * q.source_mass / std::abs(d);
    warnings += res.accuracy_warning;
    r.table.add_row({d, res.value, newton, std::abs(res.value - newton) / std::abs(newton),
                     static_cast<std::int64_t>(res.accuracy_warning)});
  }
  r.summary = {{"accuracy_warnings", warnings}, {"source_extent", q.source_width}};
  return r;
}

}  // namespace detail

/// Builds every physical object the experiment needs, without running it, so
/// that invariant violations surface before any work is done.
inline void preflight(const config::ExperimentConfig& c) {
  const auto& e = c.experiment;
  if (c.gravity) (void)detail::gravity_of(c);
  if (c.params.grid) {
    const auto m = detail::model_of(c);
    (void)detail::initial_state(m.grid(), c.params);
  }
  if (e == "born") {
    const auto pointer = PointerModel::standard(c.params.r_C, static_cast<int>(c.born.amplification),
                                                static_cast<int>(c.born.amplitudes.size()));
    (void)pointer.model_params(c.params.lambda_grw, *c.params.dt).validate();
  }
  if (e == "trajectories" || e == "compare") (void)step_count(c.trajectories.t_end, *c.params.dt);
  if (e == "master") (void)step_count(c.master.t_end, *c.params.dt);
}

/// Dispatches a validated configuration. Results depend only on the config
/// and the seed: every random draw comes from RngStream(seed, index).
inline ExperimentResult run_experiment(const config::ExperimentConfig& c, std::uint64_t seed, unsigned threads = 1) {
  const auto& e = c.experiment;
  if (e == "exact") return detail::run_exact(c, seed);
  if (e == "trajectories") return detail::run_trajectories_exp(c, seed, threads);
  if (e == "master") return detail::run_master(c);
  if (e == "compare") return detail::run_compare(c, seed, threads);
  if (e == "born") return detail::run_born(c, seed, threads);
  if (e == "gamma") return detail::run_gamma(c);
  if (e == "energy") return detail::run_energy(c);
  if (e == "potential") return detail::run_potential(c);
  throw ConfigError("experiment: unknown kind '" + e + "'");
}

/// Metadata embedded in the results file. No wall-clock data, so that the
/// file is a pure function of config and seed.
inline io::json results_metadata(const config::ExperimentConfig& c, std::uint64_t seed,
                                 const ExperimentResult& r) {
  return {{"experiment", c.experiment},
          {"seed", seed},
          {"generator", RngStream::kGeneratorName},
          {"version", CPSIM_VERSION},
          {"summary", r.summary},
          {"config", c.echo}};
}

inline std::string render(const config::ExperimentConfig& c, std::uint64_t seed, const ExperimentResult& r) {
  const auto meta = results_metadata(c, seed, r);
  return c.output_format == "json" ? io::to_json(r.table, meta) : io::to_csv(r.table, meta);
}

}  // namespace cpsim
