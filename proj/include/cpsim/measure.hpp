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

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <set>
#include <vector>

#include "cpsim/collapse_ops.hpp"
#include "cpsim/dynamics.hpp"
#include "cpsim/lindblad.hpp"
#include "cpsim/stats.hpp"

namespace cpsim {

/// Mesoscopic pointer: one effective particle of mass n_amp m_R on a 1-D
/// grid. Outcome i parks the pointer at centres[i]; region i is the set of
/// grid nodes closer to centres[i] than to any other centre.
class PointerModel {
public:
  PointerModel(int outcome_count, double r_C, double separation, int amplification, double spacing,
               double margin)
      : outcomes_(outcome_count), r_C_(r_C), amplification_(amplification) {
    require(outcome_count >= 2, "PointerModel: need at least two outcomes");
    require(amplification >= 1, "PointerModel: amplification must be at least 1");
    require(r_C > 0.0 && spacing > 0.0 && margin > 0.0, "PointerModel: lengths must be positive");
    require(separation >= 4.0 * r_C, "PointerModel: pointer positions must be at least 4 r_C apart");
    for (int i = 0; i < outcome_count; ++i)
      centres_.push_back((i - 0.5 * (outcome_count - 1)) * separation);
    const double lo = centres_.front() - margin, hi = centres_.back() + margin;
    const auto n = static_cast<std::size_t>(std::llround((hi - lo) / spacing));
    grid_ = SpatialGrid::uniform_1d(lo, hi, n);
    region_.resize(grid_.size());
    for (std::size_t k = 0; k < grid_.size(); ++k) {
      const double x = grid_.position(k)[0];
      int best = 0;
      for (int i = 1; i < outcome_count; ++i)
        if (std::abs(x - centres_[i]) < std::abs(x - centres_[best])) best = i;
      region_[k] = best;
    }
  }

  /// Two outcomes 10 r_C apart on a grid of spacing r_C/4 reaching 5 r_C past each centre.
  static PointerModel standard(double r_C, int amplification, int outcome_count = 2) {
    return PointerModel(outcome_count, r_C, 10.0 * r_C, amplification, 0.25 * r_C, 5.0 * r_C);
  }

  int outcome_count() const noexcept { return outcomes_; }
  int amplification() const noexcept { return amplification_; }
  double r_C() const noexcept { return r_C_; }
  double packet_width() const noexcept { return 0.5 * r_C_; }
  const SpatialGrid& grid() const noexcept { return grid_; }
  const std::vector<double>& centres() const noexcept { return centres_; }
  int region_of(std::size_t node) const { return region_.at(node); }
  std::size_t nodes() const noexcept { return grid_.size(); }
  Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(outcomes_ * grid_.size()); }

  /// Normalized pointer packet centred in region i: |phi|^2 is a gaussian of
  /// standard deviation r_C/2 (with quadrature weights folded in).
  Vector packet(int i) const {
    Vector phi(static_cast<Eigen::Index>(grid_.size()));
    const double sd = packet_width();
    for (std::size_t k = 0; k < grid_.size(); ++k) {
      const double x = grid_.position(k)[0] - centres_.at(i);
      phi(static_cast<Eigen::Index>(k)) = std::sqrt(grid_.weight(k)) * std::exp(-x * x / (4.0 * sd * sd));
    }
    return phi.normalized();
  }

  /// Collapse family on the composite basis (outcome i, node p), index i * nodes + p.
  /// Members act on the pointer coordinate only.
  OperatorFamily collapse_family() const {
    std::vector<Point> pos;
    for (int i = 0; i < outcomes_; ++i)
      for (std::size_t p = 0; p < grid_.size(); ++p) pos.push_back(grid_.position(p));
    return build_grw_family(grid_, std::move(pos), SmearingFunction::gaussian_amplitude(r_C_, 1));
  }

  /// Dynamics parameters in natural units: mass n_amp m_R, H = 0.
  ModelParams model_params(double lambda_grw, double dt) const {
    ModelParams p;
    p.lambda_grw = lambda_grw;
    p.units = Units::natural();
    p.m_ref = 1.0;
    p.mass = static_cast<double>(amplification_);
    p.dt = dt;
    p.family = std::make_shared<OperatorFamily>(collapse_family());
    p.hamiltonian = HermitianOperator::zero(dim());
    return p;
  }

private:
  int outcomes_;
  double r_C_;
  int amplification_;
  std::vector<double> centres_;
  SpatialGrid grid_;
  std::vector<int> region_;
};

/// sum_i c_i |i> (x) |phi_i>. Throws if any packet leaks more than 1e-10 of
/// its weight outside its own region.
inline StateVector premeasure(const std::vector<cplx>& c, const PointerModel& pointer) {
  require(static_cast<int>(c.size()) == pointer.outcome_count(), "premeasure: one amplitude per outcome");
  double norm = 0.0;
  for (const auto& a : c) norm += std::norm(a);
  require(std::abs(norm - 1.0) <= 1e-10, "premeasure: amplitudes must be normalized");
  const auto n = static_cast<Eigen::Index>(pointer.nodes());
  Vector psi = Vector::Zero(pointer.dim());
  for (int i = 0; i < pointer.outcome_count(); ++i) {
    const Vector phi = pointer.packet(i);
    double leak = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      if (pointer.region_of(static_cast<std::size_t>(p)) != i) leak += std::norm(phi(p));
    if (leak > 1e-10) throw ContractViolation("premeasure: pointer packets overlap neighbouring regions");
    psi.segment(i * n, n) = c[static_cast<std::size_t>(i)] * phi;
  }
  return StateVector(psi);
}

/// Weight of psi on system outcome i.
inline double branch_weight(const Vector& psi, const PointerModel& pointer, int i) {
  const auto n = static_cast<Eigen::Index>(pointer.nodes());
  return psi.segment(i * n, n).squaredNorm();
}

struct BornReport {
  static constexpr double kCrossRegionThreshold = 1e-2;
  static constexpr double kConfidence = 0.99;

  std::size_t runs = 0;
  std::vector<double> expected;  // |c_i|^2
  std::vector<std::size_t> counts;  // by region of the first flash
  std::vector<double> frequencies;
  std::vector<stats::Interval> intervals;  // Wilson 99% around each frequency
  std::size_t zero_flash_runs = 0;
  std::size_t cross_region_runs = 0;
  std::vector<double> first_flash_times;  // runs with a flash, in run order
  double median_first_flash_time = std::numeric_limits<double>::quiet_NaN();
  double mean_fidelity = 0.0;   // weight on the flashed branch right after the first flash
  double max_tail_amplitude = 0.0;  // sqrt of the weight left on other branches

  // Decoherence of the master-equation solution: Frobenius norm of the
  // off-diagonal outcome blocks relative to t = 0.
  double coherence_at_median = std::numeric_limits<double>::quiet_NaN();
  double coherence_time_1pct = std::numeric_limits<double>::quiet_NaN();

  double cross_region_fraction() const { return runs ? static_cast<double>(cross_region_runs) / runs : 0.0; }
  bool frequencies_consistent() const {
    for (std::size_t i = 0; i < expected.size(); ++i)
      if (!intervals[i].contains(expected[i])) return false;
    return true;
  }
  bool decoherence_precedes_reduction() const { return coherence_at_median < 0.01; }
};

/// Frobenius norm of the blocks rho_{ij}, i != j.
inline double off_diagonal_block_norm(const Matrix& rho, const PointerModel& pointer) {
  const auto n = static_cast<Eigen::Index>(pointer.nodes());
  double acc = 0.0;
  for (int i = 0; i < pointer.outcome_count(); ++i)
    for (int j = 0; j < pointer.outcome_count(); ++j)
      if (i != j) acc += rho.block(i * n, j * n, n, n).squaredNorm();
  return std::sqrt(acc);
}

/// Coherence ratio of the master-equation solution at time t (a multiple of dt).
inline double coherence_ratio(const StateVector& psi0, const PointerModel& pointer, const ModelParams& params,
                              double t) {
  const Matrix rho0 = psi0.projector();
  const double base = off_diagonal_block_norm(rho0, pointer);
  if (base == 0.0) return 0.0;
  LindbladIntegrator integ(params);
  return off_diagonal_block_norm(integ.evolve(rho0, step_count(t, params.dt)), pointer) / base;
}

/// Runs n_runs SSE trajectories of the pre-measured state and classifies each
/// by the region of its first flash.
inline BornReport born_experiment(const std::vector<cplx>& c, const PointerModel& pointer, double lambda_grw,
                                  double dt, double t_obs, std::size_t n_runs, std::uint64_t seed,
                                  unsigned threads = 1) {
  require(n_runs >= 1, "born_experiment: need at least one run");
  if (static_cast<double>(pointer.amplification()) * lambda_grw * t_obs < 20.0)
    throw ContractViolation("born_experiment: amplification * lambda * t_obs must be at least 20");
  const auto psi0 = premeasure(c, pointer);
  const auto params = pointer.model_params(lambda_grw, dt);

  TrajectoryOptions opt;
  opt.checkpoints = 1;
  opt.store_states = false;
  opt.store_after_first_flash = true;
  opt.threads = threads;
  const auto runs = run_trajectories(psi0, params, t_obs, n_runs, seed, opt);

  const int m = pointer.outcome_count();
  BornReport rep;
  rep.runs = n_runs;
  rep.counts.assign(static_cast<std::size_t>(m), 0);
  for (const auto& a : c) rep.expected.push_back(std::norm(a));
  double fid = 0.0;
  std::size_t flashed = 0;
  for (const auto& tr : runs) {
    if (tr.flashes.empty()) {
      ++rep.zero_flash_runs;
      continue;
    }
    const int first = pointer.region_of(tr.flashes.front().node);
    ++rep.counts[static_cast<std::size_t>(first)];
    rep.first_flash_times.push_back(tr.flashes.front().time);
    std::set<int> hit;
    for (const auto& f : tr.flashes) hit.insert(pointer.region_of(f.node));
    if (hit.size() > 1) ++rep.cross_region_runs;
    const Vector& post = tr.after_first_flash->amplitudes();
    const double w = branch_weight(post, pointer, first);
    fid += w;
    rep.max_tail_amplitude = std::max(rep.max_tail_amplitude, std::sqrt(std::max(0.0, 1.0 - w)));
    ++flashed;
  }
  for (int i = 0; i < m; ++i) {
    const auto k = rep.counts[static_cast<std::size_t>(i)];
    rep.frequencies.push_back(static_cast<double>(k) / static_cast<double>(n_runs));
    rep.intervals.push_back(stats::wilson(k, n_runs, BornReport::kConfidence));
  }
  rep.mean_fidelity = flashed ? fid / static_cast<double>(flashed) : 0.0;

  if (!rep.first_flash_times.empty()) {
    auto times = rep.first_flash_times;
    std::sort(times.begin(), times.end());
    const std::size_t h = times.size() / 2;
    rep.median_first_flash_time = times.size() % 2 ? times[h] : 0.5 * (times[h - 1] + times[h]);

    // Master equation up to the median first-flash time, and onward to the
    // 1% coherence point (bounded by t_obs).
    LindbladIntegrator integ(params);
    const Matrix rho0 = psi0.projector();
    const double base = off_diagonal_block_norm(rho0, pointer);
    if (base > 0.0) {
      const auto median_step = static_cast<std::size_t>(std::llround(rep.median_first_flash_time / dt));
      const std::size_t max_step = step_count(t_obs, dt);
      Matrix rho = rho0;
      if (median_step == 0) rep.coherence_at_median = 1.0;
      for (std::size_t s = 1; s <= max_step; ++s) {
        rho = integ.step(rho);
        const double ratio = off_diagonal_block_norm(rho, pointer) / base;
        if (s == median_step) rep.coherence_at_median = ratio;
        if (ratio < 0.01 && std::isnan(rep.coherence_time_1pct)) rep.coherence_time_1pct = static_cast<double>(s) * dt;
        if (s >= median_step && !std::isnan(rep.coherence_time_1pct)) break;
      }
    }
  }
  return rep;
}

}  // namespace cpsim
