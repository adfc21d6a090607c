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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <thread>
#include <vector>

#include "cpsim/collapse_ops.hpp"
#include "cpsim/common.hpp"
#include "cpsim/hilbert.hpp"
#include "cpsim/rng.hpp"

namespace cpsim {

/// Parameters of the coarse-grained dynamics.
///
/// lambda_grw is the collapse rate c gamma mu / hbar^2. Position-space
/// families (grw_position, gravity_dressed) carry no mass factor, so the
/// rate is multiplied by mass / m_ref; mass-operator families already
/// include it.
struct ModelParams {
  /// Upper bound on dt times the total flash rate.
  static constexpr double kMaxStepFlashProbability = 0.05;

  double lambda_grw = 0.0;  // 1/s
  Units units = Units::si();
  double c_light = constants::c_light;
  double mass = constants::nucleon_mass;
  double m_ref = constants::nucleon_mass;
  double dt = 0.0;
  HermitianOperator hamiltonian;
  std::shared_ptr<const OperatorFamily> family;

  const SpatialGrid& grid() const { return family->grid(); }

  double rate_scale() const {
    switch (family->kind()) {
      case FamilyKind::grw_position:
      case FamilyKind::gravity_dressed: return mass / m_ref;
      case FamilyKind::sqrt_smeared_mass:
      case FamilyKind::smeared_number: return 1.0;
    }
    return 1.0;
  }

  void validate() const {
    require(family != nullptr, "ModelParams: collapse family missing");
    require(lambda_grw >= 0.0, "ModelParams: lambda_grw must be non-negative");
    require(dt > 0.0, "ModelParams: dt must be positive");
    require(units.hbar > 0.0, "ModelParams: hbar must be positive");
    require(mass > 0.0 && m_ref > 0.0, "ModelParams: masses must be positive");
    require(hamiltonian.dim() == family->dim(), "ModelParams: Hamiltonian and family dimensions differ");
  }
};

/// Flash rate per grid node: lambda * scale * w_k * <B_k^dagger B_k>.
inline std::vector<double> flash_rate_density(const StateVector& psi, const ModelParams& params) {
  params.validate();
  const auto& fam = *params.family;
  require(psi.dim() == fam.dim(), "flash_rate_density: dimension mismatch");
  const double pref = params.lambda_grw * params.rate_scale();
  std::vector<double> rates(fam.size(), 0.0);
  if (pref == 0.0) return rates;
  if (fam.is_diagonal()) {
    const RealVector prob = psi.amplitudes().cwiseAbs2();
    const RealVector expect = fam.diagonals().cwiseAbs2().transpose() * prob;
    for (std::size_t k = 0; k < fam.size(); ++k) rates[k] = pref * fam.weight(k) * expect(static_cast<Eigen::Index>(k));
  } else {
    for (std::size_t k = 0; k < fam.size(); ++k)
      rates[k] = pref * fam.weight(k) * (fam.member(k) * psi.amplitudes()).squaredNorm();
  }
  return rates;
}

/// A flash: outcome 1 at a collapse site.
struct FlashEvent {
  double time = 0.0;
  std::size_t node = 0;
  Point position{};
  std::uint8_t outcome = 1;
};

/// Poisson-jump stochastic Schrodinger integrator with cached operators.
///
/// One step of length dt is a Strang split: half a Hamiltonian step, then
/// either a jump psi -> B_k psi / |B_k psi| (probability dt * total rate, node
/// chosen proportional to its rate) or the no-flash drift
/// psi -> [1 + (dt/2) lambda s (<K> - K)] psi with K = sum_k w_k B_k^dagger B_k,
/// then the other Hamiltonian half step. The state is renormalized
/// explicitly. The -i phase of the jump is a global phase and is not stored.
class SseIntegrator {
public:
  explicit SseIntegrator(const ModelParams& params) : params_(params), prop_(params.hamiltonian, params.units) {
    params_.validate();
    const auto& fam = *params_.family;
    pref_ = params_.lambda_grw * params_.rate_scale();
    if (!prop_.is_trivial()) half_step_ = prop_.unitary(0.5 * params_.dt);
    if (fam.is_diagonal()) {
      abs2_ = fam.diagonals().cwiseAbs2();
      k_diag_ = RealVector::Zero(fam.dim());
      for (std::size_t k = 0; k < fam.size(); ++k)
        k_diag_ += fam.weight(k) * abs2_.col(static_cast<Eigen::Index>(k));
    } else {
      k_dense_ = fam.weighted_square_sum();
    }
  }

  const ModelParams& params() const noexcept { return params_; }

  /// Total flash rate sum_k rate_k for the state psi.
  double total_rate(const Vector& psi) const {
    if (params_.family->is_diagonal()) return pref_ * psi.cwiseAbs2().dot(k_diag_);
    return pref_ * psi.dot(k_dense_ * psi).real();
  }

  /// Advance psi by one dt starting at time t. Returns the flash, if any.
  std::optional<FlashEvent> step(Vector& psi, RngStream& rng, double t) const {
    const auto& fam = *params_.family;
    const double dt = params_.dt;
    if (!prop_.is_trivial()) psi = half_step_ * psi;

    const double rate = total_rate(psi);
    if (rate * dt >= ModelParams::kMaxStepFlashProbability)
      throw StepSizeError("sse_step: dt * total flash rate = " + std::to_string(rate * dt) +
                          " exceeds " + std::to_string(ModelParams::kMaxStepFlashProbability));

    std::optional<FlashEvent> flash;
    const double u = rng.uniform();
    if (u < rate * dt) {
      std::vector<double> rates(fam.size());
      if (fam.is_diagonal()) {
        const RealVector expect = abs2_.transpose() * psi.cwiseAbs2();
        for (std::size_t k = 0; k < fam.size(); ++k)
          rates[k] = fam.weight(k) * expect(static_cast<Eigen::Index>(k));
      } else {
        for (std::size_t k = 0; k < fam.size(); ++k)
          rates[k] = fam.weight(k) * (fam.member(k) * psi).squaredNorm();
      }
      double sum = 0.0;
      for (double r : rates) sum += r;
      const std::size_t k = rng.categorical(rates, sum);
      if (!(rates[k] > 0.0)) throw ContractViolation("sse_step: selected a node with zero flash rate");
      if (fam.is_diagonal())
        psi = fam.diagonals().col(static_cast<Eigen::Index>(k)).cwiseProduct(psi);
      else
        psi = fam.member(k) * psi;
      flash = FlashEvent{t + dt, k, fam.grid().position(k), 1};
    } else {
      const double mean = rate / pref_or_one();
      const double c = 0.5 * dt * pref_;
      if (c != 0.0) {
        if (fam.is_diagonal())
          psi += c * (mean * psi - k_diag_.cast<cplx>().cwiseProduct(psi));
        else
          psi += c * (mean * psi - k_dense_ * psi);
      }
    }
    psi.normalize();
    if (!prop_.is_trivial()) psi = half_step_ * psi;
    psi.normalize();
    return flash;
  }

private:
  double pref_or_one() const { return pref_ == 0.0 ? 1.0 : pref_; }

  ModelParams params_;
  HermitianPropagator prop_;
  Matrix half_step_;
  double pref_ = 0.0;
  RealVector k_diag_;
  Eigen::MatrixXd abs2_;
  Matrix k_dense_;
};

/// One SSE step; convenience wrapper that builds the integrator each call.
inline std::pair<StateVector, std::optional<FlashEvent>> sse_step(const StateVector& psi, const ModelParams& params,
                                                                  RngStream& rng, double t = 0.0) {
  SseIntegrator integ(params);
  Vector v = psi.amplitudes();
  auto flash = integ.step(v, rng, t);
  return {StateVector(std::move(v)), flash};
}

struct Trajectory {
  std::vector<double> times;        // checkpoint times
  std::vector<StateVector> states;  // state at each checkpoint (if stored)
  std::vector<FlashEvent> flashes;
  std::optional<StateVector> after_first_flash;
};

struct TrajectoryOptions {
  int checkpoints = 10;  // equally spaced snapshots after t = 0 (t = 0 is also stored)
  bool store_states = true;
  bool store_after_first_flash = false;
  unsigned threads = 1;
};

inline std::size_t step_count(double t_end, double dt) {
  require(t_end >= 0.0, "trajectory: t_end must be non-negative");
  const double n = t_end / dt;
  const auto rounded = static_cast<std::size_t>(std::llround(n));
  if (std::abs(n - static_cast<double>(rounded)) > 1e-9 * std::max(1.0, n))
    throw ContractViolation("trajectory: t_end must be an integer multiple of dt");
  return rounded;
}

/// Step indices of the checkpoints 0, n/c, 2n/c, ..., n.
inline std::vector<std::size_t> checkpoint_steps(std::size_t n_steps, int checkpoints) {
  require(checkpoints >= 1, "trajectory: need at least one checkpoint");
  std::vector<std::size_t> out;
  for (int i = 0; i <= checkpoints; ++i)
    out.push_back(n_steps * static_cast<std::size_t>(i) / static_cast<std::size_t>(checkpoints));
  return out;
}

inline Trajectory run_single_trajectory(const StateVector& psi0, const SseIntegrator& integ, double t_end,
                                        RngStream& rng, const TrajectoryOptions& opt) {
  const double dt = integ.params().dt;
  const std::size_t n_steps = step_count(t_end, dt);
  const auto cps = checkpoint_steps(n_steps, opt.checkpoints);
  Trajectory tr;
  Vector psi = psi0.amplitudes();
  std::size_t next_cp = 0;
  auto snapshot = [&](std::size_t step) {
    while (next_cp < cps.size() && cps[next_cp] == step) {
      tr.times.push_back(static_cast<double>(step) * dt);
      if (opt.store_states) tr.states.emplace_back(psi);
      ++next_cp;
    }
  };
  snapshot(0);
  for (std::size_t s = 0; s < n_steps; ++s) {
    auto flash = integ.step(psi, rng, static_cast<double>(s) * dt);
    if (flash) {
      if (opt.store_after_first_flash && tr.flashes.empty()) tr.after_first_flash = StateVector(psi);
      tr.flashes.push_back(*flash);
    }
    snapshot(s + 1);
  }
  return tr;
}

/// n_traj independent trajectories; trajectory i draws from RngStream(seed, i)
/// so the ensemble is identical for any thread count.
inline std::vector<Trajectory> run_trajectories(const StateVector& psi0, const ModelParams& params, double t_end,
                                                std::size_t n_traj, std::uint64_t seed,
                                                const TrajectoryOptions& opt = {}) {
  require(n_traj >= 1, "run_trajectories: need at least one trajectory");
  SseIntegrator integ(params);
  std::vector<Trajectory> out(n_traj);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    try {
      for (std::size_t i = next++; i < n_traj && !failed; i = next++) {
        RngStream rng(seed, i);
        out[i] = run_single_trajectory(psi0, integ, t_end, rng, opt);
      }
    } catch (...) {
      if (!failed.exchange(true)) failure = std::current_exception();
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(n_traj)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace cpsim
