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
#include <functional>
#include <vector>

#include "cpsim/common.hpp"
#include "cpsim/dynamics.hpp"
#include "cpsim/hilbert.hpp"

namespace cpsim {

/// D_A(rho) = A rho A^dagger - (1/2){A^dagger A, rho}.
inline Matrix dissipator(const Matrix& a, const Matrix& rho) {
  const Matrix ada = a.adjoint() * a;
  return a * rho * a.adjoint() - 0.5 * (ada * rho + rho * ada);
}

/// RK4 integrator of
///   d rho/dt = -(i/hbar)[H, rho] + lambda s sum_k w_k D_{B_k}(rho).
///
/// Diagonal families use the closed form of the dissipator,
/// D(rho)_ij = (G_ij - (K_i + K_j)/2) rho_ij with G_ij = sum_k w_k b_k(i) b_k(j)^*.
class LindbladIntegrator {
public:
  static constexpr double kPositivityTolerance = 1e-8;

  explicit LindbladIntegrator(const ModelParams& params, bool check_positivity = true)
      : params_(params), check_positivity_(check_positivity) {
    params_.validate();
    const auto& fam = *params_.family;
    const double pref = params_.lambda_grw * params_.rate_scale();
    h_over_hbar_ = params_.hamiltonian.matrix() / params_.units.hbar;
    has_h_ = h_over_hbar_.cwiseAbs().maxCoeff() > 0.0;
    const Eigen::Index d = fam.dim();
    if (fam.is_diagonal()) {
      Matrix weighted = fam.diagonals();
      for (std::size_t k = 0; k < fam.size(); ++k)
        weighted.col(static_cast<Eigen::Index>(k)) *= fam.weight(k);
      const Matrix g = pref * (weighted * fam.diagonals().adjoint());
      coef_ = Matrix(d, d);
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
          coef_(i, j) = i == j ? cplx{0.0} : g(i, j) - 0.5 * (g(i, i).real() + g(j, j).real());
    } else {
      for (std::size_t k = 0; k < fam.size(); ++k)
        jumps_.push_back(std::sqrt(pref * fam.weight(k)) * fam.member(k));
    }
  }

  const ModelParams& params() const noexcept { return params_; }

  Matrix generator(const Matrix& rho) const {
    Matrix out = coef_.size() ? Matrix(coef_.cwiseProduct(rho)) : Matrix(Matrix::Zero(rho.rows(), rho.cols()));
    for (const auto& a : jumps_) out += dissipator(a, rho);
    if (has_h_) out += -kI * (h_over_hbar_ * rho - rho * h_over_hbar_);
    return out;
  }

  /// One RK4 step of length params.dt followed by Hermitian symmetrization.
  Matrix step(const Matrix& rho) const {
    const double dt = params_.dt;
    const Matrix k1 = generator(rho);
    const Matrix k2 = generator(rho + 0.5 * dt * k1);
    const Matrix k3 = generator(rho + 0.5 * dt * k2);
    const Matrix k4 = generator(rho + dt * k3);
    Matrix next = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    next = 0.5 * (next + next.adjoint()).eval();
    if (check_positivity_) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(next, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -kPositivityTolerance)
        throw StepSizeError("lindblad_step: smallest eigenvalue " + std::to_string(es.eigenvalues().minCoeff()) +
                            " below -1e-8; reduce dt");
    }
    return next;
  }

  DensityMatrix step(const DensityMatrix& rho) const { return DensityMatrix(step(rho.matrix())); }

  /// Integrate over n whole steps.
  Matrix evolve(Matrix rho, std::size_t steps) const {
    for (std::size_t s = 0; s < steps; ++s) rho = step(rho);
    return rho;
  }

private:
  ModelParams params_;
  bool check_positivity_;
  Matrix h_over_hbar_;
  bool has_h_ = false;
  Matrix coef_;
  std::vector<Matrix> jumps_;
};

inline DensityMatrix lindblad_step(const DensityMatrix& rho, const ModelParams& params) {
  return LindbladIntegrator(params).step(rho);
}

struct EnsembleComparison {
  std::vector<double> times;
  std::vector<double> frobenius_distance;
  std::vector<double> bound;
  double max_distance = 0.0;
  bool within_bound = true;
};

/// Ensemble average of |psi><psi| over n_traj SSE trajectories against the
/// master-equation solution at the checkpoints. Bound is 5/sqrt(n_traj).
inline EnsembleComparison ensemble_vs_master(const StateVector& psi0, const ModelParams& params, double t_end,
                                             std::size_t n_traj, std::uint64_t seed, int checkpoints = 10,
                                             unsigned threads = 1) {
  TrajectoryOptions opt;
  opt.checkpoints = checkpoints;
  opt.threads = threads;
  const auto ensemble = run_trajectories(psi0, params, t_end, n_traj, seed, opt);

  const std::size_t n_steps = step_count(t_end, params.dt);
  const auto cps = checkpoint_steps(n_steps, checkpoints);
  const Eigen::Index d = psi0.dim();
  std::vector<Matrix> mean(cps.size(), Matrix::Zero(d, d));
  for (const auto& tr : ensemble)
    for (std::size_t c = 0; c < cps.size(); ++c) mean[c] += tr.states[c].projector();

  LindbladIntegrator integ(params);
  EnsembleComparison rep;
  const double bound = 5.0 / std::sqrt(static_cast<double>(n_traj));
  Matrix rho = psi0.projector();
  std::size_t at = 0;
  for (std::size_t c = 0; c < cps.size(); ++c) {
    rho = integ.evolve(rho, cps[c] - at);
    at = cps[c];
    const double dist = (mean[c] / static_cast<double>(n_traj) - rho).norm();
    rep.times.push_back(static_cast<double>(cps[c]) * params.dt);
    rep.frobenius_distance.push_back(dist);
    rep.bound.push_back(bound);
    rep.max_distance = std::max(rep.max_distance, dist);
    rep.within_bound = rep.within_bound && dist <= bound;
  }
  return rep;
}

struct DephasingCheck {
  std::vector<double> times;
  std::vector<double> max_rel_deviation;  // per sample time
  double worst = 0.0;
  double diagonal_drift = 0.0;  // max |rho_ii(t) - rho_ii(0)|
};

/// With H = 0 and a diagonal family every off-diagonal entry decays as
/// rho_ij(0) exp(lambda s Gamma_ij t). Integrates the master equation to
/// t_end and compares entries with |rho_ij(0)| > 1e-12 max|rho(0)| against
/// that closed form at `samples` equally spaced times.
inline DephasingCheck dephasing_check(const DensityMatrix& rho0, const ModelParams& params, double t_end,
                                      const std::function<double(Eigen::Index, Eigen::Index)>& gamma_ij,
                                      int samples = 10) {
  require(params.hamiltonian.matrix().cwiseAbs().maxCoeff() == 0.0, "dephasing_check: H must be zero");
  require(params.family->is_diagonal(), "dephasing_check: family must be diagonal");
  const Eigen::Index d = rho0.dim();
  const double rate = params.lambda_grw * params.rate_scale();
  Eigen::MatrixXd gam(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) gam(i, j) = i == j ? 0.0 : gamma_ij(i, j);

  const std::size_t n_steps = step_count(t_end, params.dt);
  const auto cps = checkpoint_steps(n_steps, samples);
  LindbladIntegrator integ(params);
  const Matrix& r0 = rho0.matrix();
  const double floor = 1e-12 * r0.cwiseAbs().maxCoeff();

  DephasingCheck rep;
  Matrix rho = r0;
  std::size_t at = 0;
  for (std::size_t c = 0; c < cps.size(); ++c) {
    rho = integ.evolve(rho, cps[c] - at);
    at = cps[c];
    const double t = static_cast<double>(cps[c]) * params.dt;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      rep.diagonal_drift = std::max(rep.diagonal_drift, std::abs(rho(i, i) - r0(i, i)));
      for (Eigen::Index j = 0; j < d; ++j) {
        if (i == j || std::abs(r0(i, j)) <= floor) continue;
        const cplx expect = r0(i, j) * std::exp(rate * gam(i, j) * t);
        worst = std::max(worst, std::abs(rho(i, j) - expect) / std::abs(expect));
      }
    }
    rep.times.push_back(t);
    rep.max_rel_deviation.push_back(worst);
    rep.worst = std::max(rep.worst, worst);
  }
  return rep;
}

}  // namespace cpsim
