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
#include <vector>

#include "cpsim/dynamics.hpp"
#include "cpsim/exact_cp.hpp"
#include "cpsim/stats.hpp"

namespace cpsim {

struct CoarseGrainOptions {
  double window = 0.0;       // delta t
  double gamma = 0.0;        // coupling, units of hbar^2
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
};

/// Exact collapse-point dynamics over one short window against the
/// first-order (coarse-grained) flash probabilities.
///
/// Collapse points are Poisson-placed with density mu = lambda hbar^2 / (c gamma)
/// so that c gamma mu / hbar^2 = lambda. For a diagonal family and H = 0 every
/// position eigenstate y sees independent thinnings of the placement, so the
/// exact outcome law is a mixture over |psi_y|^2 of Poisson laws with node
/// means (lambda dt / theta^2) w_k sin^2(theta sqrt(s) b_k(y)), theta = sqrt(gamma)/hbar.
struct CoarseGrainReport {
  double gamma = 0.0;
  double mu = 0.0;
  double expected_points = 0.0;
  std::size_t samples = 0;

  std::size_t no_flash = 0;
  std::size_t one_flash = 0;
  std::size_t two_plus = 0;
  std::vector<std::size_t> single_flash_counts;  // by node

  double p_noflash_exact = 0.0;
  double p_noflash_limit = 0.0;        // gamma -> 0 at fixed lambda
  double p_noflash_first_order = 0.0;  // 1 - lambda dt sum_k w_k <L_k^2>
  double p_two_plus_exact = 0.0;
  double first_order_square = 0.0;     // (lambda dt sum_k w_k <L_k^2>)^2
  std::vector<double> p_single_exact;        // by node
  std::vector<double> p_single_first_order;  // lambda dt w_k <L_k^2>

  double bias() const { return std::abs(p_noflash_exact - p_noflash_limit); }
  double noflash_z() const {
    const double se = stats::binomial_se(p_noflash_exact, samples);
    return se > 0.0 ? (static_cast<double>(no_flash) / samples - p_noflash_exact) / se : 0.0;
  }
  /// Largest |count - n p| / sqrt(n p (1 - p)) over nodes with n p >= 5.
  double max_single_flash_z() const {
    double worst = 0.0;
    const double n = static_cast<double>(samples);
    for (std::size_t k = 0; k < p_single_exact.size(); ++k) {
      const double p = p_single_exact[k];
      if (n * p < 5.0) continue;
      worst = std::max(worst, std::abs(static_cast<double>(single_flash_counts[k]) - n * p) /
                                  std::sqrt(n * p * (1.0 - p)));
    }
    return worst;
  }
};

/// Closed-form part of the report (no sampling).
inline CoarseGrainReport coarse_grain_prediction(const ModelParams& params, const StateVector& psi0,
                                                 const CoarseGrainOptions& opt) {
  params.validate();
  const auto& fam = *params.family;
  require(fam.is_diagonal(), "coarse_grain_consistency: family must be diagonal");
  require(params.hamiltonian.matrix().cwiseAbs().maxCoeff() == 0.0, "coarse_grain_consistency: H must be zero");
  require(opt.window > 0.0 && opt.gamma > 0.0, "coarse_grain_consistency: window and gamma must be positive");
  require(params.lambda_grw > 0.0, "coarse_grain_consistency: lambda_grw must be positive");

  const double hbar = params.units.hbar;
  const double theta = std::sqrt(opt.gamma) / hbar;
  const double s = params.rate_scale();
  const double ldt = params.lambda_grw * opt.window;

  CoarseGrainReport rep;
  rep.gamma = opt.gamma;
  rep.mu = params.lambda_grw * hbar * hbar / (params.c_light * opt.gamma);
  rep.expected_points = rep.mu * params.c_light * opt.window * fam.grid().volume();
  rep.samples = opt.samples;
  rep.p_single_exact.assign(fam.size(), 0.0);
  rep.p_single_first_order.assign(fam.size(), 0.0);

  const RealVector prob = psi0.amplitudes().cwiseAbs2();
  double mean_first = 0.0;
  for (Eigen::Index y = 0; y < fam.dim(); ++y) {
    if (prob(y) == 0.0) continue;
    std::vector<double> m(fam.size());
    double total = 0.0, total_limit = 0.0;
    for (std::size_t k = 0; k < fam.size(); ++k) {
      const double b = std::abs(fam.diagonals()(y, static_cast<Eigen::Index>(k)));
      const double sn = std::sin(theta * std::sqrt(s) * b);
      m[k] = ldt / (theta * theta) * fam.weight(k) * sn * sn;
      total += m[k];
      total_limit += ldt * s * fam.weight(k) * b * b;
    }
    const double e = std::exp(-total);
    rep.p_noflash_exact += prob(y) * e;
    rep.p_noflash_limit += prob(y) * std::exp(-total_limit);
    rep.p_two_plus_exact += prob(y) * (1.0 - e - total * e);
    for (std::size_t k = 0; k < fam.size(); ++k) {
      rep.p_single_exact[k] += prob(y) * m[k] * e;
      const double b = std::abs(fam.diagonals()(y, static_cast<Eigen::Index>(k)));
      rep.p_single_first_order[k] += prob(y) * ldt * s * fam.weight(k) * b * b;
    }
    mean_first += prob(y) * total_limit;
  }
  rep.p_noflash_first_order = 1.0 - mean_first;
  rep.first_order_square = mean_first * mean_first;
  return rep;
}

/// Samples the exact dynamics `opt.samples` times (sample i uses stream i).
inline CoarseGrainReport coarse_grain_consistency(const ModelParams& params, const StateVector& psi0,
                                                  const CoarseGrainOptions& opt) {
  auto rep = coarse_grain_prediction(params, psi0, opt);
  const auto& fam = *params.family;
  const double theta = std::sqrt(opt.gamma) / params.units.hbar;
  const double amp = theta * std::sqrt(params.rate_scale());
  const Eigen::Index d = fam.dim();
  Eigen::MatrixXd cs(d, static_cast<Eigen::Index>(fam.size())), sn(d, static_cast<Eigen::Index>(fam.size()));
  for (Eigen::Index k = 0; k < cs.cols(); ++k)
    for (Eigen::Index i = 0; i < d; ++i) {
      const double b = fam.diagonals()(i, k).real();
      cs(i, k) = std::cos(amp * b);
      sn(i, k) = std::sin(amp * b);
    }
  require(fam.diagonals().imag().cwiseAbs().maxCoeff() == 0.0,
          "coarse_grain_consistency: family members must be real");

  rep.single_flash_counts.assign(fam.size(), 0);
  for (std::size_t i = 0; i < opt.samples; ++i) {
    RngStream rng(opt.seed, i);
    const auto placed = place_collapse_points(fam.grid(), 0.0, opt.window, rep.mu, params.c_light, rng);
    Vector psi = psi0.amplitudes();
    std::size_t flashes = 0, node = 0;
    for (const auto& p : placed) {
      const auto k = static_cast<Eigen::Index>(p.node);
      const double p1 = (sn.col(k).cast<cplx>().cwiseProduct(psi)).squaredNorm();
      if (rng.bernoulli(p1)) {
        psi = sn.col(k).cast<cplx>().cwiseProduct(psi);
        ++flashes;
        node = p.node;
      } else {
        psi = cs.col(k).cast<cplx>().cwiseProduct(psi);
      }
      psi.normalize();
    }
    if (flashes == 0) ++rep.no_flash;
    else if (flashes == 1) {
      ++rep.one_flash;
      ++rep.single_flash_counts[node];
    } else ++rep.two_plus;
  }
  return rep;
}

}  // namespace cpsim
