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
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cpsim/collapse_ops.hpp"
#include "cpsim/common.hpp"
#include "cpsim/grid.hpp"
#include "cpsim/hilbert.hpp"
#include "cpsim/rng.hpp"

namespace cpsim {

/// A collapse point: an ancilla qubit at a fixed spacetime location coupled
/// to the system through U = exp(-i sqrt(gamma) L sigma_x / hbar).
struct CollapsePoint {
  std::size_t node = 0;
  double time = 0.0;
  double gamma = 0.0;  // units of hbar^2
  HermitianOperator op;
};

/// cos(sqrt(gamma) L / hbar) and sin(sqrt(gamma) L / hbar): the two blocks of
/// the collapse-point unitary in the ancilla basis.
struct CouplingBlocks {
  Matrix cos_part;
  Matrix sin_part;

  static CouplingBlocks from(const HermitianOperator& op, double gamma, Units units) {
    require(gamma >= 0.0, "CollapsePoint: gamma must be non-negative");
    const double theta = std::sqrt(gamma) / units.hbar;
    const Matrix& l = op.matrix();
    if (is_diagonal(l)) {
      const Eigen::Index n = l.rows();
      Vector c(n), s(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        c(i) = std::cos(theta * l(i, i).real());
        s(i) = std::sin(theta * l(i, i).real());
      }
      return {c.asDiagonal().toDenseMatrix(), s.asDiagonal().toDenseMatrix()};
    }
    return {hermitian_function(l, [&](double v) { return std::cos(theta * v); }),
            hermitian_function(l, [&](double v) { return std::sin(theta * v); })};
  }
};

struct InteractionOutcome {
  double p_flash = 0.0;
  std::optional<StateVector> state_flash;    // absent when p_flash == 0
  std::optional<StateVector> state_noflash;  // absent when p_flash == 1
};

inline InteractionOutcome interact_once(const StateVector& psi, const CouplingBlocks& blocks) {
  require(blocks.cos_part.rows() == psi.dim(), "interact_once: dimension mismatch");
  const Vector stay = blocks.cos_part * psi.amplitudes();
  const Vector flip = -kI * (blocks.sin_part * psi.amplitudes());
  InteractionOutcome out;
  const double p1 = flip.squaredNorm(), p0 = stay.squaredNorm();
  out.p_flash = p1 / (p0 + p1);
  if (p1 > 0.0) out.state_flash = StateVector::normalized(flip);
  if (p0 > 0.0) out.state_noflash = StateVector::normalized(stay);
  return out;
}

/// One interaction with a fresh ancilla followed by projection of the ancilla.
inline InteractionOutcome interact_once(const StateVector& psi, const CollapsePoint& cp,
                                        Units units = Units::si()) {
  return interact_once(psi, CouplingBlocks::from(cp.op, cp.gamma, units));
}

/// Outcome sequence xi_1..xi_n with its probability and the conditional state.
struct FlashRecord {
  std::vector<std::uint8_t> outcomes;
  double probability = 0.0;
  std::optional<StateVector> conditional_state;  // absent for probability 0
};

namespace detail {

inline void check_chain(const std::vector<CollapsePoint>& chain, Eigen::Index dim, double t0) {
  double last = t0;
  for (const auto& cp : chain) {
    require(cp.op.dim() == dim, "collapse chain: operator dimension mismatch");
    if (cp.time < last) throw ContractViolation("collapse chain: times must be non-decreasing");
    last = cp.time;
  }
}

}  // namespace detail

/// All 2^n outcome records of a chain, computed on the joint state of system
/// and n ancillas. Column index of the joint amplitude matrix is the outcome
/// word with the first collapse point as its most significant bit; record i
/// has that word equal to i.
inline std::vector<FlashRecord> enumerate_chain(const StateVector& psi0, const std::vector<CollapsePoint>& chain,
                                                const HermitianOperator& h, Units units = Units::si(),
                                                double t0 = 0.0) {
  const std::size_t n = chain.size();
  require(n <= 12, "enumerate_chain: at most 12 collapse points");
  require(h.dim() == psi0.dim(), "enumerate_chain: Hamiltonian dimension mismatch");
  detail::check_chain(chain, psi0.dim(), t0);

  const Eigen::Index cols = Eigen::Index{1} << n;
  Matrix joint = Matrix::Zero(psi0.dim(), cols);
  joint.col(0) = psi0.amplitudes();

  HermitianPropagator prop(h, units);
  double t = t0;
  for (std::size_t m = 0; m < n; ++m) {
    const auto& cp = chain[m];
    if (cp.time > t && !prop.is_trivial()) joint = prop.unitary(cp.time - t) * joint;
    t = cp.time;
    const auto blocks = CouplingBlocks::from(cp.op, cp.gamma, units);
    const Eigen::Index bit = Eigen::Index{1} << (n - 1 - m);
    for (Eigen::Index c0 = 0; c0 < cols; ++c0) {
      if (c0 & bit) continue;
      const Vector a0 = joint.col(c0), a1 = joint.col(c0 | bit);
      joint.col(c0) = blocks.cos_part * a0 - kI * (blocks.sin_part * a1);
      joint.col(c0 | bit) = -kI * (blocks.sin_part * a0) + blocks.cos_part * a1;
    }
  }

  std::vector<FlashRecord> records(static_cast<std::size_t>(cols));
  for (Eigen::Index c = 0; c < cols; ++c) {
    auto& rec = records[static_cast<std::size_t>(c)];
    rec.outcomes.resize(n);
    for (std::size_t m = 0; m < n; ++m) rec.outcomes[m] = (c >> (n - 1 - m)) & 1;
    rec.probability = joint.col(c).squaredNorm();
    if (rec.probability > 0.0) rec.conditional_state = StateVector::normalized(joint.col(c));
  }
  return records;
}

/// Sequential sampling: Hamiltonian evolution to each collapse point, then a
/// Bernoulli draw from the conditional flash probability. The ancilla is
/// discarded right after its measurement.
inline FlashRecord sample_chain(const StateVector& psi0, const std::vector<CollapsePoint>& chain,
                                const HermitianOperator& h, RngStream& rng, Units units = Units::si(),
                                double t0 = 0.0) {
  require(h.dim() == psi0.dim(), "sample_chain: Hamiltonian dimension mismatch");
  detail::check_chain(chain, psi0.dim(), t0);
  HermitianPropagator prop(h, units);
  FlashRecord rec;
  rec.outcomes.reserve(chain.size());
  rec.probability = 1.0;
  StateVector psi = psi0;
  double t = t0;
  for (const auto& cp : chain) {
    if (cp.time > t && !prop.is_trivial())
      psi = StateVector::normalized(prop.apply(psi.amplitudes(), cp.time - t));
    t = cp.time;
    auto out = interact_once(psi, cp, units);
    const bool flash = rng.bernoulli(out.p_flash);
    rec.outcomes.push_back(flash ? 1 : 0);
    rec.probability *= flash ? out.p_flash : 1.0 - out.p_flash;
    psi = flash ? *out.state_flash : *out.state_noflash;
  }
  rec.conditional_state = psi;
  return rec;
}

/// Flash probability of every collapse point computed two ways: marginals of
/// the joint distribution from enumerate_chain, and the single-point rule
/// applied to the reduced system state obtained by partial-tracing each
/// ancilla after its interaction. Returns the largest absolute deviation.
inline double markov_check(const StateVector& psi0, const std::vector<CollapsePoint>& chain,
                           const HermitianOperator& h, Units units = Units::si(), double t0 = 0.0) {
  const std::size_t n = chain.size();
  require(n <= 10, "markov_check: at most 10 collapse points");
  const auto records = enumerate_chain(psi0, chain, h, units, t0);

  std::vector<double> marginal(n, 0.0);
  for (const auto& rec : records)
    for (std::size_t m = 0; m < n; ++m)
      if (rec.outcomes[m]) marginal[m] += rec.probability;

  const Eigen::Index d = psi0.dim();
  const std::array<std::size_t, 2> dims{static_cast<std::size_t>(d), 2};
  const std::array<std::size_t, 1> keep_system{0};
  Matrix sigma_x(2, 2);
  sigma_x << 0, 1, 1, 0;
  Matrix ancilla0 = Matrix::Zero(2, 2), proj1 = Matrix::Zero(2, 2);
  ancilla0(0, 0) = 1.0;
  proj1(1, 1) = 1.0;

  HermitianPropagator prop(h, units);
  Matrix rho = psi0.projector();
  double t = t0, worst = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    const auto& cp = chain[m];
    if (cp.time > t && !prop.is_trivial()) {
      const Matrix u = prop.unitary(cp.time - t);
      rho = u * rho * u.adjoint();
    }
    t = cp.time;
    const auto blocks = CouplingBlocks::from(cp.op, cp.gamma, units);
    // exp(-i theta L sigma_x) = cos(theta L) x I - i sin(theta L) x sigma_x
    const Matrix u_cp = kron(blocks.cos_part, Matrix::Identity(2, 2)) - kI * kron(blocks.sin_part, sigma_x);
    const Matrix joint = u_cp * kron(rho, ancilla0) * u_cp.adjoint();
    const double p1 = (joint * kron(Matrix::Identity(d, d), proj1)).trace().real();
    worst = std::max(worst, std::abs(p1 - marginal[m]));
    rho = partial_trace(joint, dims, keep_system);
  }
  return worst;
}

/// Collapse point placed by the homogeneous spacetime Poisson process.
struct PlacedPoint {
  double time = 0.0;
  Point position{};
  std::size_t node = 0;  // grid cell containing the position
};

/// Homogeneous Poisson process of density mu (per unit of c * time * volume)
/// in [t0, t1] x box(grid). Arrivals come from exponential inter-arrival
/// spacetime volumes; positions are uniform in the box and snapped to the
/// grid cell that contains them. Sorted by time.
inline std::vector<PlacedPoint> place_collapse_points(const SpatialGrid& grid, double t0, double t1, double mu,
                                                      double c_light, RngStream& rng) {
  require(t1 >= t0, "place_collapse_points: empty time window");
  require(mu >= 0.0 && c_light > 0.0, "place_collapse_points: density and c must be non-negative/positive");
  std::vector<PlacedPoint> out;
  if (mu == 0.0) return out;
  const double rate = mu * c_light * grid.volume();  // points per unit time
  double t = t0;
  while (true) {
    t += rng.exponential(rate);
    if (t > t1) break;
    PlacedPoint p;
    p.time = t;
    for (int a = 0; a < grid.dimension(); ++a)
      p.position[a] = grid.lower(a) + (grid.upper(a) - grid.lower(a)) * rng.uniform();
    p.node = grid.cell_of(p.position);
    out.push_back(p);
  }
  return out;
}

/// Attach collapse operators to placed points: member(node) of `family`
/// scaled by sqrt(mass_ratio).
inline std::vector<CollapsePoint> make_chain(const std::vector<PlacedPoint>& placed, const OperatorFamily& family,
                                             double gamma, double mass_ratio = 1.0) {
  std::vector<CollapsePoint> chain;
  chain.reserve(placed.size());
  const double scale = std::sqrt(mass_ratio);
  for (const auto& p : placed)
    chain.push_back({p.node, p.time, gamma, HermitianOperator(scale * family.member(p.node))});
  return chain;
}

}  // namespace cpsim
