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
#include <optional>
#include <string>
#include <vector>

#include "cpsim/common.hpp"
#include "cpsim/fock.hpp"
#include "cpsim/grid.hpp"
#include "cpsim/hilbert.hpp"

namespace cpsim {

/// Radial smearing profile used for collapse (f_C, g) and gravity (f_G).
struct SmearingFunction {
  enum class Kind { gaussian, delta };
  enum class Normalization {
    amplitude,  // integral of f^2 is 1
    density     // integral of f is 1
  };

  Kind kind = Kind::gaussian;
  double radius = constants::grw_collapse_radius;
  Normalization normalization = Normalization::amplitude;
  int dimension = 1;

  static SmearingFunction gaussian_amplitude(double r, int dim = 1) {
    return {Kind::gaussian, r, Normalization::amplitude, dim};
  }
  static SmearingFunction gaussian_density(double r, int dim = 1) {
    return {Kind::gaussian, r, Normalization::density, dim};
  }
  static SmearingFunction delta(int dim = 1) { return {Kind::delta, 0.0, Normalization::density, dim}; }

  /// Profile value at distance r from the centre (gaussian kind only).
  ///   amplitude: (pi R^2)^(-D/4) exp(-r^2 / (2 R^2))
  ///   density:   (pi R^2)^(-D/2) exp(-r^2 / R^2)
  double operator()(double r) const {
    require(kind == Kind::gaussian, "SmearingFunction: delta has no pointwise value");
    const double d = static_cast<double>(dimension);
    const double r2 = r * r, R2 = radius * radius;
    if (normalization == Normalization::amplitude)
      return std::pow(kPi * R2, -d / 4.0) * std::exp(-r2 / (2.0 * R2));
    return std::pow(kPi * R2, -d / 2.0) * std::exp(-r2 / R2);
  }
};

/// Value of the smearing g(y - x) as seen by a lattice at site `site`,
/// evaluated for centre x. The delta kind becomes a Kronecker delta on the
/// site nearest to x divided by that site's cell volume.
inline double lattice_kernel(const SmearingFunction& g, const SpatialGrid& lattice, std::size_t site,
                             const Point& x) {
  if (g.kind == SmearingFunction::Kind::gaussian) return g(distance(lattice.position(site), x));
  return lattice.nearest(x) == site ? 1.0 / lattice.weight(site) : 0.0;
}

/// smeared_number families hold N(x) itself (not its square root); they are
/// building blocks, not collapse families.
enum class FamilyKind { grw_position, sqrt_smeared_mass, gravity_dressed, smeared_number };

inline const char* to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::grw_position: return "grw_position";
    case FamilyKind::sqrt_smeared_mass: return "sqrt_smeared_mass";
    case FamilyKind::gravity_dressed: return "gravity_dressed";
    case FamilyKind::smeared_number: return "smeared_number";
  }
  return "?";
}

/// Indexed family {L(x_k)} of collapse operators, one per node of `grid`.
///
/// Families whose members are all diagonal in the system basis (every family
/// built here) store them as columns of a dim x nodes matrix; others keep
/// dense members. Position-basis families remember the basis positions and
/// Fock families the basis, which the gravity dressing needs.
class OperatorFamily {
public:
  OperatorFamily(FamilyKind kind, SpatialGrid grid, Matrix diagonals)
      : kind_(kind), grid_(std::move(grid)), diag_(std::move(diagonals)), diagonal_(true) {
    require(static_cast<std::size_t>(diag_.cols()) == grid_.size(),
            "OperatorFamily: one member per grid node required");
    detail::check_dimension(diag_.rows(), "OperatorFamily");
  }

  OperatorFamily(FamilyKind kind, SpatialGrid grid, std::vector<Matrix> members)
      : kind_(kind), grid_(std::move(grid)), dense_(std::move(members)), diagonal_(false) {
    require(dense_.size() == grid_.size(), "OperatorFamily: one member per grid node required");
    require(!dense_.empty(), "OperatorFamily: empty family");
    for (const auto& m : dense_)
      require(m.rows() == m.cols() && m.rows() == dense_.front().rows(),
              "OperatorFamily: members must be square and equally sized");
    detail::check_dimension(dense_.front().rows(), "OperatorFamily");
  }

  FamilyKind kind() const noexcept { return kind_; }
  const SpatialGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return grid_.size(); }
  Eigen::Index dim() const noexcept { return diagonal_ ? diag_.rows() : dense_.front().rows(); }
  double weight(std::size_t k) const { return grid_.weight(k); }
  bool is_diagonal() const noexcept { return diagonal_; }

  /// dim x nodes matrix of member diagonals (diagonal families only).
  const Matrix& diagonals() const {
    require(diagonal_, "OperatorFamily: family is not diagonal");
    return diag_;
  }

  Matrix member(std::size_t k) const {
    if (diagonal_) return diag_.col(static_cast<Eigen::Index>(k)).asDiagonal().toDenseMatrix();
    return dense_.at(k);
  }

  /// B(x_k)^dagger B(x_k), the operator whose expectation sets the flash rate.
  Matrix square(std::size_t k) const {
    if (diagonal_)
      return diag_.col(static_cast<Eigen::Index>(k)).cwiseAbs2().cast<cplx>().asDiagonal().toDenseMatrix();
    return dense_.at(k).adjoint() * dense_.at(k);
  }

  /// Sum over nodes of w_k B_k^dagger B_k.
  Matrix weighted_square_sum() const {
    const Eigen::Index n = dim();
    if (diagonal_) {
      RealVector acc = RealVector::Zero(n);
      for (std::size_t k = 0; k < size(); ++k)
        acc += weight(k) * diag_.col(static_cast<Eigen::Index>(k)).cwiseAbs2();
      return acc.cast<cplx>().asDiagonal().toDenseMatrix();
    }
    Matrix acc = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < size(); ++k) acc += weight(k) * square(k);
    return acc;
  }

  const std::vector<Point>& basis_positions() const noexcept { return basis_positions_; }
  void set_basis_positions(std::vector<Point> p) {
    require(p.empty() || static_cast<Eigen::Index>(p.size()) == dim(),
            "OperatorFamily: basis position count must equal dimension");
    basis_positions_ = std::move(p);
  }

  const std::optional<FockBasis>& fock_basis() const noexcept { return fock_; }
  void set_fock_basis(FockBasis b) {
    require(static_cast<Eigen::Index>(b.dim()) == dim(), "OperatorFamily: Fock basis dimension mismatch");
    fock_ = std::move(b);
  }

private:
  FamilyKind kind_;
  SpatialGrid grid_;
  Matrix diag_;
  std::vector<Matrix> dense_;
  bool diagonal_;
  std::vector<Point> basis_positions_;
  std::optional<FockBasis> fock_;
};

/// GRW family on an explicit set of basis positions: member k is the diagonal
/// operator f_C(|x - x_k|) in the position basis. The collapse grid may be
/// larger than (or unrelated to) the set of basis positions. The mass factor
/// sqrt(m / m_R) is applied by the dynamics, not here.
inline OperatorFamily build_grw_family(const SpatialGrid& collapse_grid, std::vector<Point> basis_positions,
                                       const SmearingFunction& f_c) {
  require(f_c.kind == SmearingFunction::Kind::gaussian &&
              f_c.normalization == SmearingFunction::Normalization::amplitude,
          "build_grw_family: f_C must be an amplitude-normalized gaussian");
  require(f_c.dimension == collapse_grid.dimension(),
          "build_grw_family: f_C dimension differs from grid dimension");
  if (collapse_grid.size() > 1 && f_c.radius < 2.0 * collapse_grid.max_spacing())
    throw DomainError("build_grw_family: collapse radius below two grid spacings (undersampled smearing)");
  const auto dim = static_cast<Eigen::Index>(basis_positions.size());
  detail::check_dimension(dim, "build_grw_family");
  Matrix diag(dim, static_cast<Eigen::Index>(collapse_grid.size()));
  for (std::size_t k = 0; k < collapse_grid.size(); ++k)
    for (Eigen::Index i = 0; i < dim; ++i)
      diag(i, static_cast<Eigen::Index>(k)) = f_c(distance(basis_positions[i], collapse_grid.position(k)));
  OperatorFamily fam(FamilyKind::grw_position, collapse_grid, std::move(diag));
  fam.set_basis_positions(std::move(basis_positions));
  return fam;
}

/// GRW family whose system basis is the grid itself (single particle on the grid).
inline OperatorFamily build_grw_family(const SpatialGrid& grid, const SmearingFunction& f_c) {
  std::vector<Point> pos(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) pos[k] = grid.position(k);
  return build_grw_family(grid, std::move(pos), f_c);
}

/// Second-quantized smeared number operator N_i(x) = sum_s g(y_s - x) a_s^dagger a_s,
/// assembled from the ladder operators of `basis`.
inline SparseMatrix smeared_number_operator(const FockBasis& basis, const Point& x,
                                            const SmearingFunction& g, std::size_t species) {
  SparseMatrix n(basis.dim(), basis.dim());
  for (std::size_t s = 0; s < basis.sites(); ++s) {
    const double w = lattice_kernel(g, basis.lattice(), s, x);
    if (w == 0.0) continue;
    const auto mode = basis.mode(species, s);
    const SparseMatrix a = basis.annihilation(mode);
    n += w * SparseMatrix(a.adjoint() * a);
  }
  return n;
}

namespace detail {

inline void require_density(const SmearingFunction& g, const char* who) {
  require(g.kind == SmearingFunction::Kind::delta ||
              g.normalization == SmearingFunction::Normalization::density,
          std::string(who) + ": g must be density-normalized");
}

// Diagonal of sum_s g(y_s - x) n_{species,s} over every basis state.
inline RealVector smeared_number_diagonal(const FockBasis& basis, const Point& x,
                                          const SmearingFunction& g, std::size_t species) {
  RealVector d = RealVector::Zero(static_cast<Eigen::Index>(basis.dim()));
  for (std::size_t s = 0; s < basis.sites(); ++s) {
    const double w = lattice_kernel(g, basis.lattice(), s, x);
    if (w != 0.0) d += w * basis.number_diagonal(basis.mode(species, s));
  }
  return d;
}

}  // namespace detail

/// Family of smeared number operators N_species(x_k), one per grid node.
inline OperatorFamily build_smeared_number(const FockBasis& basis, const SpatialGrid& grid,
                                           const SmearingFunction& g, const std::string& species) {
  detail::require_density(g, "build_smeared_number");
  const std::size_t sp = basis.species_index(species);
  Matrix diag(static_cast<Eigen::Index>(basis.dim()), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k)
    diag.col(static_cast<Eigen::Index>(k)) =
        detail::smeared_number_diagonal(basis, grid.position(k), g, sp).cast<cplx>();
  OperatorFamily fam(FamilyKind::smeared_number, grid, std::move(diag));
  fam.set_fock_basis(basis);
  return fam;
}

/// Smeared mass operators M(x_k) = sum_i (m_i / m_R) N_i(x_k) as a dim x nodes
/// matrix of (real, non-negative) diagonals.
inline RealVector smeared_mass_diagonal(const FockBasis& basis, const Point& x, const SmearingFunction& g,
                                        double m_ref) {
  RealVector m = RealVector::Zero(static_cast<Eigen::Index>(basis.dim()));
  for (std::size_t i = 0; i < basis.species().size(); ++i)
    m += (basis.species()[i].mass / m_ref) * detail::smeared_number_diagonal(basis, x, g, i);
  return m;
}

/// Collapse family L(x_k) = sqrt(M(x_k)).
inline OperatorFamily build_smeared_mass(const FockBasis& basis, const SpatialGrid& grid,
                                         const SmearingFunction& g, double m_ref = constants::nucleon_mass) {
  detail::require_density(g, "build_smeared_mass");
  if (!(m_ref > 0.0)) throw DomainError("build_smeared_mass: reference mass must be positive");
  Matrix diag(static_cast<Eigen::Index>(basis.dim()), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k)
    diag.col(static_cast<Eigen::Index>(k)) =
        smeared_mass_diagonal(basis, grid.position(k), g, m_ref).cwiseSqrt().cast<cplx>();
  OperatorFamily fam(FamilyKind::sqrt_smeared_mass, grid, std::move(diag));
  fam.set_fock_basis(basis);
  return fam;
}

/// Compare the second-quantized N(x_k) (built from ladder operators) with the
/// first-quantized multiplication operator sum_i g(z_i - x_k) restricted to
/// the (anti)symmetric n-particle subspace. Returns the largest elementwise
/// deviation over all grid nodes.
inline double first_quantized_equiv_check(const FockBasis& basis, const SpatialGrid& grid,
                                          const SmearingFunction& g, int n_particles) {
  detail::require_density(g, "first_quantized_equiv_check");
  require(n_particles >= 1 && n_particles <= 3, "first_quantized_equiv_check: need 1 <= n <= 3");
  require(basis.sites() <= 8, "first_quantized_equiv_check: at most 8 lattice sites");
  require(basis.species().size() == 1, "first_quantized_equiv_check: single-species basis required");
  require(n_particles <= basis.max_total_particles(), "first_quantized_equiv_check: n above basis bound");

  const std::size_t sites = basis.sites();
  std::size_t product_dim = 1;
  for (int i = 0; i < n_particles; ++i) product_dim *= sites;
  detail::check_dimension(static_cast<Eigen::Index>(product_dim), "first_quantized_equiv_check");

  const auto [first, last] = basis.block(n_particles);
  const auto block_dim = static_cast<Eigen::Index>(last - first);
  const bool fermion = basis.statistics() == Statistics::fermion;

  // Isometry from the n-particle Fock block into (C^sites)^{tensor n}.
  Matrix iso = Matrix::Zero(static_cast<Eigen::Index>(product_dim), block_dim);
  for (std::size_t b = first; b < last; ++b) {
    const auto& occ = basis.state(b);
    std::vector<std::size_t> orbitals;
    double norm2 = 1.0;
    for (std::size_t s = 0; s < sites; ++s) {
      for (int c = 0; c < occ[basis.mode(0, s)]; ++c) orbitals.push_back(s);
      for (int c = 2; c <= occ[basis.mode(0, s)]; ++c) norm2 *= c;
    }
    std::vector<int> perm(static_cast<std::size_t>(n_particles));
    std::iota(perm.begin(), perm.end(), 0);
    double count = 0.0;
    do {
      int inversions = 0;
      for (int i = 0; i < n_particles; ++i)
        for (int j = i + 1; j < n_particles; ++j) inversions += perm[i] > perm[j];
      const double sign = (fermion && inversions % 2 == 1) ? -1.0 : 1.0;
      std::size_t idx = 0;
      for (int i = 0; i < n_particles; ++i) idx = idx * sites + orbitals[perm[i]];
      iso(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(b - first)) += sign;
      count += 1.0;
    } while (std::next_permutation(perm.begin(), perm.end()));
    iso.col(static_cast<Eigen::Index>(b - first)) /= std::sqrt(count * norm2);
  }

  double worst = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Point& x = grid.position(k);
    // First-quantized: diagonal in the product basis.
    RealVector fq(static_cast<Eigen::Index>(product_dim));
    for (std::size_t idx = 0; idx < product_dim; ++idx) {
      std::size_t rem = idx;
      double acc = 0.0;
      for (int i = 0; i < n_particles; ++i) {
        acc += lattice_kernel(g, basis.lattice(), rem % sites, x);
        rem /= sites;
      }
      fq(static_cast<Eigen::Index>(idx)) = acc;
    }
    const Matrix restricted = iso.adjoint() * fq.cast<cplx>().asDiagonal() * iso;
    const Matrix second = Matrix(smeared_number_operator(basis, x, g, 0))
                              .block(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(first),
                                     block_dim, block_dim);
    worst = std::max(worst, (restricted - second).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace cpsim
