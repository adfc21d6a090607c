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
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "cpsim/common.hpp"
#include "cpsim/grid.hpp"

namespace cpsim {

using SparseMatrix = Eigen::SparseMatrix<cplx>;

enum class Statistics { boson, fermion };

struct Species {
  std::string label;
  double mass = 0.0;  // kg
};

/// Occupation-number basis of one or more particle species on a lattice.
///
/// Modes are ordered species-major (mode = species * sites + site). States
/// are grouped by total particle number, ascending, and ordered
/// lexicographically by occupation tuple inside each group. Fermionic signs
/// follow the same mode order (Jordan-Wigner string over lower modes).
class FockBasis {
public:
  using Occupation = std::vector<int>;

  FockBasis(SpatialGrid lattice, Statistics stats, int max_total_particles,
            std::vector<Species> species)
      : lattice_(std::move(lattice)), stats_(stats), max_total_(max_total_particles),
        species_(std::move(species)) {
    require(!species_.empty(), "FockBasis: need at least one species");
    require(max_total_ >= 0, "FockBasis: negative particle bound");
    for (const auto& s : species_) require(s.mass > 0.0, "FockBasis: species mass must be positive");
    modes_ = species_.size() * lattice_.size();
    const int cap = stats_ == Statistics::fermion ? 1 : max_total_;

    for (int n = 0; n <= max_total_; ++n) {
      block_start_.push_back(states_.size());
      Occupation occ(modes_, 0);
      enumerate(occ, 0, n, cap);
      if (states_.size() > kMaxDimension)
        throw ContractViolation("FockBasis: dimension exceeds " + std::to_string(kMaxDimension));
    }
    block_start_.push_back(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i) index_.emplace(states_[i], i);
  }

  const SpatialGrid& lattice() const noexcept { return lattice_; }
  Statistics statistics() const noexcept { return stats_; }
  int max_total_particles() const noexcept { return max_total_; }
  const std::vector<Species>& species() const noexcept { return species_; }
  std::size_t sites() const noexcept { return lattice_.size(); }
  std::size_t modes() const noexcept { return modes_; }
  std::size_t dim() const noexcept { return states_.size(); }
  const Occupation& state(std::size_t i) const { return states_.at(i); }

  std::size_t mode(std::size_t species, std::size_t site) const { return species * sites() + site; }

  std::size_t species_index(const std::string& label) const {
    for (std::size_t i = 0; i < species_.size(); ++i)
      if (species_[i].label == label) return i;
    throw ContractViolation("FockBasis: unknown species '" + label + "'");
  }

  /// Index of an occupation tuple; throws if not in the basis.
  std::size_t index_of(const Occupation& occ) const {
    auto it = index_.find(occ);
    if (it == index_.end()) throw ContractViolation("FockBasis: occupation not in basis");
    return it->second;
  }

  /// Half-open index range [first, last) of the states with n particles.
  std::pair<std::size_t, std::size_t> block(int n) const {
    require(n >= 0 && n <= max_total_, "FockBasis: particle number outside basis");
    return {block_start_[n], block_start_[n + 1]};
  }

  /// Annihilation operator a_mode as a sparse matrix.
  SparseMatrix annihilation(std::size_t mode) const {
    require(mode < modes_, "FockBasis: mode out of range");
    std::vector<Eigen::Triplet<cplx>> t;
    for (std::size_t col = 0; col < dim(); ++col) {
      const auto& occ = states_[col];
      const int n = occ[mode];
      if (n == 0) continue;
      Occupation target = occ;
      target[mode] -= 1;
      double amp;
      if (stats_ == Statistics::boson) {
        amp = std::sqrt(static_cast<double>(n));
      } else {
        const int before = std::accumulate(occ.begin(), occ.begin() + static_cast<long>(mode), 0);
        amp = (before % 2 == 0) ? 1.0 : -1.0;
      }
      t.emplace_back(static_cast<int>(index_of(target)), static_cast<int>(col), amp);
    }
    SparseMatrix a(dim(), dim());
    a.setFromTriplets(t.begin(), t.end());
    return a;
  }

  SparseMatrix creation(std::size_t mode) const { return SparseMatrix(annihilation(mode).adjoint()); }

  /// Occupation of one mode in every basis state.
  RealVector number_diagonal(std::size_t mode) const {
    RealVector d(dim());
    for (std::size_t i = 0; i < dim(); ++i) d(i) = states_[i][mode];
    return d;
  }

private:
  void enumerate(Occupation& occ, std::size_t mode, int remaining, int cap) {
    if (mode == modes_) {
      if (remaining == 0) states_.push_back(occ);
      if (states_.size() > kMaxDimension)
        throw ContractViolation("FockBasis: dimension exceeds " + std::to_string(kMaxDimension));
      return;
    }
    // Lexicographic ascending: lower occupation of earlier modes first.
    for (int k = 0; k <= std::min(cap, remaining); ++k) {
      occ[mode] = k;
      enumerate(occ, mode + 1, remaining - k, cap);
    }
    occ[mode] = 0;
  }

  SpatialGrid lattice_;
  Statistics stats_;
  int max_total_;
  std::vector<Species> species_;
  std::size_t modes_ = 0;
  std::vector<Occupation> states_;
  std::vector<std::size_t> block_start_;
  std::map<Occupation, std::size_t> index_;
};

}  // namespace cpsim
