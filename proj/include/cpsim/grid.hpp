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

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "cpsim/common.hpp"

namespace cpsim {

using Point = std::array<double, 3>;

inline double distance(const Point& a, const Point& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Tensor-product quadrature grid in one or three dimensions.
///
/// Each axis is a strictly increasing list of node coordinates inside
/// [lower, upper]. A node owns the Voronoi cell between the midpoints to its
/// neighbours (the box faces for the outermost nodes), so the weights sum to
/// the box volume exactly. Unused axes of a 1-D grid are pinned to 0.
class SpatialGrid {
public:
  SpatialGrid() = default;

  /// Cell-centred uniform grid of n nodes on [lower, upper].
  static SpatialGrid uniform_1d(double lower, double upper, std::size_t n) {
    return SpatialGrid(1, {centred_axis(lower, upper, n)}, {lower}, {upper});
  }

  /// Cell-centred uniform cube with n nodes per axis.
  static SpatialGrid uniform_3d(double lower, double upper, std::size_t n) {
    auto axis = centred_axis(lower, upper, n);
    return SpatialGrid(3, {axis, axis, axis}, {lower, lower, lower}, {upper, upper, upper});
  }

  /// Grid with arbitrary axis coordinates. `axes` holds 1 or 3 entries.
  static SpatialGrid from_axes(std::vector<std::vector<double>> axes, std::vector<double> lower,
                               std::vector<double> upper) {
    const int dim = static_cast<int>(axes.size());
    return SpatialGrid(dim, std::move(axes), std::move(lower), std::move(upper));
  }

  int dimension() const noexcept { return dim_; }
  std::size_t size() const noexcept { return weights_.size(); }
  std::size_t axis_size(int axis) const { return axes_.at(axis).size(); }
  std::span<const double> axis(int a) const { return axes_.at(a); }
  std::span<const double> weights() const noexcept { return weights_; }
  double weight(std::size_t k) const { return weights_.at(k); }
  const Point& position(std::size_t k) const { return positions_.at(k); }
  double lower(int axis) const { return lower_.at(axis); }
  double upper(int axis) const { return upper_.at(axis); }

  double volume() const {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= upper_[a] - lower_[a];
    return v;
  }

  /// Smallest spacing between neighbouring nodes along any axis.
  double min_spacing() const {
    double h = std::numeric_limits<double>::infinity();
    for (const auto& ax : axes_)
      for (std::size_t i = 1; i < ax.size(); ++i) h = std::min(h, ax[i] - ax[i - 1]);
    return h;
  }

  /// Largest spacing between neighbouring nodes along any axis.
  double max_spacing() const {
    double h = 0.0;
    for (const auto& ax : axes_)
      for (std::size_t i = 1; i < ax.size(); ++i) h = std::max(h, ax[i] - ax[i - 1]);
    return h;
  }

  /// Index of the node closest to p.
  std::size_t nearest(const Point& p) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < size(); ++k) {
      const double d = distance(positions_[k], p);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  }

  /// Index of the node whose cell contains p (p must lie inside the box).
  std::size_t cell_of(const Point& p) const {
    std::size_t index = 0;
    for (int a = 0; a < dim_; ++a) {
      const auto& ax = axes_[a];
      std::size_t i = 0;
      while (i + 1 < ax.size() && p[a] > 0.5 * (ax[i] + ax[i + 1])) ++i;
      index = index * ax.size() + i;
    }
    return index;
  }

private:
  SpatialGrid(int dim, std::vector<std::vector<double>> axes, std::vector<double> lower,
              std::vector<double> upper)
      : dim_(dim), axes_(std::move(axes)), lower_(std::move(lower)), upper_(std::move(upper)) {
    require(dim_ == 1 || dim_ == 3, "SpatialGrid: dimension must be 1 or 3");
    require(axes_.size() == static_cast<std::size_t>(dim_) && lower_.size() == axes_.size() &&
                upper_.size() == axes_.size(),
            "SpatialGrid: axis/bound count does not match dimension");

    std::vector<std::vector<double>> cell(dim_);
    for (int a = 0; a < dim_; ++a) {
      const auto& ax = axes_[a];
      require(!ax.empty(), "SpatialGrid: empty axis");
      require(lower_[a] < upper_[a], "SpatialGrid: empty box");
      for (std::size_t i = 0; i < ax.size(); ++i) {
        require(ax[i] >= lower_[a] && ax[i] <= upper_[a], "SpatialGrid: node outside box");
        if (i > 0) require(ax[i] > ax[i - 1], "SpatialGrid: node positions must strictly increase");
        const double left = i == 0 ? lower_[a] : 0.5 * (ax[i - 1] + ax[i]);
        const double right = i + 1 == ax.size() ? upper_[a] : 0.5 * (ax[i] + ax[i + 1]);
        cell[a].push_back(right - left);
      }
    }

    const std::size_t nx = axes_[0].size();
    const std::size_t ny = dim_ == 3 ? axes_[1].size() : 1;
    const std::size_t nz = dim_ == 3 ? axes_[2].size() : 1;
    require(nx * ny * nz <= 1u << 22, "SpatialGrid: too many nodes");
    positions_.reserve(nx * ny * nz);
    weights_.reserve(nx * ny * nz);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t k = 0; k < nz; ++k) {
          if (dim_ == 1) {
            positions_.push_back({axes_[0][i], 0.0, 0.0});
            weights_.push_back(cell[0][i]);
          } else {
            positions_.push_back({axes_[0][i], axes_[1][j], axes_[2][k]});
            weights_.push_back(cell[0][i] * cell[1][j] * cell[2][k]);
          }
        }
  }

  static std::vector<double> centred_axis(double lower, double upper, std::size_t n) {
    require(n >= 1, "SpatialGrid: need at least one node");
    require(upper > lower, "SpatialGrid: empty interval");
    std::vector<double> ax(n);
    const double h = (upper - lower) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) ax[i] = lower + (static_cast<double>(i) + 0.5) * h;
    return ax;
  }

  int dim_ = 1;
  std::vector<std::vector<double>> axes_;
  std::vector<double> lower_, upper_;
  std::vector<Point> positions_;
  std::vector<double> weights_;
};

}  // namespace cpsim
