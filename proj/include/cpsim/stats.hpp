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

#include "cpsim/common.hpp"

namespace cpsim::stats {

/// Two-sided standard normal quantile for the common confidence levels.
inline double z_for_confidence(double level) {
  if (level == 0.95) return 1.959963984540054;
  if (level == 0.99) return 2.5758293035489004;
  if (level == 0.999) return 3.2905267314919255;
  throw ContractViolation("z_for_confidence: supported levels are 0.95, 0.99, 0.999");
}

struct Interval {
  double lower = 0.0;
  double upper = 1.0;
  bool contains(double p) const { return p >= lower && p <= upper; }
};

/// Wilson score interval for k successes in n trials.
inline Interval wilson(std::size_t k, std::size_t n, double level = 0.99) {
  require(n > 0 && k <= n, "wilson: need 0 <= k <= n and n > 0");
  const double z = z_for_confidence(level);
  const double nn = static_cast<double>(n), p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * nn)) / (1.0 + z2 / nn);
  const double half = z / (1.0 + z2 / nn) * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// Binomial standard error sqrt(p(1-p)/n).
inline double binomial_se(double p, std::size_t n) {
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

/// Least-squares slope of y against x.
template <typename Range>
double fit_slope(const Range& x, const Range& y) {
  const std::size_t n = x.size();
  require(n >= 2 && y.size() == n, "fit_slope: need two or more paired points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace cpsim::stats
