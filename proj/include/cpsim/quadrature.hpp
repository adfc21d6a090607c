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
#include <queue>
#include <span>
#include <vector>

#include "cpsim/common.hpp"

namespace cpsim::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod pair (QUADPACK qk15 constants).
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  int depth;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <typename F>
Segment kronrod15(F& f, double a, double b, int depth) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double x = h * kXgk[j];
    const double f1 = f(c - x), f2 = f(c + x);
    kron += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
  }
  return {a, b, kron * h, std::abs((kron - gauss) * h), depth};
}

}  // namespace detail

struct Options {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_segments = 2000;
  int max_depth = 60;
};

/// Globally adaptive Gauss-Kronrod integration of f over [a, b].
///
/// `breakpoints` seeds the initial partition (points outside (a, b) are
/// ignored); use them where f has kinks, fast oscillation onsets or
/// integrable singularities. The error estimate is the sum of |K15 - G7| over
/// the final partition.
template <typename F>
Result integrate(F&& f, double a, double b, const Options& opt = {},
                 std::span<const double> breakpoints = {}) {
  Result res;
  if (a == b) {
    res.converged = true;
    return res;
  }
  std::vector<double> edges{a};
  std::vector<double> bp(breakpoints.begin(), breakpoints.end());
  std::sort(bp.begin(), bp.end());
  for (double p : bp)
    if (p > a && p < b && p > edges.back()) edges.push_back(p);
  edges.push_back(b);

  std::priority_queue<detail::Segment> heap;
  double total = 0.0, total_err = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    auto s = detail::kronrod15(f, edges[i], edges[i + 1], 0);
    res.evaluations += 15;
    total += s.value;
    total_err += s.error;
    heap.push(s);
  }

  auto target = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };
  int segments = static_cast<int>(heap.size());
  std::vector<detail::Segment> frozen;
  while (total_err > target() && !heap.empty() && segments < opt.max_segments) {
    auto s = heap.top();
    heap.pop();
    if (s.depth >= opt.max_depth) {
      frozen.push_back(s);
      continue;
    }
    const double m = 0.5 * (s.a + s.b);
    auto l = detail::kronrod15(f, s.a, m, s.depth + 1);
    auto r = detail::kronrod15(f, m, s.b, s.depth + 1);
    res.evaluations += 30;
    total += l.value + r.value - s.value;
    total_err += l.error + r.error - s.error;
    heap.push(l);
    heap.push(r);
    ++segments;
  }

  // Re-sum from the partition to shed accumulated cancellation in `total`.
  double value = 0.0, err = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  for (const auto& s : frozen) {
    value += s.value;
    err += s.error;
  }
  res.value = value;
  res.error = err;
  res.converged = err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(value));
  return res;
}

/// Same as integrate() but throws ConvergenceError when the tolerance is not
/// met within the segment budget.
template <typename F>
Result integrate_or_throw(F&& f, double a, double b, const Options& opt = {},
                          std::span<const double> breakpoints = {}) {
  auto r = integrate(std::forward<F>(f), a, b, opt, breakpoints);
  if (!r.converged)
    throw ConvergenceError("quadrature did not converge", r.value, r.error);
  return r;
}

}  // namespace cpsim::quad
