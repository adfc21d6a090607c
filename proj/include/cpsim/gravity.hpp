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
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "cpsim/collapse_ops.hpp"
#include "cpsim/common.hpp"
#include "cpsim/dynamics.hpp"
#include "cpsim/lindblad.hpp"
#include "cpsim/quadrature.hpp"

namespace cpsim {

/// Flash-sourced Newtonian gravity. A flash at x_j imprints the phase
/// exp[i r_m F(|x - x_j|)] with r_m = G m_R m / (hbar lambda) and F the
/// potential profile of the smeared source f_G.
struct GravityParams {
  enum class FKind { gaussian_smeared, point_source };

  double G = constants::G;
  double r_G = constants::grw_collapse_radius;
  double r_m = 0.0;
  FKind F_kind = FKind::gaussian_smeared;

  /// f_G(r) = (pi r_G^2)^(-3/2) exp(-r^2 / r_G^2).
  SmearingFunction f_G() const { return SmearingFunction::gaussian_density(r_G, 3); }

  static double gravitational_length(double G, double m_R, double mass, double lambda_grw, double hbar) {
    require(lambda_grw > 0.0, "GravityParams: lambda_grw must be positive to define r_m");
    require(G >= 0.0 && m_R > 0.0 && mass > 0.0 && hbar > 0.0, "GravityParams: invalid physical constants");
    return G * m_R * mass / (hbar * lambda_grw);
  }

  static GravityParams physical(double G, double m_R, double mass, double lambda_grw, double hbar, double r_G,
                                FKind kind = FKind::gaussian_smeared) {
    GravityParams gp;
    gp.G = G;
    gp.r_G = r_G;
    gp.F_kind = kind;
    gp.r_m = gravitational_length(G, m_R, mass, lambda_grw, hbar);
    gp.validate();
    return gp;
  }

  /// Throws unless r_m agrees with G m_R m / (hbar lambda) to 1e-12 relative.
  void check_consistency(double m_R, double mass, double lambda_grw, double hbar) const {
    const double expect = gravitational_length(G, m_R, mass, lambda_grw, hbar);
    if (std::abs(r_m - expect) > 1e-12 * std::abs(expect))
      throw ContractViolation("GravityParams: r_m = " + std::to_string(r_m) +
                              " inconsistent with G m_R m / (hbar lambda) = " + std::to_string(expect));
  }

  void validate() const {
    require(r_m >= 0.0 && std::isfinite(r_m), "GravityParams: r_m must be finite and non-negative");
    require(F_kind == FKind::point_source || r_G > 0.0, "GravityParams: r_G must be positive");
  }
};

inline const char* to_string(GravityParams::FKind k) {
  return k == GravityParams::FKind::point_source ? "point_source" : "gaussian_smeared";
}

namespace detail {

/// erf(x)/x, continuous at 0.
inline double erf_over_x(double x) {
  if (x < 1e-4) return 2.0 / std::sqrt(kPi) * (1.0 - x * x / 3.0);
  return std::erf(x) / x;
}

/// Fraction of a unit gaussian source f_G inside radius x r_G:
/// erf(x) - (2/sqrt(pi)) x exp(-x^2), by series for small x.
inline double enclosed_fraction(double x) {
  if (x < 0.1) {
    double term = x * x * x, sum = 0.0, x2 = x * x;
    double fact = 1.0;
    for (int n = 0; n < 8; ++n) {
      if (n > 0) fact *= n;
      sum += ((n % 2) ? -1.0 : 1.0) * term / (fact * (2 * n + 3));
      term *= x2;
    }
    return 4.0 / std::sqrt(kPi) * sum;
  }
  return std::erf(x) - 2.0 / std::sqrt(kPi) * x * std::exp(-x * x);
}

}  // namespace detail

/// F(r) = 4 pi [ (1/r) int_0^r s^2 f_G(s) ds + int_r^inf s f_G(s) ds ].
/// Closed forms: erf(r / r_G) / r for the gaussian source, 1/r for a point.
inline double grav_profile_F(double r, const GravityParams& gp) {
  require(r >= 0.0, "grav_profile_F: r must be non-negative");
  if (gp.F_kind == GravityParams::FKind::point_source) {
    if (r == 0.0) throw DomainError("grav_profile_F: point-source profile diverges at r = 0");
    return 1.0 / r;
  }
  return detail::erf_over_x(r / gp.r_G) / gp.r_G;
}

/// The same profile by adaptive quadrature of the defining integrals for a
/// gaussian f_G; used to cross-check the closed form.
inline quad::Result grav_profile_F_quadrature(double r, const GravityParams& gp, const quad::Options& opt = {}) {
  require(r >= 0.0, "grav_profile_F_quadrature: r must be non-negative");
  require(gp.F_kind == GravityParams::FKind::gaussian_smeared, "grav_profile_F_quadrature: gaussian f_G only");
  const auto f = gp.f_G();
  const double upper = r + 12.0 * gp.r_G;
  quad::Result res;
  if (r > 0.0) {
    auto inner = quad::integrate_or_throw([&](double s) { return s * s * f(s); }, 0.0, r, opt);
    res.value += inner.value / r;
    res.error += inner.error / r;
    res.evaluations += inner.evaluations;
  }
  auto outer = quad::integrate_or_throw([&](double s) { return s * f(s); }, r, upper, opt);
  res.value = 4.0 * kPi * (res.value + outer.value);
  res.error = 4.0 * kPi * (res.error + outer.error);
  res.evaluations += outer.evaluations;
  res.converged = true;
  return res;
}

/// F'(r) = -(4 pi / r^2) int_0^r s^2 f_G(s) ds.
inline double grav_profile_dF(double r, const GravityParams& gp) {
  require(r >= 0.0, "grav_profile_dF: r must be non-negative");
  if (gp.F_kind == GravityParams::FKind::point_source) {
    if (r == 0.0) throw DomainError("grav_profile_dF: point-source profile diverges at r = 0");
    return -1.0 / (r * r);
  }
  const double x = r / gp.r_G;
  if (x < 0.1) {
    // Q(x)/x^2 without the 0/0 at the origin.
    double term = x, sum = 0.0, fact = 1.0;
    for (int n = 0; n < 8; ++n) {
      if (n > 0) fact *= n;
      sum += ((n % 2) ? -1.0 : 1.0) * term / (fact * (2 * n + 3));
      term *= x * x;
    }
    return -4.0 / std::sqrt(kPi) * sum / (gp.r_G * gp.r_G);
  }
  return -detail::enclosed_fraction(x) / (r * r);
}

/// Gravity-dressed family B(x_k) = U_G(x_k) L(x_k) with U_G diagonal in the
/// system basis. Position-basis families take the phase r_m F(|y - x_k|);
/// Fock families take sum over occupied sites and species of
/// (G m_R m_i / (hbar lambda)) n F(|y_s - x_k|).
inline OperatorFamily grav_unitary(const OperatorFamily& family, const GravityParams& gp, double m_R,
                                   double lambda_grw, Units units = Units::si()) {
  gp.validate();
  if (!family.is_diagonal()) throw ContractViolation("grav_unitary: family must be diagonal");
  require(family.kind() == FamilyKind::grw_position || family.kind() == FamilyKind::sqrt_smeared_mass,
          "grav_unitary: expects a grw_position or sqrt_smeared_mass family");
  const auto& grid = family.grid();
  const Eigen::Index dim = family.dim();
  Eigen::MatrixXd phase = Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(grid.size()));

  if (!family.basis_positions().empty()) {
    const auto& pos = family.basis_positions();
    if (gp.r_m != 0.0)
      for (std::size_t k = 0; k < grid.size(); ++k)
        for (Eigen::Index i = 0; i < dim; ++i)
          phase(i, static_cast<Eigen::Index>(k)) = gp.r_m * grav_profile_F(distance(pos[i], grid.position(k)), gp);
  } else if (family.fock_basis()) {
    const auto& basis = *family.fock_basis();
    std::vector<double> coupling;
    for (const auto& sp : basis.species())
      coupling.push_back(gp.r_m == 0.0 ? 0.0
                                       : GravityParams::gravitational_length(gp.G, m_R, sp.mass, lambda_grw,
                                                                             units.hbar));
    for (std::size_t k = 0; k < grid.size(); ++k) {
      std::vector<double> f_site(basis.sites());
      for (std::size_t s = 0; s < basis.sites(); ++s)
        f_site[s] = grav_profile_F(distance(basis.lattice().position(s), grid.position(k)), gp);
      for (Eigen::Index i = 0; i < dim; ++i) {
        const auto& occ = basis.state(static_cast<std::size_t>(i));
        double ph = 0.0;
        for (std::size_t sp = 0; sp < basis.species().size(); ++sp)
          for (std::size_t s = 0; s < basis.sites(); ++s) ph += coupling[sp] * occ[basis.mode(sp, s)] * f_site[s];
        phase(i, static_cast<Eigen::Index>(k)) = ph;
      }
    }
  } else {
    throw ContractViolation("grav_unitary: family carries neither basis positions nor a Fock basis");
  }

  Matrix dressed = family.diagonals();
  for (Eigen::Index k = 0; k < dressed.cols(); ++k)
    for (Eigen::Index i = 0; i < dim; ++i) dressed(i, k) *= std::polar(1.0, phase(i, k));
  OperatorFamily out(FamilyKind::gravity_dressed, grid, std::move(dressed));
  out.set_basis_positions(family.basis_positions());
  if (family.fock_basis()) out.set_fock_basis(*family.fock_basis());
  return out;
}

/// Largest |B_k^dagger B_k - L_k^2| over all nodes and matrix entries.
inline double dressed_square_deviation(const OperatorFamily& dressed, const OperatorFamily& bare) {
  require(dressed.size() == bare.size() && dressed.dim() == bare.dim(), "dressed_square_deviation: shape mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < dressed.size(); ++k) {
    const Matrix b = dressed.member(k), l = bare.member(k);
    worst = std::max(worst, (b.adjoint() * b - l * l).cwiseAbs().maxCoeff());
  }
  return worst;
}

struct GammaResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
};

/// Gamma(d) for the gaussian collapse profile f_C of radius r_C:
///
///   Gamma(d) + 1 = (2 / (sqrt(pi) r_C^3)) e^{-d^2/r_C^2}
///                  int_0^inf dr r^2 e^{-r^2/r_C^2} int_0^pi dth sin(th) cos(Delta),
///   Delta = r_m [F(|r + d|) - F(|r - d|)],
///
/// evaluated as (e^{-d^2} - 1) + (2/sqrt(pi)) e^{-d^2} int int (cos Delta - 1)
/// with cos Delta - 1 = -2 sin^2(Delta/2), so that small Gamma carries no
/// cancellation. The angular integrand is even in cos(th).
inline GammaResult gamma_of_d(double d, const GravityParams& gp, double r_C, double quad_tol = 1e-10) {
  require(d >= 0.0, "gamma_of_d: d must be non-negative");
  require(r_C > 0.0, "gamma_of_d: r_C must be positive");
  require(quad_tol > 0.0, "gamma_of_d: quad_tol must be positive");
  gp.validate();
  const double a = d / r_C;
  const double rm = gp.r_m / r_C;
  const double e = std::exp(-a * a);
  const double pref = 2.0 / std::sqrt(kPi) * e;
  GammaResult out;
  // Roundoff floor of the closed-form part.
  const double roundoff = 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(std::expm1(-a * a)));
  if (a == 0.0 || rm == 0.0) {
    out.value = std::expm1(-a * a);
    out.error = roundoff;
    return out;
  }

  const bool point = gp.F_kind == GravityParams::FKind::point_source;
  const double g = gp.r_G / r_C;
  auto F = [&](double rho) {
    if (point) return 1.0 / rho;
    return detail::erf_over_x(rho / g) / g;
  };

  constexpr double kRmax = 8.0;  // e^{-64} truncation of the radial gaussian
  double inner_err_bound = 0.0;
  bool inner_failed = false;
  int evals = 0;

  auto radial = [&](double r) {
    const double w = r * r * std::exp(-r * r);
    if (w == 0.0) return 0.0;
    quad::Options io;
    io.abs_tol = std::min(1.0, quad_tol / (8.0 * kRmax * w));
    io.rel_tol = 1e-12;
    io.max_segments = 4000;
    auto ang = [&](double u) {
      const double rp = std::sqrt(std::max(0.0, r * r + 2.0 * a * r * u + a * a));
      const double rn = std::sqrt(std::max(0.0, r * r - 2.0 * a * r * u + a * a));
      if (point && (rp == 0.0 || rn == 0.0)) return -1.0;
      const double s = std::sin(0.5 * rm * (F(rp) - F(rn)));
      return -2.0 * s * s;
    };
    // Near r = a the |r - d| branch is fastest at u -> 1.
    std::array<double, 3> bp{0.5, 0.9, 0.99};
    auto res = quad::integrate(ang, 0.0, 1.0, io, bp);
    evals += res.evaluations;
    if (!res.converged) inner_failed = true;
    inner_err_bound = std::max(inner_err_bound, 2.0 * w * res.error);
    return 2.0 * w * res.value;
  };

  const double s = std::sqrt(rm * a);
  std::vector<double> bps{a, 0.5 * a, 2.0 * a, s, 3.0 * s, 10.0 * s, 1.0, 3.0};
  quad::Options oo;
  oo.abs_tol = 0.25 * quad_tol;
  oo.rel_tol = 1e-12;
  oo.max_segments = 4000;
  auto res = quad::integrate(radial, 0.0, kRmax, oo, bps);
  evals += res.evaluations;

  out.value = std::expm1(-a * a) + pref * res.value;
  out.error = pref * (res.error + kRmax * inner_err_bound) + roundoff;
  out.evaluations = evals;
  if (!res.converged || inner_failed || out.error > quad_tol)
    throw ConvergenceError("gamma_of_d: tolerance " + std::to_string(quad_tol) + " not reached at d = " +
                               std::to_string(d),
                           out.value, out.error);
  return out;
}

/// Length scale below which the two-term small-d expansion is valid:
/// min(r_m^3 / r_C^2, r_C^2 / r_m), or r_C without gravity.
inline double asymptotic_scale(const GravityParams& gp, double r_C) {
  if (gp.r_m == 0.0) return r_C;
  return std::min(gp.r_m * gp.r_m * gp.r_m / (r_C * r_C), r_C * r_C / gp.r_m);
}

/// -(32/15)(r_m^{3/2}/r_C^3) d^{3/2} - (1/r_C^2)(1 - (8/3) r_m^2/r_C^2) d^2.
/// The "d much smaller than the scale" precondition is enforced as d <= scale.
/// The d^{3/2} term comes from the 1/r singularity of the point-source
/// profile; a smeared profile is analytic at the origin and gives pure d^2,
/// so it is rejected when r_m > 0.
inline double gamma_asymptotic(double d, const GravityParams& gp, double r_C) {
  require(d >= 0.0 && r_C > 0.0, "gamma_asymptotic: need d >= 0 and r_C > 0");
  if (gp.r_m > 0.0 && gp.F_kind != GravityParams::FKind::point_source)
    throw DomainError("gamma_asymptotic: the small-d expansion holds for the point-source profile only");
  const double scale = asymptotic_scale(gp, r_C);
  if (d > scale)
    throw DomainError("gamma_asymptotic: d = " + std::to_string(d) + " outside the small-d regime (scale " +
                      std::to_string(scale) + ")");
  const double rc2 = r_C * r_C;
  return -(32.0 / 15.0) * std::pow(gp.r_m, 1.5) / (rc2 * r_C) * std::pow(d, 1.5) -
         (1.0 - (8.0 / 3.0) * gp.r_m * gp.r_m / rc2) * d * d / rc2;
}

/// Gamma(d) sampled on a list of d values, exported as d_m, gamma, err_estimate.
struct DephasingCurve {
  std::vector<double> d_values;
  std::vector<double> gamma_values;
  std::vector<double> quadrature_error_estimates;
};

inline DephasingCurve dephasing_curve(const std::vector<double>& ds, const GravityParams& gp, double r_C,
                                      double quad_tol = 1e-10) {
  DephasingCurve c;
  for (double d : ds) {
    auto g = gamma_of_d(d, gp, r_C, quad_tol);
    c.d_values.push_back(d);
    c.gamma_values.push_back(g.value);
    c.quadrature_error_estimates.push_back(g.error);
  }
  return c;
}

/// Full single-particle dephasing rate lambda (m/m_R) |Gamma(d)| with r_m
/// derived from lambda, for the lambda-scaling sweep.
inline double dephasing_rate(double d, double lambda_grw, double mass, double m_R, double r_C, double r_G,
                             GravityParams::FKind kind, double G = constants::G, double hbar = constants::hbar,
                             double quad_tol = 1e-12) {
  const auto gp = GravityParams::physical(G, m_R, mass, lambda_grw, hbar, r_G, kind);
  return lambda_grw * (mass / m_R) * std::abs(gamma_of_d(d, gp, r_C, quad_tol).value);
}

/// Integrates the master equation with a gravity-dressed family (H = 0) and
/// compares every off-diagonal entry with rho_ij(0) exp(lambda s Gamma(d_ij) t),
/// d_ij = |x_i - x_j|/2. Returns the worst relative deviation.
inline DephasingCheck grav_master_dephasing_check(const DensityMatrix& rho0, const ModelParams& params,
                                                  const GravityParams& gp, double t_end, double r_C,
                                                  int samples = 10, double quad_tol = 1e-11) {
  require(params.family->kind() == FamilyKind::gravity_dressed,
          "grav_master_dephasing_check: family must be gravity_dressed");
  const auto& pos = params.family->basis_positions();
  require(!pos.empty(), "grav_master_dephasing_check: family needs basis positions");
  std::map<double, double> cache;
  auto gamma_ij = [&](Eigen::Index i, Eigen::Index j) {
    const double d = 0.5 * distance(pos[i], pos[j]);
    auto it = cache.find(d);
    if (it != cache.end()) return it->second;
    const double g = gamma_of_d(d, gp, r_C, quad_tol).value;
    cache.emplace(d, g);
    return g;
  };
  return dephasing_check(rho0, params, t_end, gamma_ij, samples);
}

/// Radially symmetric wavefunction on r_i = i h, i = 0..n-1.
struct RadialWavefunction {
  double h = 0.0;
  std::vector<cplx> psi;
};

inline double radial_norm(const RadialWavefunction& w) {
  double acc = 0.0;
  for (std::size_t i = 0; i < w.psi.size(); ++i) {
    const double r = static_cast<double>(i) * w.h;
    acc += (i == 0 || i + 1 == w.psi.size() ? 0.5 : 1.0) * r * r * std::norm(w.psi[i]);
  }
  return 4.0 * kPi * w.h * acc;
}

struct EnergyTerms {
  double bare = 0.0;        // -(hbar^2/2m) int psi* lap psi
  double gravity = 0.0;     // (hbar^2/2m) r_m^2 int F'^2 |psi|^2
  double cross = 0.0;       // (hbar^2/2m) 2 r_m int F' Im(psi* d_r psi)
  double total() const { return bare + gravity + cross; }
};

/// Kinetic energy of exp(i r_m F) psi for a radial psi, term by term, with
/// second-order finite differences and trapezoidal radial quadrature. The
/// boundary amplitude must vanish: |psi(r_max)| <= 1e-8 max|psi|.
inline EnergyTerms energy_after_flash_terms(const RadialWavefunction& w, const GravityParams& gp, double mass,
                                            Units units = Units::si()) {
  const std::size_t n = w.psi.size();
  require(n >= 5 && w.h > 0.0, "energy_after_flash: need at least 5 radial samples and h > 0");
  require(mass > 0.0, "energy_after_flash: mass must be positive");
  double peak = 0.0;
  for (const auto& v : w.psi) peak = std::max(peak, std::abs(v));
  if (std::abs(w.psi.back()) > 1e-8 * peak)
    throw DomainError("energy_after_flash: wavefunction does not vanish at the outer boundary");
  if (gp.F_kind == GravityParams::FKind::point_source && gp.r_m != 0.0)
    throw DomainError("energy_after_flash: the point-source gravity term diverges");

  const double h = w.h;
  auto at = [&](std::ptrdiff_t i) {
    // psi is even in r: psi(-r) = psi(r).
    return w.psi[static_cast<std::size_t>(std::abs(i))];
  };
  double bare = 0.0, grav = 0.0, cross = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto k = static_cast<std::ptrdiff_t>(i);
    const double r = static_cast<double>(i) * h;
    const double wt = (i == 0 ? 0.5 : 1.0) * r * r;
    if (wt == 0.0) continue;
    const cplx d1 = (at(k + 1) - at(k - 1)) / (2.0 * h);
    const cplx d2 = (at(k + 1) - 2.0 * at(k) + at(k - 1)) / (h * h);
    const cplx lap = d2 + 2.0 / r * d1;
    const double fp = grav_profile_dF(r, gp);
    bare += wt * (-(std::conj(at(k)) * lap).real());
    grav += wt * fp * fp * std::norm(at(k));
    cross += wt * fp * (std::conj(at(k)) * d1).imag();
  }
  const double c = units.hbar * units.hbar / (2.0 * mass) * 4.0 * kPi * h;
  EnergyTerms t;
  t.bare = c * bare;
  t.gravity = c * gp.r_m * gp.r_m * grav;
  t.cross = c * 2.0 * gp.r_m * cross;
  return t;
}

inline double energy_after_flash(const RadialWavefunction& w, const GravityParams& gp, double mass,
                                 Units units = Units::si()) {
  return energy_after_flash_terms(w, gp, mass, units).total();
}

struct PotentialResult {
  double value = 0.0;          // J/kg
  double min_distance = 0.0;   // probe to nearest node carrying density
  bool accuracy_warning = false;
  std::string warning;
};

/// Phi(x) = -G m_R sum_k w_k <M(y_k)> F(|x - y_k|): the flash-sourced
/// potential with the flash rate replaced by lambda <M>, whose lambda factors
/// cancel. <M> is the smeared mass operator expectation (per unit volume,
/// in units of m_R). Probes closer than 2 r_G to the density are flagged.
inline PotentialResult macro_potential(const SpatialGrid& grid, const RealVector& mass_density,
                                       const GravityParams& gp, double m_R, const Point& x_probe) {
  require(static_cast<std::size_t>(mass_density.size()) == grid.size(), "macro_potential: one value per node");
  require(m_R > 0.0, "macro_potential: m_R must be positive");
  PotentialResult res;
  res.min_distance = std::numeric_limits<double>::infinity();
  const double peak = mass_density.cwiseAbs().maxCoeff();
  double acc = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double rho = mass_density(static_cast<Eigen::Index>(k));
    if (rho == 0.0) continue;
    const double r = distance(x_probe, grid.position(k));
    if (std::abs(rho) > 1e-12 * peak) res.min_distance = std::min(res.min_distance, r);
    acc += grid.weight(k) * rho * grav_profile_F(r, gp);
  }
  res.value = -gp.G * m_R * acc;
  const double reach = gp.F_kind == GravityParams::FKind::point_source ? 0.0 : 2.0 * gp.r_G;
  if (peak > 0.0 && res.min_distance < reach) {
    res.accuracy_warning = true;
    res.warning = "probe within 2 r_G of the smeared source";
  }
  return res;
}

}  // namespace cpsim
