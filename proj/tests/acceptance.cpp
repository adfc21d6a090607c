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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cpsim.hpp"

using namespace cpsim;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix random_hermitian(Eigen::Index d, RngStream& rng, double scale = 1.0) {
  Matrix a(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
  return scale * (a + a.adjoint());
}

StateVector random_state(Eigen::Index d, RngStream& rng) {
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
  return StateVector::normalized(v);
}

struct RandomChain {
  StateVector psi0;
  HermitianOperator h;
  std::vector<CollapsePoint> chain;
};

RandomChain random_chain(std::size_t max_points, Eigen::Index max_dim, RngStream& rng) {
  const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(max_dim - 1));
  const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_points));
  RandomChain rc{random_state(d, rng), HermitianOperator(random_hermitian(d, rng)), {}};
  std::vector<double> times(n);
  for (auto& t : times) t = rng.uniform();
  std::sort(times.begin(), times.end());
  for (std::size_t m = 0; m < n; ++m)
    rc.chain.push_back({m, times[m], 0.05 + 1.5 * rng.uniform(), HermitianOperator(random_hermitian(d, rng))});
  return rc;
}

// Criterion 1.
Outcome exact_chain_completeness() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::size_t i = 0; i < 200; ++i) {
    RngStream rng(101, i);
    const auto rc = random_chain(8, 6, rng);
    double sum = 0.0;
    for (const auto& rec : enumerate_chain(rc.psi0, rc.chain, rc.h, Units::natural())) sum += rec.probability;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  const double secs = elapsed_since(t0);
  return {worst < 1e-10 && secs < 30.0, fmt("max |sum p - 1| = %.3g (tol 1e-10), runtime %.2f s (limit 30 s)",
                                            worst, secs)};
}

// Criterion 2.
Outcome markovianity() {
  double worst = 0.0;
  for (std::size_t i = 0; i < 50; ++i) {
    RngStream rng(202, i);
    const auto rc = random_chain(6, 6, rng);
    worst = std::max(worst, markov_check(rc.psi0, rc.chain, rc.h, Units::natural()));
  }
  return {worst < 1e-10, fmt("max markov_check deviation = %.3g over 50 chains (tol 1e-10)", worst)};
}

// Criterion 3.
Outcome first_order_limit() {
  RngStream rng(303, 0);
  const Units u = Units::natural();
  const HermitianOperator l(random_hermitian(5, rng));
  const auto psi = random_state(5, rng);
  const double l2 = (l.matrix() * psi.amplitudes()).squaredNorm();
  std::vector<double> lg, lr;
  std::string detail;
  for (double g : {1e-4, 1e-5, 1e-6}) {
    const double p = interact_once(psi, CollapsePoint{0, 0.0, g, l}, u).p_flash;
    const double rel = std::abs(p - g / (u.hbar * u.hbar) * l2) / p;
    lg.push_back(std::log(g));
    lr.push_back(std::log(rel));
    detail += fmt("rel(%.0e) = %.3g; ", g, rel);
  }
  const double slope = stats::fit_slope(lg, lr);
  return {std::abs(slope - 1.0) <= 0.1, detail + fmt("log-log slope %.4f (target 1.0 +- 0.1)", slope)};
}

// Criterion 4.
Outcome unraveling_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  ModelParams p;
  p.lambda_grw = 1.0;
  p.units = Units::natural();
  p.mass = p.m_ref = 1.0;
  p.dt = 0.002;
  const auto grid = SpatialGrid::uniform_1d(-4.0, 4.0, 16);
  p.family = std::make_shared<OperatorFamily>(build_grw_family(grid, SmearingFunction::gaussian_amplitude(1.0, 1)));
  Matrix h = Matrix::Zero(16, 16);
  for (Eigen::Index k = 0; k + 1 < 16; ++k) h(k, k + 1) = h(k + 1, k) = -0.5;
  p.hamiltonian = HermitianOperator(h);
  Vector v(16);
  for (std::size_t k = 0; k < 16; ++k) {
    const double x = grid.position(k)[0];
    v(static_cast<Eigen::Index>(k)) = std::exp(-(x + 1.5) * (x + 1.5)) + std::exp(-(x - 1.5) * (x - 1.5));
  }
  const auto cmp = ensemble_vs_master(StateVector::normalized(v), p, 2.0, 4000, 2026, 10, 1);
  const double secs = elapsed_since(t0);
  return {cmp.within_bound && cmp.times.size() == 11 && secs < 300.0,
          fmt("max Frobenius distance %.4g vs bound 5/sqrt(4000) = %.4g at 10 checkpoints, runtime %.1f s "
              "(limit 300 s)",
              cmp.max_distance, 5.0 / std::sqrt(4000.0), secs)};
}

// Criterion 5.
Outcome indistinguishable_particles() {
  double worst = 0.0;
  const auto g = SmearingFunction::gaussian_density(1.0, 1);
  for (auto st : {Statistics::boson, Statistics::fermion})
    for (std::size_t m : {4u, 6u})
      for (int n : {1, 2, 3}) {
        const auto lattice = SpatialGrid::uniform_1d(0.0, static_cast<double>(m), m);
        const FockBasis basis(lattice, st, 3, {Species{"a", 1.0}});
        const auto collapse = SpatialGrid::uniform_1d(-1.0, static_cast<double>(m) + 1.0, 2 * m);
        worst = std::max(worst, first_quantized_equiv_check(basis, collapse, g, n));
      }
  return {worst < 1e-12, fmt("max deviation %.3g over bosons/fermions, n in {1,2,3}, M in {4,6} (tol 1e-12)", worst)};
}

// Criterion 6.
Outcome born_rule() {
  const auto pointer = PointerModel::standard(1.0, 100);
  const std::vector<cplx> c{std::sqrt(0.25), std::sqrt(0.75)};
  const auto rep = born_experiment(c, pointer, 1.0, 2e-4, 0.2, 4000, 11, 1);
  const bool ok = rep.frequencies_consistent() && rep.cross_region_fraction() <= 0.01;
  return {ok, fmt("frequencies (%.4f, %.4f) vs 99%% Wilson intervals containing (0.25, 0.75): ", rep.frequencies[0],
                  rep.frequencies[1]) +
                  (rep.frequencies_consistent() ? "inside" : "outside") +
                  fmt("; cross-region runs %.3g%% (limit 1%%)", 100.0 * rep.cross_region_fraction())};
}

// Criterion 7.
Outcome grw_dephasing() {
  const double r_C = 1.0, lambda = 1.0;
  ModelParams p;
  p.lambda_grw = lambda;
  p.units = Units::natural();
  p.mass = 2.0;
  p.m_ref = 1.0;
  p.dt = 0.005;
  const auto collapse = SpatialGrid::uniform_1d(-12.0, 12.0, 96);
  std::vector<Point> pos;
  for (double x : {-2.0, -0.5, 0.0, 0.75, 1.5, 3.0}) pos.push_back(Point{x, 0.0, 0.0});
  p.family = std::make_shared<OperatorFamily>(
      build_grw_family(collapse, pos, SmearingFunction::gaussian_amplitude(r_C, 1)));
  p.hamiltonian = HermitianOperator::zero(6);
  Vector v(6);
  for (Eigen::Index i = 0; i < 6; ++i) v(i) = cplx(1.0 + 0.1 * i, 0.2 * i);
  const auto rho0 = DensityMatrix::pure(StateVector::normalized(v));
  // e^{-lambda (m/m_R)(1 - e^{-d^2/r_C^2}) t}, d = |x - y| / 2.
  auto gam = [&](Eigen::Index i, Eigen::Index j) {
    const double d = 0.5 * std::abs(pos[i][0] - pos[j][0]);
    return std::exp(-d * d / (r_C * r_C)) - 1.0;
  };
  const auto chk = dephasing_check(rho0, p, 3.0 / lambda, gam, 30);
  return {chk.worst < 1e-3, fmt("max relative deviation %.3g over t in [0, 3/lambda] (tol 1e-3)", chk.worst)};
}

// Criterion 8.
Outcome gravitational_asymptotic() {
  const double r_C = 1.0;
  GravityParams gp;
  gp.F_kind = GravityParams::FKind::point_source;
  gp.r_m = std::sqrt(3.0 / 8.0);
  const double target = -(32.0 / 15.0) * std::pow(gp.r_m, 1.5) / (r_C * r_C * r_C);
  const double top = asymptotic_scale(gp, r_C) / 10.0;
  double worst = 0.0;
  int points = 0;
  for (double d = top; d >= top / 100.0 / 2.0; d /= 2.0, ++points) {
    const auto g = gamma_of_d(d, gp, r_C, 1e-9);
    worst = std::max(worst, std::abs(g.value / std::pow(d, 1.5) / target - 1.0));
  }
  bool ok = worst < 0.02 && points >= 8;
  std::string detail = fmt("max |ratio - 1| = %.3g over %.0f halvings from %.4g (tol 0.02); ", worst, points, top);

  GravityParams none = gp;
  none.r_m = 0.0;
  double worst_rel_err = 0.0;
  for (double d : {0.01, 0.1, 0.5, 1.0, 2.0, 3.0}) {
    const auto g = gamma_of_d(d, none, r_C);
    const double exact = std::exp(-d * d / (r_C * r_C)) - 1.0;
    worst_rel_err = std::max(worst_rel_err, std::abs(g.value - exact) / (10.0 * g.error));
  }
  ok = ok && worst_rel_err <= 1.0;
  detail += fmt("r_m = 0: max |gamma - (e^{-d^2} - 1)| / (10 err) = %.3g (limit 1); ", worst_rel_err);

  const auto g0 = gamma_of_d(0.0, gp, r_C, 1e-9);
  ok = ok && std::abs(g0.value) <= g0.error;
  detail += fmt("gamma(0) = %.3g (err %.3g)", g0.value, g0.error);
  return {ok, detail};
}

// Criterion 9.
Outcome gravity_dressed() {
  const double r_C = 1.0;
  GravityParams gp;
  gp.r_G = r_C;
  gp.r_m = 0.8;
  const auto collapse = SpatialGrid::uniform_3d(-4.5, 4.5, 27);
  std::vector<Point> pos;
  for (double x : {-0.75, -0.25, 0.0, 0.5, 0.75}) pos.push_back(Point{x, 0.0, 0.0});
  const auto bare = build_grw_family(collapse, pos, SmearingFunction::gaussian_amplitude(r_C, 3));
  const auto dressed = grav_unitary(bare, gp, 1.0, 1.0, Units::natural());
  const double sq = dressed_square_deviation(dressed, bare);

  ModelParams p;
  p.lambda_grw = 1.0;
  p.units = Units::natural();
  p.mass = p.m_ref = 1.0;
  p.dt = 0.01;
  p.family = std::make_shared<OperatorFamily>(dressed);
  p.hamiltonian = HermitianOperator::zero(5);
  Vector v = Vector::Ones(5);
  const auto rho0 = DensityMatrix::pure(StateVector::normalized(v));
  const auto chk = grav_master_dephasing_check(rho0, p, gp, 3.0, r_C, 10, 1e-9);
  return {sq < 1e-12 && chk.worst < 1e-3,
          fmt("max |B^dag B - L^2| = %.3g (tol 1e-12); master vs closed-form Gamma(d) max relative deviation %.3g "
              "(tol 1e-3)",
              sq, chk.worst)};
}

// Criterion 10.
Outcome energy_divergence() {
  const double r_C = 1.0, sigma = 1.0;
  RadialWavefunction w;
  w.h = r_C / 400.0;
  for (int i = 0; i <= 4800; ++i) {
    const double r = i * w.h;
    w.psi.emplace_back(std::exp(-r * r / (4.0 * sigma * sigma)));
  }
  const double nrm = std::sqrt(radial_norm(w));
  for (auto& x : w.psi) x /= nrm;
  GravityParams gp;
  gp.r_m = 2.0 * r_C;
  std::vector<double> e;
  for (double rg : {r_C, r_C / 2, r_C / 4, r_C / 8}) {
    gp.r_G = rg;
    e.push_back(energy_after_flash(w, gp, 1.0, Units::natural()));
  }
  double min_ratio = 1e300;
  for (std::size_t i = 1; i < e.size(); ++i) min_ratio = std::min(min_ratio, e[i] / e[i - 1]);
  return {min_ratio > 1.2, fmt("E = %.4g, %.4g, %.4g", e[0], e[1], e[2]) +
                               fmt(", %.4g; smallest successive ratio %.4g (must exceed 1.2)", e[3], min_ratio)};
}

// Criterion 11.
Outcome newtonian_limit() {
  const double width = 1.0, M = 1000.0, m_R = 1.0;
  GravityParams gp;
  gp.G = 1.0;
  gp.r_G = 0.5;
  const auto grid = SpatialGrid::uniform_3d(-5.0, 5.0, 21);
  RealVector rho(static_cast<Eigen::Index>(grid.size()));
  double sum = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto y = grid.position(k);
    rho(static_cast<Eigen::Index>(k)) = std::exp(-(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]) / (2.0 * width * width));
    sum += grid.weight(k) * rho(static_cast<Eigen::Index>(k));
  }
  rho *= M / m_R / sum;
  const double dist = 20.0 * width;
  const auto res = macro_potential(grid, rho, gp, m_R, Point{dist, 0.0, 0.0});
  const double newton = -gp.G * M / dist;
  const double rel = std::abs(res.value - newton) / std::abs(newton);
  return {rel < 0.01, fmt("Phi = %.8g vs -GM/|x| = %.8g, relative deviation %.3g (tol 0.01)", res.value, newton, rel)};
}

// Criterion 12.
Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "cpsim_acceptance_determinism";
  fs::create_directories(dir);
  const std::string grid = R"("grid": {"lower": -4.0, "upper": 4.0, "nodes": 16},
      "initial_state": {"centers": [-1.0, 1.5], "width": 0.6})";
  const std::string base = R"("units": "natural", "lambda_grw": 1.0, "r_C": 1.0, "hopping": 0.3, "dt": 0.005, )";
  const std::vector<std::string> configs = {
      R"({"experiment": "exact", "seed": 5, "params": {)" + base + grid +
          R"(}, "exact": {"gamma": 0.02, "mu": 30.0, "window": 0.3, "samples": 50}})",
      R"({"experiment": "trajectories", "seed": 6, "params": {)" + base + grid +
          R"(}, "trajectories": {"t_end": 1.0, "n_traj": 40}})",
      R"({"experiment": "master", "output_format": "json", "params": {)" + base + grid +
          R"(}, "master": {"t_end": 1.0}})",
      R"({"experiment": "compare", "seed": 8, "params": {)" + base + grid +
          R"(}, "compare": {"t_end": 0.5, "n_traj": 60, "checkpoints": 5}})",
      R"({"experiment": "born", "seed": 9, "params": {"units": "natural", "lambda_grw": 1.0, "r_C": 1.0, "dt": 0.0005},
          "born": {"amplitudes": [0.6, 0.8], "amplification": 40, "t_obs": 0.5, "runs": 50}})",
      R"({"experiment": "gamma", "params": {"units": "natural", "lambda_grw": 1.0, "r_C": 1.0},
          "gravity": {"r_m": 0.5}, "gamma": {"d_values": [0.0, 0.05, 0.3], "quad_tol": 1e-9}})",
      R"({"experiment": "energy", "output_format": "json", "params": {"units": "natural", "lambda_grw": 1.0, "r_C": 1.0},
          "gravity": {"r_m": 1.0}, "energy": {"r_G_values": [1.0, 0.5], "psi_width": 1.0, "r_max": 10.0, "points": 1001}})",
      R"({"experiment": "potential", "params": {"units": "natural", "lambda_grw": 1.0, "r_C": 1.0},
          "gravity": {"G": 1.0, "r_G": 0.5}, "potential": {"source_mass": 10.0, "source_width": 1.0, "half_extent": 4.0,
          "nodes": 9, "probe_distances": [20.0]}})"};
  int identical = 0, round_trips = 0;
  std::string bad;
  for (const auto& text : configs) {
    const auto c = config::parse(text);
    std::string bytes[2];
    for (int rep = 0; rep < 2; ++rep) {
      const auto path = (dir / (c.experiment + std::to_string(rep))).string();
      io::write_file(path, render(c, c.seed, run_experiment(c, c.seed, 1)));
      bytes[rep] = io::read_file(path);
    }
    if (bytes[0] == bytes[1]) ++identical;
    else bad += c.experiment + " differs; ";
    const auto doc = c.output_format == "json" ? io::read_json(bytes[0]) : io::read_csv(bytes[0]);
    const auto again = c.output_format == "json" ? io::to_json(doc.table, doc.metadata)
                                                 : io::to_csv(doc.table, doc.metadata);
    if (again == bytes[0]) ++round_trips;
    else bad += c.experiment + " does not round-trip; ";
  }
  fs::remove_all(dir);
  const int n = static_cast<int>(configs.size());
  return {identical == n && round_trips == n,
          fmt("%.0f/%.0f experiments byte-identical on re-run, %.0f round-trip exactly", identical, n, round_trips) +
              (bad.empty() ? "" : "; " + bad)};
}

}  // namespace

int main() {
  report(1, "exact-chain completeness", exact_chain_completeness);
  report(2, "Markovianity", markovianity);
  report(3, "first-order limit", first_order_limit);
  report(4, "unraveling equivalence", unraveling_equivalence);
  report(5, "indistinguishable-particle operators", indistinguishable_particles);
  report(6, "Born rule", born_rule);
  report(7, "GRW dephasing closed form", grw_dephasing);
  report(8, "gravitational asymptotic", gravitational_asymptotic);
  report(9, "gravity-dressed consistency", gravity_dressed);
  report(10, "energy divergence trend", energy_divergence);
  report(11, "Newtonian limit", newtonian_limit);
  report(12, "determinism", determinism);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures;
}
