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

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace cpsim;
using cpsim::testing::grw_params;
using cpsim::testing::random_state;
using cpsim::testing::two_packets;

namespace {

Matrix pauli_z() {
  Matrix z = Matrix::Zero(2, 2);
  z(0, 0) = 1.0;
  z(1, 1) = -1.0;
  return z;
}

// Qubit with a single dense collapse operator sigma_z on a one-node grid.
ModelParams qubit_params(double lambda, double dt, double delta) {
  ModelParams p;
  p.lambda_grw = lambda;
  p.units = Units::natural();
  p.c_light = 1.0;
  p.mass = p.m_ref = 1.0;
  p.dt = dt;
  const auto grid = SpatialGrid::uniform_1d(0.0, 1.0, 1);
  p.family = std::make_shared<OperatorFamily>(FamilyKind::grw_position, grid, std::vector<Matrix>{pauli_z()});
  p.hamiltonian = HermitianOperator(0.5 * delta * pauli_z());
  return p;
}

// GRW family on a wide collapse grid with a few interior basis points, so
// that sum_k w_k L_k^2 is the identity to roundoff.
ModelParams interior_params(double lambda, double dt, double mass) {
  ModelParams p;
  p.lambda_grw = lambda;
  p.units = Units::natural();
  p.c_light = 1.0;
  p.mass = mass;
  p.m_ref = 1.0;
  p.dt = dt;
  const auto grid = SpatialGrid::uniform_1d(-12.0, 12.0, 96);
  std::vector<Point> pos{{-1.0, 0, 0}, {0.0, 0, 0}, {0.5, 0, 0}, {2.0, 0, 0}};
  p.family = std::make_shared<OperatorFamily>(build_grw_family(grid, pos, SmearingFunction::gaussian_amplitude(1.0, 1)));
  p.hamiltonian = HermitianOperator::zero(4);
  return p;
}

}  // namespace

TEST(Dissipator, PauliZOracle) {
  Matrix rho(2, 2);
  rho << 0.6, cplx(0.1, 0.2), cplx(0.1, -0.2), 0.4;
  const Matrix d = dissipator(pauli_z(), rho);
  EXPECT_NEAR(std::abs(d(0, 0)), 0.0, 1e-16);
  EXPECT_NEAR(std::abs(d(1, 1)), 0.0, 1e-16);
  EXPECT_NEAR(std::abs(d(0, 1) + 2.0 * rho(0, 1)), 0.0, 1e-16);
}

// d rho01/dt = -(i delta + 2 lambda) rho01 for L = sigma_z, H = delta sigma_z / 2.
TEST(Lindblad, DenseQubitDephasingOracle) {
  const double lambda = 0.7, delta = 1.9, dt = 1e-3;
  const auto p = qubit_params(lambda, dt, delta);
  Vector v(2);
  v << 0.6, cplx(0.0, 0.8);
  const Matrix rho0 = StateVector(v).projector();
  const LindbladIntegrator integ(p);
  const Matrix rho = integ.evolve(rho0, 1500);
  const double t = 1.5;
  const cplx expect = rho0(0, 1) * std::exp(cplx(-2.0 * lambda * t, -delta * t));
  EXPECT_NEAR(std::abs(rho(0, 1) - expect), 0.0, 1e-12);
  EXPECT_NEAR(rho(0, 0).real(), rho0(0, 0).real(), 1e-14);
  EXPECT_NEAR(rho.trace().real(), 1.0, 1e-14);
}

TEST(Lindblad, DiagonalFamilyMatchesLatticeClosedForm) {
  const auto p = interior_params(1.3, 0.005, 2.0);
  const auto& fam = *p.family;
  // Independent lattice sums for Gamma_ij.
  auto gam = [&](Eigen::Index i, Eigen::Index j) {
    double gij = 0.0, gii = 0.0, gjj = 0.0;
    for (std::size_t k = 0; k < fam.size(); ++k) {
      const double bi = fam.diagonals()(i, Eigen::Index(k)).real(), bj = fam.diagonals()(j, Eigen::Index(k)).real();
      gij += fam.weight(k) * bi * bj;
      gii += fam.weight(k) * bi * bi;
      gjj += fam.weight(k) * bj * bj;
    }
    return gij - 0.5 * (gii + gjj);
  };
  RngStream rng(1, 0);
  const auto rho0 = DensityMatrix::pure(random_state(4, rng));
  const auto chk = dephasing_check(rho0, p, 2.0, gam, 8);
  EXPECT_LT(chk.worst, 1e-9);
  EXPECT_LT(chk.diagonal_drift, 1e-14);
}

TEST(Lindblad, PreservesTraceHermiticityPositivity) {
  auto p = grw_params(16, 4.0, 1.0, 0.002, 0.5);
  const auto psi = two_packets(p.grid(), -1.5, 1.5);
  const LindbladIntegrator integ(p);
  Matrix rho = psi.projector();
  for (int s = 0; s < 200; ++s) rho = integ.step(rho);
  const DensityMatrix dm(rho);  // validates trace, hermiticity, positivity
  EXPECT_NEAR(dm.trace(), 1.0, 1e-12);
  EXPECT_LT(dm.purity(), 1.0);
}

TEST(Lindblad, ZeroRateIsUnitary) {
  auto p = grw_params(12, 3.0, 0.0, 0.01, 0.7);
  const auto psi = two_packets(p.grid(), -1.0, 1.0);
  const Matrix rho = LindbladIntegrator(p).evolve(psi.projector(), 100);
  const auto exact = evolve_unitary(psi, p.hamiltonian, 1.0, p.units);
  EXPECT_LT((rho - exact.projector()).norm(), 1e-9);
}

TEST(Lindblad, OversizedStepIsRejected) {
  const auto p = qubit_params(50.0, 0.2, 0.0);
  Vector v(2);
  v << 1.0, 1.0;
  const LindbladIntegrator integ(p);
  EXPECT_THROW(integ.evolve(StateVector::normalized(v).projector(), 5), StepSizeError);
}

TEST(FlashRate, SumsToExpectedTotal) {
  const auto p = interior_params(0.4, 0.01, 3.0);
  RngStream rng(2, 0);
  const auto psi = random_state(4, rng);
  double total = 0.0;
  for (double r : flash_rate_density(psi, p)) total += r;
  // K = identity, so the total is lambda * m / m_R.
  EXPECT_NEAR(total, 0.4 * 3.0, 1e-11);
}

TEST(Sse, ZeroRateIsUnitary) {
  auto p = grw_params(12, 3.0, 0.0, 0.01, 0.7);
  const auto psi = two_packets(p.grid(), -1.0, 1.0);
  SseIntegrator integ(p);
  Vector v = psi.amplitudes();
  RngStream rng(3, 0);
  for (int s = 0; s < 100; ++s) EXPECT_FALSE(integ.step(v, rng, s * p.dt));
  const auto exact = evolve_unitary(psi, p.hamiltonian, 1.0, p.units);
  EXPECT_NEAR(std::abs(exact.amplitudes().dot(v)), 1.0, 1e-12);
}

TEST(Sse, StepSizeGuard) {
  const auto p = interior_params(10.0, 0.01, 1.0);  // dt * rate = 0.1
  Vector v = Vector::Ones(4) / 2.0;
  RngStream rng(4, 0);
  EXPECT_THROW(SseIntegrator(p).step(v, rng, 0.0), StepSizeError);
}

// With K = identity the flash count over [0, T] is Poisson(lambda s T).
TEST(Sse, FlashCountIsPoisson) {
  const auto p = interior_params(0.5, 0.01, 2.0);
  Vector v(4);
  v << 1.0, 0.5, cplx(0, 0.5), 0.3;
  TrajectoryOptions opt;
  opt.store_states = false;
  opt.checkpoints = 1;
  const auto runs = run_trajectories(StateVector::normalized(v), p, 2.0, 3000, 5, opt);
  double sum = 0.0;
  for (const auto& r : runs) sum += r.flashes.size();
  const double mean = 0.5 * 2.0 * 2.0;
  EXPECT_NEAR(sum / runs.size(), mean, 5.0 * std::sqrt(mean / runs.size()));
}

// Without flashes and with H = 0, psi_i(t) ~ psi_i(0) exp(-lambda s K_i t / 2).
TEST(Sse, NoFlashDrift) {
  auto p = grw_params(16, 4.0, 0.2, 0.001, 0.0);
  const auto psi = two_packets(p.grid(), -3.0, 0.0);
  const auto& fam = *p.family;
  RealVector k = RealVector::Zero(fam.dim());
  for (std::size_t j = 0; j < fam.size(); ++j) k += fam.weight(j) * fam.diagonals().col(Eigen::Index(j)).cwiseAbs2();
  SseIntegrator integ(p);
  for (std::uint64_t seed = 0;; ++seed) {
    ASSERT_LT(seed, 50u);
    Vector v = psi.amplitudes();
    RngStream rng(6, seed);
    bool flashed = false;
    for (int s = 0; s < 500 && !flashed; ++s) flashed = integ.step(v, rng, s * p.dt).has_value();
    if (flashed) continue;
    Vector expect = psi.amplitudes();
    for (Eigen::Index i = 0; i < expect.size(); ++i) expect(i) *= std::exp(-0.5 * 0.2 * k(i) * 0.5);
    expect.normalize();
    EXPECT_LT((v - expect).norm(), 1e-6);
    break;
  }
}

TEST(Trajectories, ThreadCountDoesNotChangeResults) {
  auto p = grw_params(16, 4.0, 1.0, 0.002, 0.5);
  const auto psi = two_packets(p.grid(), -1.5, 1.5);
  TrajectoryOptions one, many;
  many.threads = 3;
  const auto a = run_trajectories(psi, p, 0.5, 30, 9, one);
  const auto b = run_trajectories(psi, p, 0.5, 30, 9, many);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].flashes.size(), b[i].flashes.size());
    for (std::size_t j = 0; j < a[i].flashes.size(); ++j) {
      EXPECT_EQ(a[i].flashes[j].node, b[i].flashes[j].node);
      EXPECT_EQ(a[i].flashes[j].time, b[i].flashes[j].time);
    }
    EXPECT_EQ(a[i].states.back().amplitudes(), b[i].states.back().amplitudes());
  }
}

TEST(Trajectories, StepCountContract) {
  EXPECT_EQ(step_count(1.0, 0.01), 100u);
  EXPECT_THROW(step_count(1.0, 0.3), ContractViolation);
  const auto cps = checkpoint_steps(100, 4);
  EXPECT_EQ(cps, (std::vector<std::size_t>{0, 25, 50, 75, 100}));
}

TEST(Unraveling, DenseQubitEnsembleMatchesMaster) {
  const auto p = qubit_params(1.0, 0.002, 1.0);
  Vector v(2);
  v << 0.6, 0.8;
  const auto cmp = ensemble_vs_master(StateVector(v), p, 1.0, 2000, 17, 5);
  EXPECT_TRUE(cmp.within_bound) << cmp.max_distance;
}

TEST(CoarseGrain, BiasShrinksLinearlyInGamma) {
  const auto p = interior_params(1.0, 0.01, 1.0);
  Vector v(4);
  v << 1.0, 0.3, 0.2, 0.5;
  const auto psi = StateVector::normalized(v);
  CoarseGrainOptions opt;
  opt.window = 0.05;
  std::vector<double> lg, lb;
  for (double g : {1e-2, 1e-3, 1e-4}) {
    opt.gamma = g;
    const auto rep = coarse_grain_prediction(p, psi, opt);
    lg.push_back(std::log(g));
    lb.push_back(std::log(rep.bias()));
    EXPECT_NEAR(rep.mu * g, 1.0, 1e-15);  // mu = lambda hbar^2 / (c gamma), c = 1
  }
  EXPECT_NEAR(stats::fit_slope(lg, lb), 1.0, 0.02);
}

TEST(CoarseGrain, SamplingAgreesWithExactLaw) {
  const auto p = interior_params(2.0, 0.01, 1.0);
  Vector v(4);
  v << 1.0, 0.3, 0.2, 0.5;
  CoarseGrainOptions opt;
  opt.window = 0.1;
  opt.gamma = 0.3;
  opt.samples = 20000;
  opt.seed = 21;
  const auto rep = coarse_grain_consistency(p, StateVector::normalized(v), opt);
  EXPECT_EQ(rep.no_flash + rep.one_flash + rep.two_plus, opt.samples);
  EXPECT_LT(std::abs(rep.noflash_z()), 4.0);
  EXPECT_LT(rep.max_single_flash_z(), 4.5);
  // First order is exact in the gamma -> 0 limit only; here it is an approximation.
  EXPECT_NEAR(rep.p_noflash_exact, rep.p_noflash_first_order, 2.0 * rep.first_order_square + 0.01);
}
