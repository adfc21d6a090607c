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

#include <array>
#include <cmath>
#include <set>

#include "test_util.hpp"

using namespace cpsim;
using cpsim::testing::random_hermitian;
using cpsim::testing::random_state;

// Known-answer vectors for philox4x32-10 from the Random123 distribution.
TEST(Philox, KnownAnswerVectors) {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  EXPECT_EQ(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::block(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}),
            (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::block(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}),
            (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(RngStream, SameSeedAndStreamRepeat) {
  RngStream a(7, 3), b(7, 3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, StreamsDiffer) {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t s = 0; s < 64; ++s) firsts.insert(RngStream(1, s).next_u64());
  for (std::uint64_t seed = 0; seed < 64; ++seed) firsts.insert(RngStream(seed, 1000).next_u64());
  EXPECT_EQ(firsts.size(), 128u);
}

TEST(RngStream, UniformMomentsAndRange) {
  RngStream rng(11, 0);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sum2 += u * u;
  }
  // Mean 1/2 with sd sqrt(1/12n); second moment 1/3.
  EXPECT_NEAR(sum / n, 0.5, 5.0 * std::sqrt(1.0 / (12.0 * n)));
  EXPECT_NEAR(sum2 / n, 1.0 / 3.0, 5.0 * std::sqrt(4.0 / (45.0 * n)));
}

TEST(RngStream, ExponentialMean) {
  RngStream rng(12, 0);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rng.exponential(4.0);
  EXPECT_NEAR(sum / n, 0.25, 5.0 * 0.25 / std::sqrt(n));
}

TEST(RngStream, CategoricalFrequencies) {
  RngStream rng(13, 0);
  const std::array<double, 4> w{0.1, 0.0, 0.6, 0.3};
  std::array<int, 4> hits{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++hits[rng.categorical(w, 1.0)];
  EXPECT_EQ(hits[1], 0);
  for (int k : {0, 2, 3}) EXPECT_NEAR(hits[k] / double(n), w[k], 5.0 * std::sqrt(w[k] * (1 - w[k]) / n));
}

TEST(StateVector, RejectsUnnormalized) {
  Vector v(2);
  v << 1.0, 1.0;
  EXPECT_THROW(StateVector{v}, ContractViolation);
  EXPECT_NEAR(StateVector::normalized(v).amplitudes().norm(), 1.0, 1e-15);
  EXPECT_THROW(StateVector::normalized(Vector::Zero(3)), ContractViolation);
  EXPECT_THROW(StateVector::normalized(Vector(0)), ContractViolation);
}

TEST(HermitianOperator, RejectsNonHermitian) {
  Matrix m(2, 2);
  m << 1.0, cplx(0, 1), cplx(0, 1), 2.0;
  EXPECT_THROW(HermitianOperator{m}, ContractViolation);
  m(1, 0) = cplx(0, -1);
  EXPECT_NO_THROW(HermitianOperator{m});
}

TEST(DensityMatrix, Invariants) {
  Matrix m = Matrix::Identity(2, 2);
  EXPECT_THROW(DensityMatrix{m}, ContractViolation);  // trace 2
  Matrix neg(2, 2);
  neg << 1.2, 0.0, 0.0, -0.2;
  EXPECT_THROW(DensityMatrix{neg}, ContractViolation);
  const auto mixed = DensityMatrix::maximally_mixed(4);
  EXPECT_NEAR(mixed.purity(), 0.25, 1e-15);
  RngStream rng(1, 0);
  const auto pure = DensityMatrix::pure(random_state(5, rng));
  EXPECT_NEAR(pure.purity(), 1.0, 1e-14);
  EXPECT_NEAR(pure.trace(), 1.0, 1e-14);
}

TEST(Expectation, MatchesMatrixElement) {
  RngStream rng(2, 0);
  const HermitianOperator h(random_hermitian(4, rng));
  const auto psi = random_state(4, rng);
  const cplx direct = psi.amplitudes().adjoint() * h.matrix() * psi.amplitudes();
  EXPECT_NEAR(expectation(h, psi), direct.real(), 1e-14);
}

TEST(PartialTrace, ProductStateRecoversFactors) {
  RngStream rng(3, 0);
  const auto a = DensityMatrix::pure(random_state(2, rng));
  const auto b = DensityMatrix::pure(random_state(3, rng));
  const auto ab = tensor(a, b);
  const std::array<std::size_t, 2> dims{2, 3};
  const std::array<std::size_t, 1> keep0{0}, keep1{1};
  EXPECT_LT((partial_trace(ab.matrix(), dims, keep0) - a.matrix()).norm(), 1e-14);
  EXPECT_LT((partial_trace(ab.matrix(), dims, keep1) - b.matrix()).norm(), 1e-14);
}

TEST(PartialTrace, BellStateIsMaximallyMixed) {
  Vector bell = Vector::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  const std::array<std::size_t, 2> dims{2, 2};
  const std::array<std::size_t, 1> keep{1};
  const Matrix r = partial_trace(Matrix(bell * bell.adjoint()), dims, keep);
  EXPECT_LT((r - 0.5 * Matrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(PartialTrace, MiddleFactorOfThree) {
  RngStream rng(4, 0);
  const Matrix a = DensityMatrix::pure(random_state(2, rng)).matrix();
  const Matrix b = DensityMatrix::pure(random_state(3, rng)).matrix();
  const Matrix c = DensityMatrix::pure(random_state(2, rng)).matrix();
  const std::array<std::size_t, 3> dims{2, 3, 2};
  const std::array<std::size_t, 1> keep{1};
  const std::array<std::size_t, 2> keep02{0, 2};
  EXPECT_LT((partial_trace(kron(kron(a, b), c), dims, keep) - b).norm(), 1e-14);
  EXPECT_LT((partial_trace(kron(kron(a, b), c), dims, keep02) - kron(a, c)).norm(), 1e-14);
  const std::array<std::size_t, 2> dup{1, 1};
  EXPECT_THROW(partial_trace(kron(kron(a, b), c), dims, dup), ContractViolation);
}

// exp(-i w sigma_x t) = cos(wt) I - i sin(wt) sigma_x.
TEST(HermitianPropagator, PauliRotationOracle) {
  Matrix sx(2, 2);
  sx << 0, 1, 1, 0;
  const double w = 1.3, t = 0.7;
  HermitianPropagator prop(HermitianOperator(w * sx), Units::natural());
  const Matrix expect = std::cos(w * t) * Matrix::Identity(2, 2) - kI * std::sin(w * t) * sx;
  EXPECT_LT((prop.unitary(t) - expect).norm(), 1e-14);
  Vector psi(2);
  psi << 1.0, 0.0;
  EXPECT_LT((prop.apply(psi, t) - expect * psi).norm(), 1e-14);
}

TEST(HermitianPropagator, ConservesNormAndEnergy) {
  RngStream rng(5, 0);
  const HermitianOperator h(random_hermitian(6, rng));
  const auto psi = random_state(6, rng);
  const auto out = evolve_unitary(psi, h, 2.5, Units::natural());
  EXPECT_NEAR(out.amplitudes().norm(), 1.0, 1e-13);
  EXPECT_NEAR(expectation(h, out), expectation(h, psi), 1e-12);
  HermitianPropagator prop(h, Units::natural());
  const Matrix u = prop.unitary(0.3);
  EXPECT_LT((u * u.adjoint() - Matrix::Identity(6, 6)).norm(), 1e-13);
  EXPECT_THROW(evolve_unitary(psi, h, -1.0), ContractViolation);
}

TEST(HermitianFunction, SquareMatchesProduct) {
  RngStream rng(6, 0);
  const Matrix a = random_hermitian(5, rng);
  EXPECT_LT((hermitian_function(a, [](double v) { return v * v; }) - a * a).norm(), 1e-12);
}

TEST(Quadrature, ReferenceIntegrals) {
  auto s = quad::integrate([](double x) { return std::sin(x); }, 0.0, kPi);
  EXPECT_TRUE(s.converged);
  EXPECT_NEAR(s.value, 2.0, 1e-13);
  // Integrable kink at 1/3 and endpoint singularity of the derivative.
  const std::array<double, 1> bp{1.0 / 3.0};
  auto k = quad::integrate([](double x) { return std::abs(x - 1.0 / 3.0) + std::sqrt(x); }, 0.0, 1.0, {}, bp);
  EXPECT_TRUE(k.converged);
  EXPECT_NEAR(k.value, (1.0 / 18.0 + 2.0 / 9.0) + 2.0 / 3.0, 1e-10);
  auto g = quad::integrate([](double x) { return std::exp(-x * x); }, -10.0, 10.0);
  EXPECT_NEAR(g.value, std::sqrt(kPi), 1e-13);
  EXPECT_LE(std::abs(g.value - std::sqrt(kPi)), std::max(g.error, 1e-15) * 10);
}

TEST(Quadrature, ReportsNonConvergence) {
  quad::Options opt;
  opt.max_segments = 3;
  opt.abs_tol = 1e-14;
  auto f = [](double x) { return 1.0 / std::sqrt(x); };
  EXPECT_FALSE(quad::integrate(f, 0.0, 1.0, opt).converged);
  EXPECT_THROW(quad::integrate_or_throw(f, 0.0, 1.0, opt), ConvergenceError);
}

TEST(SpatialGrid, UniformGeometry) {
  const auto g = SpatialGrid::uniform_1d(-2.0, 2.0, 8);
  EXPECT_EQ(g.size(), 8u);
  double w = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) w += g.weight(k);
  EXPECT_NEAR(w, 4.0, 1e-14);
  EXPECT_NEAR(g.volume(), 4.0, 1e-14);
  EXPECT_NEAR(g.position(0)[0], -1.75, 1e-14);
  EXPECT_EQ(g.nearest(Point{0.1, 0, 0}), 4u);
  EXPECT_EQ(g.cell_of(Point{-2.0, 0, 0}), 0u);
  EXPECT_EQ(g.cell_of(Point{1.99, 0, 0}), 7u);
  const auto g3 = SpatialGrid::uniform_3d(0.0, 3.0, 3);
  EXPECT_EQ(g3.size(), 27u);
  EXPECT_NEAR(g3.volume(), 27.0, 1e-13);
  EXPECT_NEAR(g3.weight(5), 1.0, 1e-14);
}

TEST(FockBasis, Dimensions) {
  const auto lat = SpatialGrid::uniform_1d(0.0, 4.0, 4);
  // Bosons: sum_n C(M + n - 1, n) for n <= 2 = 1 + 4 + 10.
  EXPECT_EQ(FockBasis(lat, Statistics::boson, 2, {{"a", 1.0}}).dim(), 15u);
  // Fermions: 1 + 4 + 6 + 4.
  EXPECT_EQ(FockBasis(lat, Statistics::fermion, 3, {{"a", 1.0}}).dim(), 15u);
  // Two species double the modes.
  EXPECT_EQ(FockBasis(lat, Statistics::fermion, 1, {{"a", 1.0}, {"b", 2.0}}).dim(), 9u);
}

TEST(FockBasis, FermionAnticommutators) {
  const auto lat = SpatialGrid::uniform_1d(0.0, 3.0, 3);
  const FockBasis b(lat, Statistics::fermion, 3, {{"a", 1.0}});
  const auto n = static_cast<Eigen::Index>(b.dim());
  for (std::size_t i = 0; i < b.modes(); ++i)
    for (std::size_t j = 0; j < b.modes(); ++j) {
      const Matrix ai = Matrix(b.annihilation(i)), aj = Matrix(b.annihilation(j));
      const Matrix anti = ai * aj.adjoint() + aj.adjoint() * ai;
      const Matrix expect = (i == j ? 1.0 : 0.0) * Matrix::Identity(n, n);
      EXPECT_LT((anti - expect).norm(), 1e-14) << i << "," << j;
      EXPECT_LT((ai * aj + aj * ai).norm(), 1e-14);
    }
}

TEST(FockBasis, BosonCommutatorsBelowTruncation) {
  const auto lat = SpatialGrid::uniform_1d(0.0, 3.0, 3);
  const FockBasis b(lat, Statistics::boson, 3, {{"a", 1.0}});
  const auto [first, last] = b.block(2);  // states with n < max: commutator exact there
  for (std::size_t i = 0; i < b.modes(); ++i)
    for (std::size_t j = 0; j < b.modes(); ++j) {
      const Matrix ai = Matrix(b.annihilation(i)), aj = Matrix(b.annihilation(j));
      const Matrix comm = ai * aj.adjoint() - aj.adjoint() * ai;
      for (std::size_t s = 0; s < last; ++s)
        for (std::size_t t = 0; t < last; ++t) {
          const double expect = (i == j && s == t) ? 1.0 : 0.0;
          EXPECT_NEAR(std::abs(comm(Eigen::Index(s), Eigen::Index(t)) - expect), 0.0, 1e-14);
        }
      (void)first;
    }
}

TEST(FockBasis, NumberOperatorIsDiagonal) {
  const auto lat = SpatialGrid::uniform_1d(0.0, 3.0, 3);
  const FockBasis b(lat, Statistics::boson, 3, {{"a", 1.0}});
  for (std::size_t m = 0; m < b.modes(); ++m) {
    const Matrix a = Matrix(b.annihilation(m));
    const Matrix n = a.adjoint() * a;
    EXPECT_LT((n - Matrix(b.number_diagonal(m).cast<cplx>().asDiagonal())).norm(), 1e-13);
  }
}

TEST(Stats, WilsonReference) {
  // 50 of 100 at 95%: centre 0.5, half width 0.0962 (standard tables).
  const auto iv = stats::wilson(50, 100, 0.95);
  EXPECT_NEAR(iv.lower, 0.40383153, 1e-7);
  EXPECT_NEAR(iv.upper, 0.59616847, 1e-7);
  const auto zero = stats::wilson(0, 40, 0.99);
  EXPECT_EQ(zero.lower, 0.0);
  EXPECT_GT(zero.upper, 0.0);
  EXPECT_THROW(stats::wilson(1, 0), ContractViolation);
}

TEST(Stats, SlopeOfLine) {
  const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 5, 7};
  EXPECT_NEAR(stats::fit_slope(x, y), 2.0, 1e-15);
}
