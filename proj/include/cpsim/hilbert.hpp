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
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "cpsim/common.hpp"

namespace cpsim {

namespace detail {

inline void check_dimension(Eigen::Index n, const char* what) {
  if (n <= 0 || static_cast<std::size_t>(n) > kMaxDimension)
    throw ContractViolation(std::string(what) + ": dimension " + std::to_string(n) +
                            " outside [1, " + std::to_string(kMaxDimension) + "]");
}

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermiticity_defect(const Matrix& m) {
  return m.size() == 0 ? 0.0 : (m - m.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Normalized pure state. Construction checks the norm; use normalized() to
/// rescale arbitrary amplitudes.
class StateVector {
public:
  static constexpr double kNormTolerance = 1e-10;

  StateVector() = default;

  explicit StateVector(Vector amplitudes) : amp_(std::move(amplitudes)) {
    detail::check_dimension(amp_.size(), "StateVector");
    const double n2 = amp_.squaredNorm();
    if (std::abs(n2 - 1.0) > kNormTolerance)
      throw ContractViolation("StateVector: squared norm " + std::to_string(n2) + " is not 1");
  }

  static StateVector normalized(Vector amplitudes) {
    const double n = amplitudes.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw ContractViolation("StateVector: zero or non-finite norm");
    amplitudes /= n;
    return StateVector(std::move(amplitudes));
  }

  static StateVector basis(Eigen::Index dim, Eigen::Index k) {
    Vector v = Vector::Zero(dim);
    v(k) = 1.0;
    return StateVector(std::move(v));
  }

  const Vector& amplitudes() const noexcept { return amp_; }
  Eigen::Index dim() const noexcept { return amp_.size(); }
  cplx operator[](Eigen::Index k) const { return amp_(k); }

  Matrix projector() const { return amp_ * amp_.adjoint(); }

private:
  Vector amp_;
};

/// Hermitian matrix (Hamiltonians, collapse operators).
class HermitianOperator {
public:
  static constexpr double kTolerance = 1e-12;

  HermitianOperator() = default;

  explicit HermitianOperator(Matrix m) : m_(std::move(m)) {
    require(m_.rows() == m_.cols(), "HermitianOperator: matrix not square");
    detail::check_dimension(m_.rows(), "HermitianOperator");
    const double scale = std::max(1.0, detail::max_abs(m_));
    if (detail::hermiticity_defect(m_) > kTolerance * scale)
      throw ContractViolation("HermitianOperator: matrix is not Hermitian");
  }

  static HermitianOperator zero(Eigen::Index dim) { return HermitianOperator(Matrix::Zero(dim, dim)); }
  static HermitianOperator identity(Eigen::Index dim) {
    return HermitianOperator(Matrix::Identity(dim, dim));
  }
  static HermitianOperator diagonal(const RealVector& d) {
    return HermitianOperator(d.cast<cplx>().asDiagonal().toDenseMatrix());
  }

  const Matrix& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }

private:
  Matrix m_;
};

/// Hermitian, unit-trace, positive semidefinite matrix.
class DensityMatrix {
public:
  static constexpr double kHermitianTolerance = 1e-10;
  static constexpr double kTraceTolerance = 1e-9;
  static constexpr double kPositivityTolerance = 1e-8;

  DensityMatrix() = default;

  explicit DensityMatrix(Matrix m) : m_(std::move(m)) {
    require(m_.rows() == m_.cols(), "DensityMatrix: matrix not square");
    detail::check_dimension(m_.rows(), "DensityMatrix");
    if (detail::hermiticity_defect(m_) > kHermitianTolerance)
      throw ContractViolation("DensityMatrix: not Hermitian");
    const double tr = m_.trace().real();
    if (std::abs(tr - 1.0) > kTraceTolerance)
      throw ContractViolation("DensityMatrix: trace " + std::to_string(tr) + " is not 1");
    if (min_eigenvalue() < -kPositivityTolerance)
      throw ContractViolation("DensityMatrix: negative eigenvalue");
  }

  static DensityMatrix pure(const StateVector& psi) { return DensityMatrix(psi.projector()); }
  static DensityMatrix maximally_mixed(Eigen::Index dim) {
    return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  const Matrix& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }
  cplx operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  double trace() const { return m_.trace().real(); }
  double purity() const { return (m_ * m_).trace().real(); }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

private:
  Matrix m_;
};

/// ⟨ψ|A|ψ⟩. Throws if the imaginary part is not roundoff.
inline double expectation(const HermitianOperator& op, const StateVector& psi) {
  require(op.dim() == psi.dim(), "expectation: dimension mismatch");
  const cplx value = psi.amplitudes().dot(op.matrix() * psi.amplitudes());
  const double scale = std::max(1.0, detail::max_abs(op.matrix()));
  if (std::abs(value.imag()) > 1e-10 * scale)
    throw ContractViolation("expectation: imaginary residue on Hermitian operator");
  return value.real();
}

/// Kronecker product, left factor is the slow (most significant) index.
inline Matrix kron(const Matrix& a, const Matrix& b) { return Eigen::kroneckerProduct(a, b).eval(); }

inline Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

inline StateVector tensor(const StateVector& a, const StateVector& b) {
  return StateVector::normalized(kron(a.amplitudes(), b.amplitudes()));
}

inline HermitianOperator tensor(const HermitianOperator& a, const HermitianOperator& b) {
  return HermitianOperator(kron(a.matrix(), b.matrix()));
}

inline DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  return DensityMatrix(kron(a.matrix(), b.matrix()));
}

/// Partial trace of a matrix on the factorization `dims` (row-major), keeping
/// the factors listed in `keep` in their original order.
inline Matrix partial_trace(const Matrix& rho, std::span<const std::size_t> dims,
                            std::span<const std::size_t> keep) {
  const std::size_t n = dims.size();
  const std::size_t total = std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                                            std::multiplies<>());
  require(rho.rows() == rho.cols() && static_cast<std::size_t>(rho.rows()) == total,
          "partial_trace: matrix does not match factorization");
  std::vector<bool> kept(n, false);
  for (std::size_t f : keep) {
    require(f < n, "partial_trace: selector outside factorization");
    require(!kept[f], "partial_trace: duplicate selector");
    kept[f] = true;
  }

  std::size_t kept_dim = 1, traced_dim = 1;
  for (std::size_t f = 0; f < n; ++f) (kept[f] ? kept_dim : traced_dim) *= dims[f];

  // Strides of each factor in the full index.
  std::vector<std::size_t> stride(n, 1);
  for (std::size_t f = n; f-- > 1;) stride[f - 1] = stride[f] * dims[f];

  // Full offset contributed by a kept multi-index and a traced multi-index.
  auto offsets = [&](bool want_kept, std::size_t count) {
    std::vector<std::size_t> out(count, 0);
    for (std::size_t idx = 0; idx < count; ++idx) {
      std::size_t rem = idx, off = 0;
      for (std::size_t f = n; f-- > 0;) {
        if (kept[f] != want_kept) continue;
        off += (rem % dims[f]) * stride[f];
        rem /= dims[f];
      }
      out[idx] = off;
    }
    return out;
  };
  const auto kept_off = offsets(true, kept_dim);
  const auto traced_off = offsets(false, traced_dim);

  Matrix out = Matrix::Zero(kept_dim, kept_dim);
  for (std::size_t i = 0; i < kept_dim; ++i)
    for (std::size_t j = 0; j < kept_dim; ++j) {
      cplx acc = 0.0;
      for (std::size_t t : traced_off) acc += rho(kept_off[i] + t, kept_off[j] + t);
      out(i, j) = acc;
    }
  return out;
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> dims,
                                   std::span<const std::size_t> keep) {
  return DensityMatrix(partial_trace(rho.matrix(), dims, keep));
}

/// Cached eigendecomposition of a Hermitian generator, for repeated
/// exp(-i H t / hbar) evaluations.
class HermitianPropagator {
public:
  HermitianPropagator(const HermitianOperator& h, Units units) : hbar_(units.hbar) {
    require(hbar_ > 0.0, "HermitianPropagator: hbar must be positive");
    zero_ = detail::max_abs(h.matrix()) == 0.0;
    if (!zero_) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(h.matrix());
      vecs_ = es.eigenvectors();
      vals_ = es.eigenvalues();
    }
    dim_ = h.dim();
  }

  bool is_trivial() const noexcept { return zero_; }

  /// Dense unitary exp(-i H dt / hbar).
  Matrix unitary(double dt) const {
    if (zero_) return Matrix::Identity(dim_, dim_);
    Vector phases(vals_.size());
    for (Eigen::Index k = 0; k < vals_.size(); ++k) phases(k) = std::exp(-kI * vals_(k) * dt / hbar_);
    return vecs_ * phases.asDiagonal() * vecs_.adjoint();
  }

  Vector apply(const Vector& psi, double dt) const {
    if (zero_) return psi;
    Vector c = vecs_.adjoint() * psi;
    for (Eigen::Index k = 0; k < vals_.size(); ++k) c(k) *= std::exp(-kI * vals_(k) * dt / hbar_);
    return vecs_ * c;
  }

private:
  double hbar_;
  bool zero_ = true;
  Eigen::Index dim_ = 0;
  Matrix vecs_;
  RealVector vals_;
};

/// exp(-i H dt / hbar) |ψ⟩ by Hermitian eigendecomposition.
inline StateVector evolve_unitary(const StateVector& psi, const HermitianOperator& h, double dt,
                                  Units units = Units::si()) {
  require(dt >= 0.0, "evolve_unitary: dt must be non-negative");
  require(h.dim() == psi.dim(), "evolve_unitary: dimension mismatch");
  HermitianPropagator prop(h, units);
  return StateVector(prop.apply(psi.amplitudes(), dt));
}

/// f(A) for Hermitian A via eigendecomposition.
template <typename F>
Matrix hermitian_function(const Matrix& a, F&& f) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  Vector d(es.eigenvalues().size());
  for (Eigen::Index k = 0; k < d.size(); ++k) d(k) = f(es.eigenvalues()(k));
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

inline bool is_diagonal(const Matrix& m, double tol = 0.0) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (i != j && std::abs(m(i, j)) > tol) return false;
  return true;
}

}  // namespace cpsim
