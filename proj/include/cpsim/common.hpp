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

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace cpsim {

using cplx = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Largest total Hilbert-space dimension any dense object may have.
inline constexpr std::size_t kMaxDimension = 4096;

namespace constants {
inline constexpr double hbar = 1.054571817e-34;      // J s
inline constexpr double c_light = 299792458.0;       // m/s
inline constexpr double G = 6.67430e-11;             // m^3 kg^-1 s^-2
inline constexpr double nucleon_mass = 1.6726e-27;   // kg, default reference mass
inline constexpr double grw_collapse_radius = 1e-7;  // m
}  // namespace constants

// Error hierarchy. The CLI maps these onto exit codes, so every failure a
// caller can trigger should surface as one of them.

/// A precondition or invariant of an operation was violated.
class ContractViolation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Argument outside the domain where a formula is defined.
class DomainError : public ContractViolation {
public:
  using ContractViolation::ContractViolation;
};

/// Integrator step too large for the stated validity condition.
class StepSizeError : public ContractViolation {
public:
  using ContractViolation::ContractViolation;
};

/// Numerical procedure did not reach its tolerance; carries the best estimate.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, double best_estimate, double error_estimate)
      : std::runtime_error(what), best_(best_estimate), err_(error_estimate) {}

  double best_estimate() const noexcept { return best_; }
  double error_estimate() const noexcept { return err_; }

private:
  double best_;
  double err_;
};

/// Malformed or schema-invalid experiment configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

/// Reduced Planck constant used by an evolution. SI by default; tests may
/// switch to natural units where hbar = 1.
struct Units {
  double hbar = constants::hbar;

  static Units si() { return Units{constants::hbar}; }
  static Units natural() { return Units{1.0}; }
};

}  // namespace cpsim
