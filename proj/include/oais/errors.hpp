// Copyright 2026 The oais Authors
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

#ifndef OAIS_ERRORS_HPP
#define OAIS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace oais {

/// Process exit codes used by the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitUnsupportedDimension = 4;

/// Bad configuration: unknown keys, missing keys, unresolved identifiers.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An estimator was requested that the given inputs cannot support
/// (e.g. a pathwise gradient without a target gradient).
class UnsupportedEstimatorError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// A caller broke an operation precondition (dimension mismatch etc.).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base class for runtime numerical failures.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter trajectory left the finite / bounded region.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(long iteration, double theta_norm)
      : NumericalError("divergence at iteration " + std::to_string(iteration) +
                       ", |theta| = " + std::to_string(theta_norm)),
        iteration_(iteration),
        theta_norm_(theta_norm) {}

  long iteration() const { return iteration_; }
  double theta_norm() const { return theta_norm_; }

 private:
  long iteration_;
  double theta_norm_;
};

/// Every importance weight vanished; the ensemble carries no information.
class DegenerateEnsembleError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A quadrature integrand does not decay inside the integration bounds.
class HeavyTailError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A non-finite value appeared where a finite one was required.
class NonFiniteError : public NumericalError {
 public:
  NonFiniteError(const std::string& what, long index)
      : NumericalError(what + " (index " + std::to_string(index) + ")"),
        index_(index) {}

  long index() const { return index_; }

 private:
  long index_;
};

/// Quadrature requested above the supported dimension.
class UnsupportedDimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

NonFiniteError non_finite(const std::string& what, long index);

/// Maps an exception type onto the CLI exit-code contract.
int exit_code_for(const std::exception& e);

}  // namespace oais

#endif  // OAIS_ERRORS_HPP
