// Copyright 2026 The OQHO Memory Authors
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
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace oqho {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using CMat = Mat<std::complex<Scalar>>;
template <class Scalar>
using CVec = Vec<std::complex<Scalar>>;

using Index = Eigen::Index;

/// Failure classes. The CLI maps them onto process exit codes.
enum class ErrorKind {
  Dimension,         // shapes of the inputs do not fit together
  Validation,        // a domain invariant is violated by user data
  Precondition,      // an operation was called outside its domain
  SingularEquation,  // a matrix equation has a resonant spectrum
  Numerical,         // overflow, non-convergence, ill-conditioning
  Consistency,       // an internal identity failed (a bug, not user error)
  Parse,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error(ErrorKind::Dimension, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::Validation, what) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what)
      : Error(ErrorKind::Precondition, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::Numerical, what) {}
};

class ConsistencyError : public Error {
 public:
  explicit ConsistencyError(const std::string& what)
      : Error(ErrorKind::Consistency, what) {}
};

/// Raised when the spectra of M1 and -M2 intersect; carries the offending pair.
class SingularEquationError : public Error {
 public:
  SingularEquationError(const std::string& what, std::complex<double> left,
                        std::complex<double> right)
      : Error(ErrorKind::SingularEquation, what), left_(left), right_(right) {}
  std::complex<double> left_eigenvalue() const noexcept { return left_; }
  std::complex<double> right_eigenvalue() const noexcept { return right_; }

 private:
  std::complex<double> left_;
  std::complex<double> right_;
};

namespace detail {

inline std::string shape(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <class Derived>
std::string shape(const Eigen::EigenBase<Derived>& m) {
  return shape(m.rows(), m.cols());
}

template <class Derived>
void require_square(const Eigen::EigenBase<Derived>& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(name) + " must be square, got " +
                         shape(m));
  }
}

}  // namespace detail

}  // namespace oqho
