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

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "oqho/types.hpp"

namespace oqho {

/// The 2x2 symplectic unit [[0, 1], [-1, 0]].
template <class S>
Mat<S> j_bar() {
  Mat<S> j(2, 2);
  j << S(0), S(1), S(-1), S(0);
  return j;
}

/// I_{m/2} (x) j_bar, the canonical antisymmetric orthogonal form of order m.
template <class S>
Mat<S> symplectic_unit(Index m) {
  if (m <= 0 || m % 2 != 0) {
    throw ValidationError("symplectic unit requires a positive even order, got " +
                          std::to_string(m));
  }
  Mat<S> j = Mat<S>::Zero(m, m);
  for (Index k = 0; k < m; k += 2) {
    j(k, k + 1) = S(1);
    j(k + 1, k) = S(-1);
  }
  return j;
}

/// Frobenius inner product <a, b> = Tr(a^T b).
template <class D1, class D2>
typename D1::Scalar frobenius_inner(const Eigen::MatrixBase<D1>& a,
                                    const Eigen::MatrixBase<D2>& b) {
  return (a.array() * b.array()).sum();
}

/// Orthogonal projection onto symmetric matrices, (L + L^T) / 2.
template <class Derived>
Mat<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& l) {
  using S = typename Derived::Scalar;
  return S(0.5) * (l + l.transpose());
}

template <class D1, class D2>
Mat<typename D1::Scalar> kron(const Eigen::MatrixBase<D1>& a,
                              const Eigen::MatrixBase<D2>& b) {
  using S = typename D1::Scalar;
  Mat<S> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matrix exponential

/// e^{tA} by scaling and squaring with a diagonal Pade approximant.
template <class Derived>
Mat<typename Derived::Scalar> matrix_exp(const Eigen::MatrixBase<Derived>& a,
                                         typename Derived::Scalar t) {
  using S = typename Derived::Scalar;
  detail::require_square(a, "matrix_exp argument");
  if (!a.allFinite() || !std::isfinite(t)) {
    throw NumericalError("matrix_exp: non-finite input");
  }
  const Mat<S> scaled = t * a;
  Mat<S> out = scaled.exp();
  if (!out.allFinite()) {
    std::ostringstream msg;
    msg << "matrix_exp: overflow for ||tA|| = " << scaled.norm();
    throw NumericalError(msg.str());
  }
  return out;
}

/// Returns (e^{tA}, int_0^t e^{sA} ds) from one exponential of the augmented
/// matrix [[A, I], [0, 0]]. e^{tA} - I = A * integral is then free of
/// cancellation for small t.
template <class Derived>
std::pair<Mat<typename Derived::Scalar>, Mat<typename Derived::Scalar>>
exp_and_integral(const Eigen::MatrixBase<Derived>& a,
                 typename Derived::Scalar t) {
  using S = typename Derived::Scalar;
  detail::require_square(a, "exp_and_integral argument");
  const Index n = a.rows();
  Mat<S> aug = Mat<S>::Zero(2 * n, 2 * n);
  aug.topLeftCorner(n, n) = a;
  aug.topRightCorner(n, n).setIdentity();
  const Mat<S> e = matrix_exp(aug, t);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, n)};
}

// ---------------------------------------------------------------------------
// Eigenvalues

template <class S>
S condition_number(const Mat<std::complex<S>>& m) {
  Eigen::JacobiSVD<Mat<std::complex<S>>> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return S(1);
  const S smin = sv(sv.size() - 1);
  if (smin == S(0)) return std::numeric_limits<S>::infinity();
  return sv(0) / smin;
}

template <class S>
S condition_number(const Mat<S>& m) {
  Eigen::JacobiSVD<Mat<S>> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return S(1);
  const S smin = sv(sv.size() - 1);
  if (smin == S(0)) return std::numeric_limits<S>::infinity();
  return sv(0) / smin;
}

namespace detail {

// Place each complex-conjugate pair adjacently, positive imaginary part first.
template <class S>
void order_conjugate_pairs(CVec<S>& values, CMat<S>* vectors) {
  const Index n = values.size();
  for (Index i = 0; i + 1 < n; ++i) {
    if (values(i).imag() < S(0) &&
        std::abs(values(i + 1) - std::conj(values(i))) <=
            S(1e-12) * std::max(S(1), std::abs(values(i)))) {
      std::swap(values(i), values(i + 1));
      if (vectors != nullptr) vectors->col(i).swap(vectors->col(i + 1));
      ++i;
    } else if (values(i).imag() != S(0)) {
      ++i;
    }
  }
}

}  // namespace detail

/// Eigenvalues of a real square matrix (via the real Schur form).
template <class Derived>
CVec<typename Derived::Scalar> eigenvalues_real(
    const Eigen::MatrixBase<Derived>& a) {
  using S = typename Derived::Scalar;
  detail::require_square(a, "eigenvalue argument");
  if (a.rows() == 0) return CVec<S>();
  Eigen::EigenSolver<Mat<S>> solver(a.eval(), false);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "eigensolver did not converge (norm " << a.norm()
        << ", condition " << condition_number(Mat<S>(a)) << ")";
    throw NumericalError(msg.str());
  }
  CVec<S> values = solver.eigenvalues();
  detail::order_conjugate_pairs<S>(values, nullptr);
  return values;
}

template <class S>
struct EigenDecomposition {
  CVec<S> values;
  CMat<S> vectors;  // columns normalized, A U = U diag(values)
  S condition = S(1);
};

/// Diagonalizes a real matrix; conjugate pairs are adjacent with the
/// positive-frequency member first, so U_{k+1} = conj(U_k) within each pair.
template <class Derived>
EigenDecomposition<typename Derived::Scalar> eig_real(
    const Eigen::MatrixBase<Derived>& a,
    typename Derived::Scalar max_condition = 1e12) {
  using S = typename Derived::Scalar;
  detail::require_square(a, "eigenvalue argument");
  if (!a.allFinite()) throw NumericalError("eig_real: non-finite input");
  EigenDecomposition<S> out;
  if (a.rows() == 0) return out;
  Eigen::EigenSolver<Mat<S>> solver(a.eval(), true);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "eigensolver did not converge (norm " << a.norm()
        << ", condition " << condition_number(Mat<S>(a)) << ")";
    throw NumericalError(msg.str());
  }
  out.values = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
  detail::order_conjugate_pairs<S>(out.values, &out.vectors);
  // Make conjugate-pair eigenvectors exact conjugates of each other.
  for (Index i = 0; i + 1 < out.values.size(); ++i) {
    if (out.values(i).imag() > S(0) &&
        out.values(i + 1) == std::conj(out.values(i))) {
      out.vectors.col(i + 1) = out.vectors.col(i).conjugate();
      ++i;
    }
  }
  out.condition = condition_number(out.vectors);
  if (!(out.condition <= max_condition)) {
    std::ostringstream msg;
    msg << "matrix is not diagonalizable: eigenvector condition number "
        << out.condition << " exceeds " << max_condition;
    throw NumericalError(msg.str());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Symmetric PSD square root

template <class Derived>
Mat<typename Derived::Scalar> sqrt_psd(const Eigen::MatrixBase<Derived>& p) {
  using S = typename Derived::Scalar;
  detail::require_square(p, "sqrt_psd argument");
  if (p.rows() == 0) return Mat<S>();
  const S scale = std::max(S(1), S(p.norm()));
  if ((p - p.transpose()).norm() > S(1e-12) * scale) {
    throw ValidationError("invalid moment matrix: not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat<S>> solver(symmetrize(p));
  if (solver.info() != Eigen::Success) {
    throw NumericalError("sqrt_psd: symmetric eigensolver did not converge");
  }
  Vec<S> lambda = solver.eigenvalues();
  const S min_eig = lambda.minCoeff();
  if (min_eig < S(-1e-8) * std::max(S(p.norm()), std::numeric_limits<S>::min())) {
    std::ostringstream msg;
    msg << "invalid moment matrix: eigenvalue " << min_eig
        << " is significantly negative";
    throw ValidationError(msg.str());
  }
  lambda = lambda.cwiseMax(S(0)).cwiseSqrt();
  const Mat<S>& v = solver.eigenvectors();
  return symmetrize(v * lambda.asDiagonal() * v.transpose());
}

// ---------------------------------------------------------------------------
// Sylvester and Lyapunov equations

namespace detail {

template <class S>
void check_resonance(const CVec<S>& left, const CVec<S>& right, S tol) {
  for (Index i = 0; i < left.size(); ++i) {
    for (Index j = 0; j < right.size(); ++j) {
      if (std::abs(left(i) + right(j)) <= tol) {
        std::ostringstream msg;
        msg << "singular matrix equation: eigenvalues " << left(i) << " and "
            << right(j) << " sum to " << std::abs(left(i) + right(j));
        throw SingularEquationError(
            msg.str(),
            std::complex<double>(double(left(i).real()), double(left(i).imag())),
            std::complex<double>(double(right(j).real()),
                                 double(right(j).imag())));
      }
    }
  }
}

template <class S>
void require_sylvester_shapes(Index p1, Index p2, Index q2, Index q1, Index qr,
                              Index qc) {
  if (p1 != p2 || q1 != q2) {
    throw DimensionError("Sylvester coefficients must be square, got " +
                         shape(p1, p2) + " and " + shape(q1, q2));
  }
  if (qr != p1 || qc != q1) {
    throw DimensionError("Sylvester constant term must be " + shape(p1, q1) +
                         ", got " + shape(qr, qc));
  }
}

}  // namespace detail

/// Solves M1 X + X M2 + Q = 0 by Bartels-Stewart on complex Schur forms.
template <class D1, class D2, class D3>
Mat<typename D1::Scalar> solve_sylvester(
    const Eigen::MatrixBase<D1>& m1, const Eigen::MatrixBase<D2>& m2,
    const Eigen::MatrixBase<D3>& q, typename D1::Scalar resonance_tol = 1e-10) {
  using S = typename D1::Scalar;
  using C = std::complex<S>;
  detail::require_sylvester_shapes<S>(m1.rows(), m1.cols(), m2.rows(),
                                      m2.cols(), q.rows(), q.cols());
  const Index p = m1.rows();
  const Index r = m2.rows();
  if (p == 0 || r == 0) return Mat<S>::Zero(p, r);
  detail::check_resonance<S>(eigenvalues_real(m1), eigenvalues_real(m2),
                             resonance_tol);

  Eigen::ComplexSchur<CMat<S>> schur1(m1.template cast<C>());
  Eigen::ComplexSchur<CMat<S>> schur2(m2.template cast<C>());
  if (schur1.info() != Eigen::Success || schur2.info() != Eigen::Success) {
    throw NumericalError("Sylvester solver: Schur decomposition failed");
  }
  const CMat<S>& u1 = schur1.matrixU();
  const CMat<S>& t1 = schur1.matrixT();
  const CMat<S>& u2 = schur2.matrixU();
  const CMat<S>& t2 = schur2.matrixT();

  // T1 Y + Y T2 = -U1^* Q U2, solved column by column (T2 upper triangular).
  const CMat<S> c = u1.adjoint() * q.template cast<C>() * u2;
  CMat<S> y(p, r);
  for (Index j = 0; j < r; ++j) {
    CVec<S> rhs = -c.col(j);
    for (Index k = 0; k < j; ++k) rhs -= t2(k, j) * y.col(k);
    CMat<S> shifted = t1;
    shifted.diagonal().array() += t2(j, j);
    y.col(j) = shifted.template triangularView<Eigen::Upper>().solve(rhs);
  }
  const Mat<S> x = (u1 * y * u2.adjoint()).real();
  if (!x.allFinite()) throw NumericalError("Sylvester solver: non-finite solution");
  return x;
}

/// Reference path: solves M1 X + X M2 + Q = 0 through the n^2-dimensional
/// Kronecker system (I (x) M1 + M2^T (x) I) vec X = -vec Q.
template <class D1, class D2, class D3>
Mat<typename D1::Scalar> solve_sylvester_kronecker(
    const Eigen::MatrixBase<D1>& m1, const Eigen::MatrixBase<D2>& m2,
    const Eigen::MatrixBase<D3>& q, typename D1::Scalar resonance_tol = 1e-10) {
  using S = typename D1::Scalar;
  detail::require_sylvester_shapes<S>(m1.rows(), m1.cols(), m2.rows(),
                                      m2.cols(), q.rows(), q.cols());
  const Index p = m1.rows();
  const Index r = m2.rows();
  if (p == 0 || r == 0) return Mat<S>::Zero(p, r);
  detail::check_resonance<S>(eigenvalues_real(m1), eigenvalues_real(m2),
                             resonance_tol);
  const Mat<S> op = kron(Mat<S>::Identity(r, r), m1.eval()) +
                    kron(m2.transpose().eval(), Mat<S>::Identity(p, p));
  const Mat<S> qq = q;
  const Vec<S> rhs = -Eigen::Map<const Vec<S>>(qq.data(), p * r);
  const Vec<S> x = op.fullPivLu().solve(rhs);
  return Eigen::Map<const Mat<S>>(x.data(), p, r);
}

/// Solves M X + X M^T + Q = 0 for symmetric Q; the result is symmetrized.
template <class D1, class D2>
Mat<typename D1::Scalar> solve_lyapunov(
    const Eigen::MatrixBase<D1>& m, const Eigen::MatrixBase<D2>& q,
    typename D1::Scalar resonance_tol = 1e-10) {
  using S = typename D1::Scalar;
  detail::require_square(m, "Lyapunov coefficient");
  const S scale = std::max(S(1), S(q.norm()));
  if (q.rows() == q.cols() && (q - q.transpose()).norm() > S(1e-12) * scale) {
    throw PreconditionError("Lyapunov constant term must be symmetric");
  }
  return symmetrize(solve_sylvester(m, m.transpose(), q, resonance_tol));
}

// ---------------------------------------------------------------------------
// General linear matrix equations

enum class EquationKind { Lyapunov, Sylvester, GeneralVectorized };

/// One summand left * X * right, or left * X^T * right when transposed.
template <class S>
struct MatrixTerm {
  Mat<S> left;
  Mat<S> right;
  bool transposed = false;
};

/// sum_k terms_k(X) + constant = 0 for an unknown rows x cols matrix X.
template <class S>
struct LinearMatrixEquation {
  EquationKind kind = EquationKind::GeneralVectorized;
  Index rows = 0;
  Index cols = 0;
  std::vector<MatrixTerm<S>> terms;
  Mat<S> constant;
  bool symmetric = false;  // restrict X to symmetric matrices

  Mat<S> apply(const Mat<S>& x) const {
    Mat<S> out = Mat<S>::Zero(constant.rows(), constant.cols());
    for (const auto& term : terms) {
      if (term.transposed) {
        out.noalias() += term.left * x.transpose() * term.right;
      } else {
        out.noalias() += term.left * x * term.right;
      }
    }
    return out;
  }

  S residual(const Mat<S>& x) const { return (apply(x) + constant).norm(); }

  static LinearMatrixEquation lyapunov(const Mat<S>& m, const Mat<S>& q) {
    detail::require_square(m, "Lyapunov coefficient");
    const Index n = m.rows();
    LinearMatrixEquation eq;
    eq.kind = EquationKind::Lyapunov;
    eq.rows = eq.cols = n;
    eq.terms = {{m, Mat<S>::Identity(n, n), false},
                {Mat<S>::Identity(n, n), m.transpose(), false}};
    eq.constant = q;
    eq.symmetric = true;
    return eq;
  }

  static LinearMatrixEquation sylvester(const Mat<S>& m1, const Mat<S>& m2,
                                        const Mat<S>& q) {
    detail::require_sylvester_shapes<S>(m1.rows(), m1.cols(), m2.rows(),
                                        m2.cols(), q.rows(), q.cols());
    LinearMatrixEquation eq;
    eq.kind = EquationKind::Sylvester;
    eq.rows = m1.rows();
    eq.cols = m2.rows();
    eq.terms = {{m1, Mat<S>::Identity(eq.cols, eq.cols), false},
                {Mat<S>::Identity(eq.rows, eq.rows), m2, false}};
    eq.constant = q;
    return eq;
  }

  static LinearMatrixEquation general(Index rows, Index cols,
                                      std::vector<MatrixTerm<S>> terms,
                                      const Mat<S>& q, bool symmetric) {
    LinearMatrixEquation eq;
    eq.rows = rows;
    eq.cols = cols;
    eq.terms = std::move(terms);
    eq.constant = q;
    eq.symmetric = symmetric;
    for (const auto& t : eq.terms) {
      const Index inner_r = t.transposed ? cols : rows;
      const Index inner_c = t.transposed ? rows : cols;
      if (t.left.cols() != inner_r || t.right.rows() != inner_c ||
          t.left.rows() != q.rows() || t.right.cols() != q.cols()) {
        throw DimensionError("linear matrix equation term " +
                             detail::shape(t.left) + " * X * " +
                             detail::shape(t.right) + " does not map " +
                             detail::shape(rows, cols) + " onto " +
                             detail::shape(q));
      }
    }
    return eq;
  }
};

// Symmetric-matrix coordinates: upper triangle in row-major order, with the
// off-diagonal basis elements (E_ij + E_ji)/sqrt(2) so the basis is
// orthonormal under the Frobenius inner product.

inline Index symmetric_dimension(Index n) { return n * (n + 1) / 2; }

template <class S>
Mat<S> symmetric_basis_element(Index n, Index k) {
  Mat<S> e = Mat<S>::Zero(n, n);
  Index idx = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j, ++idx) {
      if (idx != k) continue;
      if (i == j) {
        e(i, i) = S(1);
      } else {
        e(i, j) = e(j, i) = S(1) / std::sqrt(S(2));
      }
      return e;
    }
  }
  throw DimensionError("symmetric basis index out of range");
}

template <class Derived>
Vec<typename Derived::Scalar> to_symmetric_coordinates(
    const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  detail::require_square(x, "symmetric matrix");
  const Index n = x.rows();
  Vec<S> v(symmetric_dimension(n));
  Index idx = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j, ++idx) {
      v(idx) = (i == j) ? x(i, i) : std::sqrt(S(2)) * S(0.5) * (x(i, j) + x(j, i));
    }
  }
  return v;
}

template <class Derived>
Mat<typename Derived::Scalar> from_symmetric_coordinates(
    const Eigen::MatrixBase<Derived>& v, Index n) {
  using S = typename Derived::Scalar;
  if (v.size() != symmetric_dimension(n)) {
    throw DimensionError("symmetric coordinate vector has wrong length");
  }
  Mat<S> x(n, n);
  Index idx = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j, ++idx) {
      if (i == j) {
        x(i, i) = v(idx);
      } else {
        x(i, j) = x(j, i) = v(idx) / std::sqrt(S(2));
      }
    }
  }
  return x;
}

template <class S>
struct LeastSquaresSolution {
  Mat<S> solution;
  S residual = S(0);           // ||L(X) + Q||_F
  Index rank = 0;
  Index null_space_dimension = 0;
  bool consistent = true;      // residual <= consistency_tol * max(1, ||Q||)
};

namespace detail {

template <class S, class BasisFn>
LeastSquaresSolution<S> solve_in_basis(const LinearMatrixEquation<S>& eq,
                                       Index dim, BasisFn basis, S cutoff,
                                       S consistency_tol) {
  const Index out_size = eq.constant.size();
  Mat<S> op(out_size, dim);
  for (Index k = 0; k < dim; ++k) {
    const Mat<S> image = eq.apply(basis(k));
    op.col(k) = Eigen::Map<const Vec<S>>(image.data(), out_size);
  }
  const Vec<S> rhs = -Eigen::Map<const Vec<S>>(eq.constant.data(), out_size);
  Eigen::JacobiSVD<Mat<S>> svd(op, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(cutoff);
  const Vec<S> coords = svd.solve(rhs);

  LeastSquaresSolution<S> out;
  out.solution = Mat<S>::Zero(eq.rows, eq.cols);
  for (Index k = 0; k < dim; ++k) out.solution += coords(k) * basis(k);
  out.rank = svd.rank();
  out.null_space_dimension = dim - out.rank;
  out.residual = eq.residual(out.solution);
  out.consistent =
      out.residual <= consistency_tol * std::max(S(1), S(eq.constant.norm()));
  return out;
}

}  // namespace detail

/// Minimum-norm least-squares solution over the symmetric subspace.
/// Singular values below cutoff * sigma_max are treated as zero.
template <class S>
LeastSquaresSolution<S> solve_symmetric_constrained(
    const LinearMatrixEquation<S>& eq, S cutoff = S(1e-12),
    S consistency_tol = S(1e-8)) {
  if (eq.rows != eq.cols) {
    throw DimensionError("symmetric solve requires a square unknown, got " +
                         detail::shape(eq.rows, eq.cols));
  }
  const Index n = eq.rows;
  return detail::solve_in_basis<S>(
      eq, symmetric_dimension(n),
      [n](Index k) { return symmetric_basis_element<S>(n, k); }, cutoff,
      consistency_tol);
}

/// Minimum-norm least-squares solution over all rows x cols matrices.
template <class S>
LeastSquaresSolution<S> solve_linear_matrix_equation(
    const LinearMatrixEquation<S>& eq, S cutoff = S(1e-12),
    S consistency_tol = S(1e-8)) {
  const Index rows = eq.rows;
  const Index cols = eq.cols;
  return detail::solve_in_basis<S>(
      eq, rows * cols,
      [rows, cols](Index k) {
        Mat<S> e = Mat<S>::Zero(rows, cols);
        e(k % rows, k / rows) = S(1);
        return e;
      },
      cutoff, consistency_tol);
}

}  // namespace oqho
