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

#include <cmath>
#include <limits>

#include "oqho/dynamics.hpp"
#include "oqho/model.hpp"
#include "oqho/numerics.hpp"

namespace oqho {

namespace detail {

template <class S>
void require_design_shapes(const CcrMatrix<S>& ccr, const Weighting<S>& weighting,
                           const Mat<S>& p) {
  const Index n = ccr.dim();
  if (weighting.dim() != n) {
    throw DimensionError("weighting acts on " + std::to_string(weighting.dim()) +
                         " variables, CCR matrix has dimension " + std::to_string(n));
  }
  if (p.rows() != n || p.cols() != n) {
    throw DimensionError("P is " + shape(p) + ", expected " + shape(n, n));
  }
}

template <class S>
bool positive_definite(const Mat<S>& m) {
  if (m.rows() == 0) return false;
  Eigen::SelfAdjointEigenSolver<Mat<S>> solver(symmetrize(m), Eigen::EigenvaluesOnly);
  const auto& lambda = solver.eigenvalues();
  return lambda.minCoeff() > S(1e-12) * std::max(S(1), lambda.maxCoeff());
}

}  // namespace detail

/// K = (Theta Sigma (BB^T + 2 A~ P) - (BB^T + 2 P A~^T) Sigma Theta) / 4.
template <class S>
Mat<S> k_matrix(const CcrMatrix<S>& ccr, const Weighting<S>& weighting,
                const Mat<S>& b, const Mat<S>& a_tilde, const Mat<S>& p) {
  detail::require_design_shapes(ccr, weighting, p);
  const Mat<S>& theta = ccr.theta();
  const Mat<S>& sigma = weighting.sigma();
  const Mat<S> bbt = b * b.transpose();
  const Mat<S> k = S(0.25) * (theta * sigma * (bbt + S(2) * a_tilde * p) -
                              (bbt + S(2) * p * a_tilde.transpose()) * sigma * theta);
  const S scale = S(1) + theta.norm() * sigma.norm() *
                            (bbt.norm() + S(2) * a_tilde.norm() * p.norm());
  if ((k - k.transpose()).norm() > S(1e-12) * scale) {
    throw ConsistencyError("K matrix is not symmetric");
  }
  return symmetrize(k);
}

/// ||Theta Sigma Theta R P + P R Theta Sigma Theta + K||.
template <class S>
S stationarity_residual(const CcrMatrix<S>& ccr, const Weighting<S>& weighting,
                        const Mat<S>& p, const Mat<S>& r, const Mat<S>& k) {
  const Mat<S> tst = ccr.theta() * weighting.sigma() * ccr.theta();
  return (tst * r * p + p * r * tst + k).norm();
}

/// Second derivative of Delta at t = 0 for the oscillator (Theta, R, N).
template <class S>
S dd_delta_for_energy(const CcrMatrix<S>& ccr, const Weighting<S>& weighting,
                      const Mat<S>& coupling_n, const Mat<S>& p, const Mat<S>& r) {
  const Realization<S> sys = build_realization(OqhoParams<S>(ccr, r, coupling_n));
  return delta_ddot(sys.a, sys.b, weighting.sigma(), p);
}

/// Frechet derivative of Delta'' in R over symmetric matrices:
/// -4 sym(Theta Sigma (B B^T + 2 A P)).
template <class S>
Mat<S> grad_dd_delta_wrt_r(const CcrMatrix<S>& ccr, const Weighting<S>& weighting,
                           const Realization<S>& system, const Mat<S>& p) {
  detail::require_design_shapes(ccr, weighting, p);
  return S(-4) * symmetrize(Mat<S>(ccr.theta() * weighting.sigma() *
                                   (system.b * system.b.transpose() + S(2) * system.a * p)));
}

enum class EnergyMethod { Ale, LeastSquares };

inline const char* to_string(EnergyMethod m) {
  return m == EnergyMethod::Ale ? "ale" : "least-squares";
}

template <class S>
struct EnergyOptimum {
  Mat<S> r_star;
  Mat<S> k_matrix;
  S stationarity_residual = S(0);
  S dd_delta_at_opt = S(0);
  EnergyMethod method = EnergyMethod::Ale;
  Index null_space_dimension = 0;
  bool consistent = true;         // stationarity equation solved to tolerance
  bool ale_fallback = false;      // ALE route failed, least squares used
  bool expansion_applicable = true;  // F sqrt(P) != 0 and F B != 0
};

/// Energy matrix minimizing Delta'' (equivalently maximizing tau-hat) for a
/// fixed coupling N. With P > 0 and Sigma > 0 the stationarity equation
///   Theta Sigma Theta R P + P R Theta Sigma Theta + K = 0
/// is solved through G = P R P and the Hurwitz Lyapunov equation
///   Theta Sigma Theta P^{-1} G + G P^{-1} Theta Sigma Theta + K = 0;
/// otherwise by minimum-norm least squares over symmetric R.
template <class S>
EnergyOptimum<S> optimal_energy_matrix(const CcrMatrix<S>& ccr,
                                       const Weighting<S>& weighting,
                                       const Mat<S>& coupling_n, const Mat<S>& p) {
  detail::require_design_shapes(ccr, weighting, p);
  const Index n = ccr.dim();
  const Realization<S> base =
      build_realization(OqhoParams<S>(ccr, Mat<S>::Zero(n, n), coupling_n));
  const Mat<S>& theta = ccr.theta();

  EnergyOptimum<S> out;
  out.k_matrix = k_matrix(ccr, weighting, base.b, base.a_tilde, p);
  out.expansion_applicable = (weighting.f() * base.b).squaredNorm() > S(0) &&
                             (weighting.f() * p).squaredNorm() > S(0);
  const Mat<S> tst = theta * weighting.sigma() * theta;

  bool solved = false;
  if (detail::positive_definite(p) && detail::positive_definite(weighting.sigma())) {
    const Mat<S> p_inv = p.inverse();
    try {
      const Mat<S> g = solve_lyapunov(Mat<S>(tst * p_inv), out.k_matrix);
      out.r_star = symmetrize(Mat<S>(p_inv * g * p_inv));
      out.method = EnergyMethod::Ale;
      solved = true;
    } catch (const SingularEquationError&) {
      out.ale_fallback = true;
    }
  }
  if (!solved) {
    auto eq = LinearMatrixEquation<S>::general(n, n, {{tst, p, false}, {p, tst, false}},
                                               out.k_matrix, true);
    const LeastSquaresSolution<S> ls = solve_symmetric_constrained(eq);
    out.r_star = ls.solution;
    out.null_space_dimension = ls.null_space_dimension;
    out.method = EnergyMethod::LeastSquares;
  }
  out.stationarity_residual = stationarity_residual(ccr, weighting, p, out.r_star, out.k_matrix);
  out.consistent = out.stationarity_residual <=
                   S(1e-8) * std::max(S(1), S(out.k_matrix.norm()));
  const Mat<S> a = base.a_tilde + S(2) * theta * out.r_star;
  out.dd_delta_at_opt = delta_ddot(a, base.b, weighting.sigma(), p);
  return out;
}

/// ||Theta Sigma (BB^T - B J B^T Theta^{-1} P) - (BB^T - P Theta^{-1} B J B^T) Sigma Theta||,
/// which vanishes exactly when R = 0 is optimal for the coupling N.
template <class S>
S zero_hamiltonian_condition(const CcrMatrix<S>& ccr, const Weighting<S>& weighting,
                             const Mat<S>& coupling_n, const Mat<S>& p) {
  detail::require_design_shapes(ccr, weighting, p);
  if (coupling_n.cols() != ccr.dim()) {
    throw DimensionError("coupling matrix N is " + detail::shape(coupling_n) +
                         ", expected m x " + std::to_string(ccr.dim()));
  }
  const Mat<S>& theta = ccr.theta();
  const Mat<S>& theta_inv = ccr.inverse();
  const Mat<S>& sigma = weighting.sigma();
  const Mat<S> b = S(2) * theta * coupling_n.transpose();
  const Mat<S> bbt = b * b.transpose();
  const Mat<S> bjb = b * symplectic_unit<S>(coupling_n.rows()) * b.transpose();
  return (theta * sigma * (bbt - bjb * theta_inv * p) -
          (bbt - p * theta_inv * bjb) * sigma * theta)
      .norm();
}

/// 1e-9 ||Sigma|| ||B||^2 max(1, ||P||): the scale below which the
/// zero-Hamiltonian residual counts as zero.
template <class S>
S zero_hamiltonian_tolerance(const Weighting<S>& weighting, const Mat<S>& b,
                             const Mat<S>& p) {
  return S(1e-9) * weighting.sigma().norm() * b.squaredNorm() * std::max(S(1), S(p.norm()));
}

/// Unconstrained minimizer A-hat = -B B^T P^{-1} / 2 of Delta'' over all A.
template <class S>
Mat<S> a_hat_minimizer(const Mat<S>& b, const Mat<S>& p) {
  detail::require_square(p, "P");
  if (b.rows() != p.rows()) throw DimensionError("B and P row counts differ");
  if (!detail::positive_definite(p)) {
    throw PreconditionError("A-hat requires a positive definite P");
  }
  return S(-0.5) * b * b.transpose() * p.inverse();
}

template <class S>
S unconstrained_min_dd_delta_magnitude(const Mat<S>& b, const Weighting<S>& weighting,
                                       const Mat<S>& sqrt_p) {
  const Mat<S> inv_sqrt = sqrt_p.inverse();
  return S(0.5) * (weighting.f() * b * b.transpose() * inv_sqrt).squaredNorm();
}

/// Delta'' in completed-square form
///   2 ||F (A - A-hat) sqrt(P)||^2 - ||F B B^T P^{-1/2}||^2 / 2.
template <class S>
S completed_square_dd_delta(const Mat<S>& a, const Mat<S>& b,
                            const Weighting<S>& weighting, const Mat<S>& p) {
  const Mat<S> a_hat = a_hat_minimizer(b, p);
  const Mat<S> sqrt_p = sqrt_psd(p);
  return S(2) * (weighting.f() * (a - a_hat) * sqrt_p).squaredNorm() -
         unconstrained_min_dd_delta_magnitude(b, weighting, sqrt_p);
}

/// min over A of Delta'' = -||F B B^T P^{-1/2}||^2 / 2.
template <class S>
S unconstrained_min_dd_delta(const Mat<S>& b, const Weighting<S>& weighting,
                             const Mat<S>& p) {
  if (!detail::positive_definite(p)) {
    throw PreconditionError("the unconstrained minimum requires a positive definite P");
  }
  return -unconstrained_min_dd_delta_magnitude(b, weighting, Mat<S>(sqrt_psd(p)));
}

}  // namespace oqho
