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

#include "oqho/model.hpp"
#include "oqho/numerics.hpp"
#include "oqho/types.hpp"

namespace oqho {

/// Initial second moments E(X(0) X(0)^T) = P + i Theta. Construction checks
/// that P is symmetric and that P + i Theta is positive semi-definite.
template <class S>
class MomentData {
 public:
  MomentData(const Mat<S>& p, CcrMatrix<S> ccr, S psd_tol = S(1e-10))
      : ccr_(std::move(ccr)) {
    const Index n = ccr_.dim();
    if (p.rows() != n || p.cols() != n) {
      throw DimensionError("second-moment matrix P is " + detail::shape(p) +
                           ", expected " + detail::shape(n, n));
    }
    if (!p.allFinite()) throw ValidationError("second-moment matrix P has non-finite entries");
    if ((p - p.transpose()).norm() > S(1e-12) * std::max(S(1), S(p.norm()))) {
      throw ValidationError("second-moment matrix P not symmetric");
    }
    p_ = symmetrize(p);
    Eigen::SelfAdjointEigenSolver<CMat<S>> solver(pi(), Eigen::EigenvaluesOnly);
    min_pi_eigenvalue_ = solver.eigenvalues().minCoeff();
    if (min_pi_eigenvalue_ < -psd_tol) {
      std::ostringstream msg;
      msg << "second-moment matrix violates the uncertainty relation: "
             "P + i Theta has eigenvalue "
          << min_pi_eigenvalue_;
      throw ValidationError(msg.str());
    }
    sqrt_p_ = sqrt_psd(p_);
  }

  const Mat<S>& p() const noexcept { return p_; }
  const Mat<S>& sqrt_p() const noexcept { return sqrt_p_; }
  const CcrMatrix<S>& ccr() const noexcept { return ccr_; }
  S min_pi_eigenvalue() const noexcept { return min_pi_eigenvalue_; }
  Index dim() const noexcept { return p_.rows(); }

  CMat<S> pi() const {
    return p_.template cast<std::complex<S>>() +
           std::complex<S>(0, 1) * ccr_.theta().template cast<std::complex<S>>();
  }

 private:
  CcrMatrix<S> ccr_;
  Mat<S> p_;
  Mat<S> sqrt_p_;
  S min_pi_eigenvalue_ = S(0);
};

/// Weighting Sigma = F^T F with F of full row rank.
template <class S>
class Weighting {
 public:
  explicit Weighting(const Mat<S>& f) : f_(f) {
    if (!f_.allFinite()) throw ValidationError("weighting factor F has non-finite entries");
    if (f_.rows() > f_.cols()) {
      throw DimensionError("weighting factor F is " + detail::shape(f_) +
                           ", needs at most as many rows as columns");
    }
    if (f_.rows() > 0) {
      Eigen::JacobiSVD<Mat<S>> svd(f_);
      const auto& sv = svd.singularValues();
      if (!(sv(sv.size() - 1) > S(1e-12) * sv(0))) {
        throw ValidationError("weighting factor F is not of full row rank");
      }
    }
    sigma_ = f_.transpose() * f_;
  }

  /// Factorizes a symmetric PSD Sigma as F^T F with rank(Sigma) rows.
  static Weighting from_sigma(const Mat<S>& sigma) {
    detail::require_square(sigma, "weighting matrix Sigma");
    if ((sigma - sigma.transpose()).norm() > S(1e-12) * std::max(S(1), S(sigma.norm()))) {
      throw ValidationError("weighting matrix Sigma not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat<S>> solver(symmetrize(sigma));
    const Vec<S>& lambda = solver.eigenvalues();
    const S top = std::max(S(0), lambda.maxCoeff());
    if (lambda.minCoeff() < -S(1e-10) * std::max(S(1), top)) {
      throw ValidationError("weighting matrix Sigma not positive semi-definite");
    }
    std::vector<Index> keep;
    for (Index k = lambda.size() - 1; k >= 0; --k) {
      if (lambda(k) > S(1e-12) * top) keep.push_back(k);
    }
    Mat<S> f(Index(keep.size()), sigma.cols());
    for (Index i = 0; i < Index(keep.size()); ++i) {
      f.row(i) = std::sqrt(lambda(keep[i])) * solver.eigenvectors().col(keep[i]).transpose();
    }
    return Weighting(f);
  }

  static Weighting identity(Index n) { return Weighting(Mat<S>::Identity(n, n)); }

  const Mat<S>& f() const noexcept { return f_; }
  const Mat<S>& sigma() const noexcept { return sigma_; }
  Index rank() const noexcept { return f_.rows(); }
  Index dim() const noexcept { return f_.cols(); }

 private:
  Mat<S> f_;
  Mat<S> sigma_;
};

namespace detail {

template <class S>
void require_system_shapes(const Mat<S>& a, const Mat<S>& b, Index n_weight,
                           Index n_moment) {
  require_square(a, "A");
  const Index n = a.rows();
  if (b.rows() != n) {
    throw DimensionError("B is " + shape(b) + ", expected " + std::to_string(n) +
                         " rows to match A");
  }
  if (b.cols() % 2 != 0) {
    throw DimensionError("B must have an even number of columns, got " +
                         std::to_string(b.cols()));
  }
  if (n_weight >= 0 && n_weight != n) {
    throw DimensionError("weighting acts on " + std::to_string(n_weight) +
                         " variables, system has " + std::to_string(n));
  }
  if (n_moment >= 0 && n_moment != n) {
    throw DimensionError("moment data has dimension " + std::to_string(n_moment) +
                         ", system has " + std::to_string(n));
  }
}

template <class S>
S inf_norm(const Mat<S>& a) {
  if (a.size() == 0) return S(0);
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace detail

template <class S>
struct GramianParts {
  Mat<S> re;  // int e^{sA} B B^T e^{sA^T} ds
  Mat<S> im;  // int e^{sA} B J B^T e^{sA^T} ds

  CMat<S> complex() const {
    return re.template cast<std::complex<S>>() +
           std::complex<S>(0, 1) * im.template cast<std::complex<S>>();
  }
};

/// Finite-horizon Gramian V(t) = int_0^t e^{sA} B Omega B^T e^{sA^T} ds.
///
/// The Van Loan block exponential of [[-A, Q], [0, A^T]] is taken over a
/// base step h = t / 2^k with ||A|| h <= 1/2 and extended by the doubling
/// rule V(2h) = V(h) + e^{hA} V(h) e^{hA^T}. Every doubling adds a PSD term,
/// so long horizons do not suffer from the cancellation that a single
/// exponential over [0, t] has for stiff A.
template <class S>
GramianParts<S> gramian_parts(const Mat<S>& a, const Mat<S>& b, S t) {
  detail::require_system_shapes<S>(a, b, -1, -1);
  if (!(t >= S(0))) throw PreconditionError("Gramian horizon must be nonnegative");
  const Index n = a.rows();
  GramianParts<S> out{Mat<S>::Zero(n, n), Mat<S>::Zero(n, n)};
  if (t == S(0) || n == 0) return out;

  const Mat<S> q_re = b * b.transpose();
  const Mat<S> q_im = b * symplectic_unit<S>(b.cols()) * b.transpose();

  const S norm = detail::inf_norm(a);
  int doublings = 0;
  S h = t;
  while (h * norm > S(0.5) && doublings < 200) {
    h *= S(0.5);
    ++doublings;
  }

  Mat<S> aug = Mat<S>::Zero(3 * n, 3 * n);
  aug.block(0, 0, n, n) = -a;
  aug.block(0, n, n, n) = q_re;
  aug.block(0, 2 * n, n, n) = q_im;
  aug.block(n, n, n, n) = a.transpose();
  aug.block(2 * n, 2 * n, n, n) = a.transpose();
  const Mat<S> e = matrix_exp(aug, h);
  Mat<S> step = e.block(n, n, n, n).transpose();  // e^{hA}
  out.re = step * e.block(0, n, n, n);
  out.im = step * e.block(0, 2 * n, n, n);

  for (int k = 0; k < doublings; ++k) {
    out.re += step * out.re * step.transpose();
    out.im += step * out.im * step.transpose();
    step = step * step;
    if (!out.re.allFinite()) throw NumericalError("Gramian overflow");
  }
  out.re = symmetrize(out.re);
  out.im = S(0.5) * (out.im - out.im.transpose());
  return out;
}

template <class S>
CMat<S> gramian(const Mat<S>& a, const Mat<S>& b, S t) {
  return gramian_parts(a, b, t).complex();
}

/// Residual of the Lyapunov ODE dV/dt = AV + VA^T + B Omega B^T at t,
/// with the derivative taken by central differences of step h.
template <class S>
S gramian_ode_residual(const Mat<S>& a, const Mat<S>& b, S t, S h = S(1e-5)) {
  const S lo = std::max(S(0), t - h);
  const S hi = t + h;
  const CMat<S> dv = (gramian(a, b, hi) - gramian(a, b, lo)) / (hi - lo);
  const CMat<S> v = gramian(a, b, t);
  const CMat<S> ac = a.template cast<std::complex<S>>();
  const ItoStructure<S> ito = ItoStructure<S>::canonical(b.cols());
  const CMat<S> bc = b.template cast<std::complex<S>>();
  const CMat<S> rhs = ac * v + v * ac.transpose() + bc * ito.omega * bc.transpose();
  return (dv - rhs).norm();
}

template <class S>
struct DeltaTerms {
  S signal = S(0);  // ||F (e^{tA} - I) sqrt(P)||^2
  S noise = S(0);   // <Sigma, Re V(t)>
  S total() const { return signal + noise; }
};

/// Evaluates the mean-square deviation Delta(t) of a fixed system.
template <class S>
class DeviationEvaluator {
 public:
  DeviationEvaluator(const Mat<S>& a, const Mat<S>& b, const Weighting<S>& weighting,
                     const MomentData<S>& moments)
      : a_(a), b_(b), f_(weighting.f()), sigma_(weighting.sigma()),
        sqrt_p_(moments.sqrt_p()) {
    detail::require_system_shapes<S>(a_, b_, weighting.dim(), moments.dim());
  }

  DeltaTerms<S> operator()(S t) const {
    if (!(t >= S(0))) throw PreconditionError("deviation time must be nonnegative");
    DeltaTerms<S> out;
    if (t == S(0)) return out;
    out.signal = signal(t);
    out.noise = frobenius_inner(sigma_, gramian_parts(a_, b_, t).re);
    return out;
  }

  S signal(S t) const {
    // e^{tA} - I = A int_0^t e^{sA} ds
    const Mat<S> phi = exp_and_integral(a_, t).second;
    return (f_ * a_ * phi * sqrt_p_).squaredNorm();
  }

  const Mat<S>& a() const noexcept { return a_; }

 private:
  Mat<S> a_;
  Mat<S> b_;
  Mat<S> f_;
  Mat<S> sigma_;
  Mat<S> sqrt_p_;
};

template <class S>
DeltaTerms<S> delta_terms(const Mat<S>& a, const Mat<S>& b,
                          const Weighting<S>& weighting,
                          const MomentData<S>& moments, S t) {
  return DeviationEvaluator<S>(a, b, weighting, moments)(t);
}

/// Delta(t) = E(xi^T Sigma xi) for xi(t) = X(t) - X(0).
template <class S>
S delta(const Mat<S>& a, const Mat<S>& b, const Weighting<S>& weighting,
        const MomentData<S>& moments, S t) {
  return delta_terms(a, b, weighting, moments, t).total();
}

/// <Sigma, A B B^T + B B^T A^T + 2 A P A^T>, the second derivative of Delta at 0.
template <class S>
S delta_ddot(const Mat<S>& a, const Mat<S>& b, const Mat<S>& sigma, const Mat<S>& p) {
  const Mat<S> bbt = b * b.transpose();
  return frobenius_inner(sigma, Mat<S>(a * bbt + bbt * a.transpose() +
                                       S(2) * a * p * a.transpose()));
}

template <class S>
struct DeltaDerivatives {
  S dot = S(0);   // ||F B||^2
  S ddot = S(0);
};

template <class S>
DeltaDerivatives<S> delta_derivatives(const Mat<S>& a, const Mat<S>& b,
                                      const Weighting<S>& weighting,
                                      const MomentData<S>& moments) {
  detail::require_system_shapes<S>(a, b, weighting.dim(), moments.dim());
  return {(weighting.f() * b).squaredNorm(),
          delta_ddot(a, b, weighting.sigma(), moments.p())};
}

/// Infinite-horizon Gramian P_inf solving A P + P A^T + B B^T = 0.
template <class S>
Mat<S> infinite_horizon_gramian(const Mat<S>& a, const Mat<S>& b) {
  const SpectralClass<S> spectrum = classify_spectrum(a);
  if (spectrum.category != SpectralCategory::Hurwitz) {
    std::ostringstream msg;
    msg << "infinite-horizon Gramian requires a Hurwitz matrix, max Re(lambda) = "
        << spectrum.max_real_part;
    throw PreconditionError(msg.str());
  }
  return solve_lyapunov(a, Mat<S>(b * b.transpose()));
}

/// lim Delta(t) = ||F sqrt(P + P_inf)||^2 for Hurwitz A.
template <class S>
S hurwitz_limit(const Mat<S>& a, const Mat<S>& b, const Weighting<S>& weighting,
                const MomentData<S>& moments) {
  detail::require_system_shapes<S>(a, b, weighting.dim(), moments.dim());
  const Mat<S> p_inf = infinite_horizon_gramian(a, b);
  return (weighting.f() * sqrt_psd(Mat<S>(moments.p() + p_inf))).squaredNorm();
}

/// lim V(t)/t = U (I o (U^{-1} B Omega B^T U^{-*})) U^* for diagonalizable A
/// with a purely imaginary spectrum of pairwise distinct frequencies.
template <class S>
CMat<S> asymptotic_rate(const Mat<S>& a, const Mat<S>& b, S tol = S(1e-8)) {
  detail::require_system_shapes<S>(a, b, -1, -1);
  using C = std::complex<S>;
  const Index n = a.rows();
  const S scale = std::max(S(1), S(a.norm()));
  const CVec<S> lambda = eigenvalues_real(a);
  for (Index k = 0; k < n; ++k) {
    if (std::abs(lambda(k).real()) > tol * scale) {
      std::ostringstream msg;
      msg << "asymptotic rate requires a purely imaginary spectrum, found "
          << lambda(k);
      throw PreconditionError(msg.str());
    }
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (std::abs(lambda(i) - lambda(j)) <= S(1e-6) * scale) {
        std::ostringstream msg;
        msg << "asymptotic rate requires pairwise distinct eigenfrequencies, "
               "found repeated "
            << lambda(i);
        throw PreconditionError(msg.str());
      }
    }
  }
  const EigenDecomposition<S> eig = eig_real(a);
  const CMat<S>& u = eig.vectors;
  const CMat<S> u_inv = u.inverse();
  const ItoStructure<S> ito = ItoStructure<S>::canonical(b.cols());
  const CMat<S> bc = b.template cast<C>();
  const CMat<S> inner = u_inv * bc * ito.omega * bc.transpose() * u_inv.adjoint();
  const CMat<S> diag = inner.diagonal().asDiagonal();
  return u * diag * u.adjoint();
}

namespace detail {

// e^z - 1 without cancellation for small |z|.
template <class S>
std::complex<S> expm1(std::complex<S> z) {
  const S x = z.real();
  const S y = z.imag();
  const S half_sin = std::sin(y / S(2));
  return {std::expm1(x) * std::cos(y) - S(2) * half_sin * half_sin,
          std::exp(x) * std::sin(y)};
}

}  // namespace detail

/// ||F (e^{tA} - I) sqrt(P)||^2 evaluated through the eigenvector expansion
/// F U (e^{t diag(lambda)} - I) U^{-1} sqrt(P).
template <class S>
S oscillatory_signal_term(const Mat<S>& a, const Weighting<S>& weighting,
                          const MomentData<S>& moments, S t) {
  using C = std::complex<S>;
  detail::require_square(a, "A");
  if (weighting.dim() != a.rows() || moments.dim() != a.rows()) {
    throw DimensionError("weighting/moment dimensions do not match A");
  }
  if (t == S(0)) return S(0);
  const EigenDecomposition<S> eig = eig_real(a);
  CVec<S> phase(eig.values.size());
  for (Index k = 0; k < phase.size(); ++k) phase(k) = detail::expm1<S>(t * eig.values(k));
  const CMat<S> m = weighting.f().template cast<C>() * eig.vectors *
                    phase.asDiagonal() * eig.vectors.inverse() *
                    moments.sqrt_p().template cast<C>();
  return m.squaredNorm();
}

template <class S>
struct DeviationCurve {
  std::vector<S> times;
  std::vector<S> delta_values;
  std::vector<S> signal_term;
  std::vector<S> noise_term;
  std::vector<Mat<S>> gramian_real;  // empty unless retained
};

template <class S>
DeviationCurve<S> deviation_curve(const Mat<S>& a, const Mat<S>& b,
                                  const Weighting<S>& weighting,
                                  const MomentData<S>& moments,
                                  const std::vector<S>& times,
                                  bool retain_gramian = false) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= S(0)) || (i > 0 && !(times[i] > times[i - 1]))) {
      throw PreconditionError("time grid must be nonnegative and strictly increasing");
    }
  }
  const DeviationEvaluator<S> eval(a, b, weighting, moments);
  DeviationCurve<S> curve;
  curve.times = times;
  curve.delta_values.reserve(times.size());
  for (const S t : times) {
    DeltaTerms<S> terms;
    if (t > S(0)) {
      terms.signal = eval.signal(t);
      const GramianParts<S> v = gramian_parts(a, b, t);
      terms.noise = frobenius_inner(weighting.sigma(), v.re);
      if (retain_gramian) curve.gramian_real.push_back(v.re);
    } else if (retain_gramian) {
      curve.gramian_real.push_back(Mat<S>::Zero(a.rows(), a.rows()));
    }
    curve.signal_term.push_back(terms.signal);
    curve.noise_term.push_back(terms.noise);
    curve.delta_values.push_back(terms.total());
  }
  return curve;
}

/// {0} followed by `points` log-spaced times from 1e-4 t_ref to t_ref, where
/// t_ref = 10 / max(||A||, 1).
template <class S>
std::vector<S> default_time_grid(const Mat<S>& a, Index points = 400) {
  const S t_ref = S(10) / std::max(S(1), S(a.norm()));
  std::vector<S> grid{S(0)};
  const S lo = std::log10(S(1e-4) * t_ref);
  const S hi = std::log10(t_ref);
  for (Index k = 0; k < points; ++k) {
    const S frac = points > 1 ? S(k) / S(points - 1) : S(1);
    grid.push_back(std::pow(S(10), lo + frac * (hi - lo)));
  }
  return grid;
}

/// `points` equally spaced times on [0, t_max] (both ends included).
template <class S>
std::vector<S> linear_time_grid(S t_max, Index points) {
  if (!(t_max > S(0)) || points < 2) {
    throw PreconditionError("linear grid needs t_max > 0 and at least two points");
  }
  std::vector<S> grid(points);
  for (Index k = 0; k < points; ++k) grid[k] = t_max * S(k) / S(points - 1);
  return grid;
}

}  // namespace oqho
