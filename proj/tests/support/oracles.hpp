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

// Reference implementations used only by the test suites. They deliberately
// avoid the library's own solvers so that agreement is meaningful.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "oqho/oqho.hpp"

namespace oqho::testing {

using M = Mat<double>;
using CM = CMat<double>;
using Rng = std::mt19937_64;

inline M jbar() {
  M j(2, 2);
  j << 0, 1, -1, 0;
  return j;
}

inline M gaussian(Rng& rng, Index rows, Index cols, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  M m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

inline M random_symmetric(Rng& rng, Index n, double scale = 1.0) {
  const M g = gaussian(rng, n, n, scale);
  return 0.5 * (g + g.transpose());
}

// I + shift * (random PSD of unit spectral norm).
inline M random_pd(Rng& rng, Index n, double spread = 0.3) {
  const M g = gaussian(rng, n, n);
  M s = g * g.transpose();
  s /= s.operatorNorm();
  return M::Identity(n, n) + spread * s;
}

inline M random_orthogonal(Rng& rng, Index n) {
  Eigen::HouseholderQR<M> qr(gaussian(rng, n, n));
  return qr.householderQ() * M::Identity(n, n);
}

inline M canonical_j(Index m) {
  M j = M::Zero(m, m);
  for (Index k = 0; k < m; k += 2) {
    j(k, k + 1) = 1;
    j(k + 1, k) = -1;
  }
  return j;
}

// Theta = (1/2) T (I (x) jbar) T^T with T = I + small perturbation.
inline M random_theta(Rng& rng, Index n, double perturb = 0.2) {
  const M t = M::Identity(n, n) + gaussian(rng, n, n, perturb);
  return 0.5 * t * canonical_j(n) * t.transpose();
}

// P with P + i Theta >= 0: symmetric PD plus the spectral norm of Theta.
inline M admissible_p(Rng& rng, const M& theta, double spread = 0.3) {
  const Index n = theta.rows();
  return random_pd(rng, n, spread) * (0.2 + theta.operatorNorm());
}

// Conjugate-pair row selector keeping the given pair indices.
inline M pair_selector(Index m, const std::vector<Index>& pairs) {
  M d = M::Zero(2 * Index(pairs.size()), m);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    d(2 * Index(k), 2 * pairs[k]) = 1;
    d(2 * Index(k) + 1, 2 * pairs[k] + 1) = 1;
  }
  return d;
}

inline M random_selector(Rng& rng, Index m) {
  std::vector<Index> pairs;
  for (Index k = 0; k < m / 2; ++k) pairs.push_back(k);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  std::uniform_int_distribution<Index> count(1, m / 2);
  pairs.resize(std::size_t(count(rng)));
  std::sort(pairs.begin(), pairs.end());
  return pair_selector(m, pairs);
}

inline OqhoParams<double> random_params(Rng& rng, Index n, Index m, double r_scale = 0.5,
                                        double n_scale = 0.5) {
  CcrMatrix<double> ccr(random_theta(rng, n));
  return OqhoParams<double>(ccr, random_symmetric(rng, n, r_scale), gaussian(rng, m, n, n_scale),
                            random_selector(rng, m));
}

/// Random parameters whose dynamics matrix has spectral abscissa below -margin.
inline OqhoParams<double> random_hurwitz_params(Rng& rng, Index n, Index m,
                                                double margin = 0.05) {
  for (int attempt = 0; attempt < 100000; ++attempt) {
    OqhoParams<double> p = random_params(rng, n, m, 0.4, 0.7);
    const M a = build_realization(p).a;
    Eigen::EigenSolver<M> es(a, false);
    if (es.eigenvalues().real().maxCoeff() < -margin && a.norm() < 6.0) return p;
  }
  throw std::runtime_error("no Hurwitz sample found");
}

/// exp(A) by Taylor series with scaling and squaring (test reference).
inline M taylor_exp(const M& a) {
  const double norm = a.lpNorm<Eigen::Infinity>();
  int squarings = 0;
  if (norm > 0.1) squarings = int(std::ceil(std::log2(norm / 0.1)));
  const M x = a / std::ldexp(1.0, squarings);
  M term = M::Identity(a.rows(), a.cols());
  M sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * x / double(k);
    sum += term;
  }
  for (int k = 0; k < squarings; ++k) sum = sum * sum;
  return sum;
}

/// Gauss-Kronrod 7/15 adaptive quadrature of a matrix-valued integrand.
class AdaptiveQuadrature {
 public:
  using Integrand = std::function<M(double)>;

  explicit AdaptiveQuadrature(double abs_tol = 1e-13, double rel_tol = 1e-13, int max_depth = 40)
      : abs_tol_(abs_tol), rel_tol_(rel_tol), max_depth_(max_depth) {}

  M integrate(const Integrand& f, double a, double b) const {
    M err;
    const M whole = kronrod(f, a, b, err);
    return refine(f, a, b, whole, err, 0);
  }

 private:
  M kronrod(const Integrand& f, double a, double b, M& err) const {
    static const double xk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                 0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                 0.207784955007898467600689403773245, 0.0};
    static const double wk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                 0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                 0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    static const double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                 0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const M fc = f(c);
    M k = wk[7] * fc;
    M g = wg[3] * fc;
    for (int i = 0; i < 7; ++i) {
      const M f1 = f(c - h * xk[i]);
      const M f2 = f(c + h * xk[i]);
      k += wk[i] * (f1 + f2);
      if (i % 2 == 1) g += wg[i / 2] * (f1 + f2);
    }
    k *= h;
    g *= h;
    err = k - g;
    return k;
  }

  M refine(const Integrand& f, double a, double b, const M& value, const M& err,
           int depth) const {
    if (err.norm() <= std::max(abs_tol_, rel_tol_ * value.norm()) || depth >= max_depth_) {
      return value;
    }
    const double c = 0.5 * (a + b);
    M e1, e2;
    const M left = kronrod(f, a, c, e1);
    const M right = kronrod(f, c, b, e2);
    return refine(f, a, c, left, e1, depth + 1) + refine(f, c, b, right, e2, depth + 1);
  }

  double abs_tol_;
  double rel_tol_;
  int max_depth_;
};

/// Real and imaginary parts of int_0^t e^{sA} B Omega B^T e^{sA^T} ds by quadrature.
inline std::pair<M, M> gramian_by_quadrature(const M& a, const M& b, double t) {
  const M bbt = b * b.transpose();
  const M bjbt = b * canonical_j(b.cols()) * b.transpose();
  const Index n = a.rows();
  const AdaptiveQuadrature quad;
  auto integrand = [&](double s) {
    const M e = taylor_exp(s * a);
    M out(n, 2 * n);
    out << e * bbt * e.transpose(), e * bjbt * e.transpose();
    return out;
  };
  const M v = quad.integrate(integrand, 0.0, t);
  return {v.leftCols(n), v.rightCols(n)};
}

/// Delta'' evaluated directly from its defining expression.
inline double dd_delta_direct(const M& a, const M& b, const M& sigma, const M& p) {
  const M bbt = b * b.transpose();
  return (sigma.cwiseProduct(a * bbt + bbt * a.transpose() + 2.0 * a * p * a.transpose())).sum();
}

/// Closed-form Delta for the single mode (A = -I, B = jbar, F = I, P = I).
inline double single_mode_delta(double t) {
  const double e = std::exp(-t);
  return 2.0 * (1.0 - e) * (1.0 - e) + 1.0 - std::exp(-2.0 * t);
}

/// Steepest descent with Armijo backtracking on a smooth function of a
/// coordinate vector, gradient by central differences.
struct DescentResult {
  Vec<double> x;
  double gradient_norm = 0;
  int iterations = 0;
};

inline Vec<double> central_gradient(const std::function<double(const Vec<double>&)>& f,
                                    const Vec<double>& x, double h) {
  Vec<double> g(x.size());
  for (Index k = 0; k < x.size(); ++k) {
    Vec<double> xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    g(k) = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

inline DescentResult steepest_descent(const std::function<double(const Vec<double>&)>& f,
                                      Vec<double> x, double grad_tol = 1e-10,
                                      int max_iter = 100000, double fd_step = 1e-2) {
  // Direction -g with Armijo backtracking; the first trial step of each line
  // search is the Barzilai-Borwein estimate from the previous iteration.
  // Stops at the gradient tolerance, after max_iter steps, or when no step is accepted.
  DescentResult out;
  double step = 1.0;
  double fx = f(x);
  Vec<double> x_prev, g_prev;
  for (int it = 0; it < max_iter; ++it) {
    const Vec<double> g = central_gradient(f, x, fd_step);
    out.gradient_norm = g.norm();
    out.iterations = it;
    if (out.gradient_norm <= grad_tol) break;
    if (it > 0) {
      const Vec<double> s = x - x_prev;
      const Vec<double> y = g - g_prev;
      const double sy = s.dot(y);
      step = sy > 0 ? s.squaredNorm() / sy : 2.0 * step;
    }
    x_prev = x;
    g_prev = g;
    bool moved = false;
    for (int bt = 0; bt < 80; ++bt) {
      const Vec<double> trial = x - step * g;
      const double ft = f(trial);
      // Slack at the rounding level of f keeps the test meaningful near the minimum.
      const double slack = 1e-14 * std::max(1.0, std::abs(fx));
      if (ft <= fx - 1e-4 * step * g.squaredNorm() + slack) {
        x = trial;
        fx = ft;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  out.x = x;
  return out;
}

/// Symmetric coordinates: upper triangle row-major, off-diagonals scaled by sqrt 2
/// so that the map is an isometry for the Frobenius norm.
inline M sym_from_coords(const Vec<double>& x, Index n) {
  M r = M::Zero(n, n);
  Index k = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j, ++k) {
      if (i == j) {
        r(i, i) = x(k);
      } else {
        r(i, j) = r(j, i) = x(k) / std::sqrt(2.0);
      }
    }
  }
  return r;
}

inline Vec<double> coords_from_sym(const M& r) {
  const Index n = r.rows();
  Vec<double> x(n * (n + 1) / 2);
  Index k = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j, ++k) x(k) = i == j ? r(i, i) : std::sqrt(2.0) * r(i, j);
  return x;
}

/// Block-diagonal helper independent of the library.
inline M blkdiag(const M& x, const M& y) {
  M out = M::Zero(x.rows() + y.rows(), x.cols() + y.cols());
  out.topLeftCorner(x.rows(), x.cols()) = x;
  out.bottomRightCorner(y.rows(), y.cols()) = y;
  return out;
}

/// Closed-loop (A, B) assembled from the closed-loop Theta, R and N (test path).
inline std::pair<M, M> closed_loop_from_energy(const SubsystemParams<double>& s1,
                                               const SubsystemParams<double>& s2,
                                               const M& r12) {
  const M j1 = canonical_j(s1.m());
  const M j2 = canonical_j(s2.m());
  const M& n1 = s1.coupling_external();
  const M& n2 = s2.coupling_external();
  const M& l1 = s1.coupling_internal();
  const M& l2 = s2.coupling_internal();
  const M& d1 = s1.selector();
  const M& d2 = s2.selector();
  const M rt12 = l1.transpose() * d2 * j2 * n2 - n1.transpose() * j1 * d1.transpose() * l2;
  M r(s1.n() + s2.n(), s1.n() + s2.n());
  r << s1.energy(), r12 + rt12, (r12 + rt12).transpose(), s2.energy();
  M n(s1.m() + s2.m(), s1.n() + s2.n());
  n << n1, d1.transpose() * l2, d2.transpose() * l1, n2;
  const M theta = blkdiag(s1.ccr().theta(), s2.ccr().theta());
  const M j = blkdiag(j1, j2);
  return {2.0 * theta * (r + n.transpose() * j * n), 2.0 * theta * n.transpose()};
}

/// A pair of subsystems with consistent selector and internal-coupling shapes.
inline std::pair<SubsystemParams<double>, SubsystemParams<double>> random_network(
    Rng& rng, Index n1, Index m1, Index n2, Index m2, bool zero_energy = false,
    double scale = 0.5) {
  const M d1 = random_selector(rng, m1);
  const M d2 = random_selector(rng, m2);
  auto make = [&](Index n, Index m, const M& d, Index r_other) {
    CcrMatrix<double> ccr(random_theta(rng, n));
    const M r = zero_energy ? M(M::Zero(n, n)) : random_symmetric(rng, n, scale);
    return SubsystemParams<double>(ccr, r, gaussian(rng, m, n, scale),
                                   gaussian(rng, r_other, n, scale), d);
  };
  SubsystemParams<double> s1 = make(n1, m1, d1, d2.rows());
  SubsystemParams<double> s2 = make(n2, m2, d2, d1.rows());
  return {s1, s2};
}

}  // namespace oqho::testing
