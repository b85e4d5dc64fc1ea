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

#include <array>
#include <optional>
#include <string>
#include <utility>

#include "oqho/design.hpp"
#include "oqho/dynamics.hpp"
#include "oqho/model.hpp"
#include "oqho/numerics.hpp"

namespace oqho {

/// One of two oscillators in a coherent feedback loop. N couples it to its
/// own input field, L to the selected output of the other oscillator.
template <class S>
class SubsystemParams {
 public:
  SubsystemParams(CcrMatrix<S> ccr, const Mat<S>& energy,
                  const Mat<S>& coupling_external, const Mat<S>& coupling_internal,
                  std::optional<Mat<S>> selector = std::nullopt)
      : ccr_(std::move(ccr)) {
    const Index n = ccr_.dim();
    energy_ = detail::validated_symmetric<S>(energy, n, "energy matrix R_k", "energy matrix");
    if (coupling_external.cols() != n || coupling_external.rows() == 0 ||
        coupling_external.rows() % 2 != 0) {
      throw DimensionError("external coupling N_k is " + detail::shape(coupling_external) +
                           ", expected (even m_k) x " + std::to_string(n));
    }
    if (coupling_internal.cols() != n) {
      throw DimensionError("internal coupling L_k is " + detail::shape(coupling_internal) +
                           ", expected r x " + std::to_string(n));
    }
    n_ = coupling_external;
    l_ = coupling_internal;
    const Index m = n_.rows();
    d_ = selector ? *selector : Mat<S>::Identity(m, m);
    detail::validate_selector<S>(d_, m, "selector D_k");
  }

  const CcrMatrix<S>& ccr() const noexcept { return ccr_; }
  const Mat<S>& energy() const noexcept { return energy_; }
  const Mat<S>& coupling_external() const noexcept { return n_; }
  const Mat<S>& coupling_internal() const noexcept { return l_; }
  const Mat<S>& selector() const noexcept { return d_; }
  Index n() const noexcept { return ccr_.dim(); }
  Index m() const noexcept { return n_.rows(); }
  Index r() const noexcept { return d_.rows(); }

  SubsystemParams with_energy(const Mat<S>& energy) const {
    return SubsystemParams(ccr_, energy, n_, l_, d_);
  }

 private:
  CcrMatrix<S> ccr_;
  Mat<S> energy_;
  Mat<S> n_;
  Mat<S> l_;
  Mat<S> d_;
};

/// Per-subsystem matrices of dX_k = (A_k X_k + F_k X_{3-k}) dt + B_k dW_k + E_k dY_{3-k}.
template <class S>
struct SubsystemBlocks {
  Mat<S> a;
  Mat<S> b;
  Mat<S> c;
  Mat<S> e;
  Mat<S> f;
};

template <class S>
struct Interconnection {
  SubsystemParams<S> sub1;
  SubsystemParams<S> sub2;
  Mat<S> r12;
  CcrMatrix<S> closed_ccr;   // blockdiag(Theta_1, Theta_2)
  Mat<S> r0;                 // [[R_1, R_12], [R_12^T, R_2]]
  Mat<S> r_tilde;            // field-mediated part, zero diagonal blocks
  Mat<S> closed_r;           // r0 + r_tilde
  Mat<S> closed_n;
  Mat<S> closed_selector;    // blockdiag(D_1, D_2)
  std::array<SubsystemBlocks<S>, 2> blocks;
  Realization<S> closed_realization;  // A, B assembled block-wise
  S consistency_residual = S(0);

  Index n1() const { return sub1.n(); }
  Index n2() const { return sub2.n(); }
  Index n() const { return sub1.n() + sub2.n(); }
};

namespace detail {

template <class S>
Mat<S> block_diag(const Mat<S>& x, const Mat<S>& y) {
  Mat<S> out = Mat<S>::Zero(x.rows() + y.rows(), x.cols() + y.cols());
  out.topLeftCorner(x.rows(), x.cols()) = x;
  out.bottomRightCorner(y.rows(), y.cols()) = y;
  return out;
}

template <class S>
void require_interconnect_shapes(const SubsystemParams<S>& s1,
                                 const SubsystemParams<S>& s2) {
  if (s1.coupling_internal().rows() != s2.r()) {
    throw DimensionError("L_1 has " + std::to_string(s1.coupling_internal().rows()) +
                         " rows, expected r_2 = " + std::to_string(s2.r()));
  }
  if (s2.coupling_internal().rows() != s1.r()) {
    throw DimensionError("L_2 has " + std::to_string(s2.coupling_internal().rows()) +
                         " rows, expected r_1 = " + std::to_string(s1.r()));
  }
}

template <class S>
Mat<S> field_mediated_offdiagonal(const SubsystemParams<S>& s1,
                                  const SubsystemParams<S>& s2) {
  const Mat<S> j1 = symplectic_unit<S>(s1.m());
  const Mat<S> j2 = symplectic_unit<S>(s2.m());
  return s1.coupling_internal().transpose() * s2.selector() * j2 * s2.coupling_external() -
         s1.coupling_external().transpose() * j1 * s1.selector().transpose() *
             s2.coupling_internal();
}

}  // namespace detail

/// Closed-loop oscillator of two subsystems with direct energy coupling
/// H_12 = X_1^T R_12 X_2 and field-mediated coupling through L_1, L_2.
///
/// A and B are assembled block-wise from the subsystem equations and then
/// checked against the realization built from the closed-loop (Theta, R, N).
template <class S>
Interconnection<S> assemble(const SubsystemParams<S>& sub1,
                            const SubsystemParams<S>& sub2, const Mat<S>& r12) {
  detail::require_interconnect_shapes(sub1, sub2);
  const Index n1 = sub1.n();
  const Index n2 = sub2.n();
  if (r12.rows() != n1 || r12.cols() != n2) {
    throw DimensionError("R_12 is " + detail::shape(r12) + ", expected " +
                         detail::shape(n1, n2));
  }
  const std::array<const SubsystemParams<S>*, 2> sub{&sub1, &sub2};
  const std::array<Mat<S>, 2> cross{r12, r12.transpose()};

  std::array<SubsystemBlocks<S>, 2> blk;
  for (int k = 0; k < 2; ++k) {
    const auto& s = *sub[k];
    const auto& other = *sub[1 - k];
    const Mat<S>& theta = s.ccr().theta();
    const Mat<S> j = symplectic_unit<S>(s.m());
    const Mat<S> j_other = symplectic_unit<S>(other.r());
    const Mat<S>& nk = s.coupling_external();
    const Mat<S>& lk = s.coupling_internal();
    blk[k].a = S(2) * theta *
               (s.energy() + nk.transpose() * j * nk + lk.transpose() * j_other * lk);
    blk[k].b = S(2) * theta * nk.transpose();
    blk[k].c = S(2) * s.selector() * j * nk;
    blk[k].e = S(2) * theta * lk.transpose();
    blk[k].f = S(2) * theta * cross[k];
  }

  const Index m1 = sub1.m();
  const Index m2 = sub2.m();
  Mat<S> a(n1 + n2, n1 + n2);
  a << blk[0].a, blk[0].f + blk[0].e * blk[1].c, blk[1].f + blk[1].e * blk[0].c, blk[1].a;
  Mat<S> b(n1 + n2, m1 + m2);
  b << blk[0].b, blk[0].e * sub2.selector(), blk[1].e * sub1.selector(), blk[1].b;

  Mat<S> r_tilde = Mat<S>::Zero(n1 + n2, n1 + n2);
  r_tilde.topRightCorner(n1, n2) = detail::field_mediated_offdiagonal(sub1, sub2);
  r_tilde.bottomLeftCorner(n2, n1) = r_tilde.topRightCorner(n1, n2).transpose();

  Mat<S> r0(n1 + n2, n1 + n2);
  r0 << sub1.energy(), r12, r12.transpose(), sub2.energy();

  Mat<S> closed_n(m1 + m2, n1 + n2);
  closed_n << sub1.coupling_external(), sub1.selector().transpose() * sub2.coupling_internal(),
      sub2.selector().transpose() * sub1.coupling_internal(), sub2.coupling_external();

  CcrMatrix<S> closed_ccr(detail::block_diag(sub1.ccr().theta(), sub2.ccr().theta()));
  const Mat<S> closed_selector = detail::block_diag(sub1.selector(), sub2.selector());
  const Mat<S> closed_r = r0 + r_tilde;

  const Realization<S> pr =
      build_realization(OqhoParams<S>(closed_ccr, closed_r, closed_n, closed_selector));
  const S residual = std::max((a - pr.a).norm(), (b - pr.b).norm());
  const S scale = std::max(S(1), std::max(S(a.norm()), S(b.norm())));
  if (residual > S(1e-10) * scale) {
    throw ConsistencyError("closed-loop block assembly disagrees with the realization of "
                           "the closed-loop energy and coupling matrices (residual " +
                           std::to_string(double(residual)) + ")");
  }

  Realization<S> closed;
  closed.a = a;
  closed.b = b;
  closed.a0 = pr.a0;
  closed.a_tilde = pr.a_tilde;
  closed.c = detail::block_diag(blk[0].c, blk[1].c);
  closed.d = closed_selector;

  return Interconnection<S>{sub1,      sub2,     r12,          std::move(closed_ccr),
                            r0,        r_tilde,  closed_r,     closed_n,
                            closed_selector, blk, std::move(closed), residual};
}

template <class S>
struct ZeroHamiltonianCoupling {
  Mat<S> r12;
  bool subsystem_energy_nonzero = false;  // closed-loop R != 0 because R_1 or R_2 != 0
};

/// R_12 = N_1^T J_1 D_1^T L_2 - L_1^T D_2 J_2 N_2, cancelling the field-mediated
/// energy so that the closed loop has zero Hamiltonian when R_1 = R_2 = 0.
template <class S>
ZeroHamiltonianCoupling<S> zero_hamiltonian_r12(const SubsystemParams<S>& sub1,
                                                const SubsystemParams<S>& sub2) {
  detail::require_interconnect_shapes(sub1, sub2);
  ZeroHamiltonianCoupling<S> out;
  out.r12 = -detail::field_mediated_offdiagonal(sub1, sub2);
  out.subsystem_energy_nonzero =
      sub1.energy().norm() > S(0) || sub2.energy().norm() > S(0);
  return out;
}

namespace detail {

template <class S>
void require_network_design_shapes(const Interconnection<S>& ic,
                                   const Weighting<S>& weighting, const Mat<S>& p) {
  require_design_shapes(ic.closed_ccr, weighting, p);
}

// sym(Theta Sigma (B B^T + 2 A P)) for the closed loop with the given A.
template <class S>
Mat<S> closed_loop_stationarity_kernel(const Interconnection<S>& ic, const Mat<S>& a,
                                       const Weighting<S>& weighting, const Mat<S>& p) {
  const Mat<S>& b = ic.closed_realization.b;
  return symmetrize(Mat<S>(ic.closed_ccr.theta() * weighting.sigma() *
                           (b * b.transpose() + S(2) * a * p)));
}

}  // namespace detail

/// Q = (sym(Theta Sigma (B B^T + 2 A-breve P)))_12 / 2, where A-breve is the
/// closed-loop A with the direct coupling R_12 removed.
template <class S>
Mat<S> q_matrix(const Interconnection<S>& ic, const Weighting<S>& weighting, const Mat<S>& p) {
  detail::require_network_design_shapes(ic, weighting, p);
  const Index n1 = ic.n1();
  const Index n2 = ic.n2();
  const Mat<S> rb = detail::block_diag(ic.sub1.energy(), ic.sub2.energy()) + ic.r_tilde;
  const Mat<S> a_breve =
      S(2) * ic.closed_ccr.theta() * rb + ic.closed_realization.a_tilde;
  const Mat<S> kernel = detail::closed_loop_stationarity_kernel(ic, a_breve, weighting, p);
  return S(0.5) * kernel.block(0, n1, n1, n2);
}

/// Delta'' of the closed loop for a given R_12 (R_1, R_2 and couplings fixed).
template <class S>
S dd_delta_closed_loop(const SubsystemParams<S>& sub1, const SubsystemParams<S>& sub2,
                       const Mat<S>& r12, const Weighting<S>& weighting, const Mat<S>& p) {
  const Interconnection<S> ic = assemble(sub1, sub2, r12);
  detail::require_network_design_shapes(ic, weighting, p);
  return delta_ddot(ic.closed_realization.a, ic.closed_realization.b, weighting.sigma(), p);
}

/// Derivative of the closed-loop Delta'' in R_12: -8 (sym(Theta Sigma (B B^T + 2 A P)))_12.
template <class S>
Mat<S> grad_dd_delta_wrt_r12(const Interconnection<S>& ic, const Weighting<S>& weighting,
                             const Mat<S>& p) {
  detail::require_network_design_shapes(ic, weighting, p);
  const Mat<S> kernel =
      detail::closed_loop_stationarity_kernel(ic, ic.closed_realization.a, weighting, p);
  return S(-8) * kernel.block(0, ic.n1(), ic.n1(), ic.n2());
}

namespace detail {

template <class S>
struct R12Equation {
  Mat<S> t11;  // Theta_1 Sigma_11 Theta_1
  Mat<S> t22;  // Theta_2 Sigma_22 Theta_2
  Mat<S> t12;  // Theta_1 Sigma_12 Theta_2
  Mat<S> p11, p22, p12;
  Mat<S> q;

  LinearMatrixEquation<S> vectorized() const {
    return LinearMatrixEquation<S>::general(
        q.rows(), q.cols(),
        {{t11, p22, false}, {p11, t22, false}, {t12, p12, true}, {p12, t12, true}}, q,
        false);
  }
};

template <class S>
R12Equation<S> r12_equation(const Interconnection<S>& ic, const Weighting<S>& weighting,
                            const Mat<S>& p) {
  const Index n1 = ic.n1();
  const Index n2 = ic.n2();
  const Mat<S>& th1 = ic.sub1.ccr().theta();
  const Mat<S>& th2 = ic.sub2.ccr().theta();
  const Mat<S>& sigma = weighting.sigma();
  R12Equation<S> eq;
  eq.t11 = th1 * sigma.topLeftCorner(n1, n1) * th1;
  eq.t22 = th2 * sigma.bottomRightCorner(n2, n2) * th2;
  eq.t12 = th1 * sigma.topRightCorner(n1, n2) * th2;
  eq.p11 = p.topLeftCorner(n1, n1);
  eq.p22 = p.bottomRightCorner(n2, n2);
  eq.p12 = p.topRightCorner(n1, n2);
  eq.q = q_matrix(ic, weighting, p);
  return eq;
}

}  // namespace detail

/// Residual of the R_12 stationarity equation
///   T11 R12 P22 + P11 R12 T22 + T12 R12^T P12 + P12 R12^T T12 + Q = 0.
template <class S>
S r12_stationarity_residual(const SubsystemParams<S>& sub1, const SubsystemParams<S>& sub2,
                            const Mat<S>& r12, const Weighting<S>& weighting,
                            const Mat<S>& p) {
  const Interconnection<S> ic = assemble<S>(sub1, sub2, Mat<S>::Zero(sub1.n(), sub2.n()));
  detail::require_network_design_shapes(ic, weighting, p);
  return detail::r12_equation(ic, weighting, p).vectorized().residual(r12);
}

enum class R12Method { Sylvester, Vectorized };

inline const char* to_string(R12Method m) {
  return m == R12Method::Sylvester ? "sylvester" : "vectorized";
}

template <class S>
struct R12Optimum {
  Mat<S> r12;
  Mat<S> q;
  S residual = S(0);
  R12Method method = R12Method::Sylvester;
  bool sylvester_fallback = false;  // Sylvester route was resonant
  bool consistent = true;
  Index null_space_dimension = 0;
};

/// Direct coupling R_12 minimizing the closed-loop Delta'' with R_1, R_2 fixed.
/// Block-diagonal Sigma or P reduces the stationarity equation to a Sylvester
/// equation; otherwise the full map including the R_12^T terms is vectorized
/// and solved by minimum-norm least squares.
template <class S>
R12Optimum<S> optimal_r12(const SubsystemParams<S>& sub1, const SubsystemParams<S>& sub2,
                          const Weighting<S>& weighting, const Mat<S>& p) {
  const Interconnection<S> ic = assemble<S>(sub1, sub2, Mat<S>::Zero(sub1.n(), sub2.n()));
  detail::require_network_design_shapes(ic, weighting, p);
  const detail::R12Equation<S> eq = detail::r12_equation(ic, weighting, p);
  const auto full = eq.vectorized();

  R12Optimum<S> out;
  out.q = eq.q;
  const Index n1 = ic.n1();
  const Index n2 = ic.n2();
  const bool block_diagonal =
      weighting.sigma().topRightCorner(n1, n2).norm() <= S(1e-14) ||
      eq.p12.norm() <= S(1e-14);

  bool solved = false;
  if (block_diagonal && detail::positive_definite(eq.p11) &&
      detail::positive_definite(eq.p22)) {
    // P11^{-1} T11 X + X T22 P22^{-1} + P11^{-1} Q P22^{-1} = 0
    const Mat<S> p11_inv = eq.p11.inverse();
    const Mat<S> p22_inv = eq.p22.inverse();
    try {
      out.r12 = solve_sylvester(Mat<S>(p11_inv * eq.t11), Mat<S>(eq.t22 * p22_inv),
                                Mat<S>(p11_inv * eq.q * p22_inv));
      out.method = R12Method::Sylvester;
      solved = true;
    } catch (const SingularEquationError&) {
      out.sylvester_fallback = true;
    }
  }
  if (!solved) {
    const LeastSquaresSolution<S> ls = solve_linear_matrix_equation(full);
    out.r12 = ls.solution;
    out.null_space_dimension = ls.null_space_dimension;
    out.method = R12Method::Vectorized;
  }
  out.residual = full.residual(out.r12);
  out.consistent = out.residual <= S(1e-8) * std::max(S(1), S(eq.q.norm()));
  return out;
}

}  // namespace oqho
