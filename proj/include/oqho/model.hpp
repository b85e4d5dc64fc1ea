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
#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oqho/numerics.hpp"
#include "oqho/types.hpp"

namespace oqho {

/// Antisymmetric nonsingular matrix Theta of the commutation relations
/// [X, X^T] = 2i Theta.
template <class S>
class CcrMatrix {
 public:
  /// Validates a user-supplied Theta. Antisymmetry is checked against
  /// antisymmetry_tol * max(1, ||Theta||); singularity against the smallest
  /// singular value relative to the largest.
  explicit CcrMatrix(const Mat<S>& theta, S antisymmetry_tol = S(1e-12),
                     S singularity_rtol = S(1e-10)) {
    detail::require_square(theta, "CCR matrix");
    const Index n = theta.rows();
    if (n == 0 || n % 2 != 0) {
      throw ValidationError("CCR matrix dimension must be even and positive, got " +
                            std::to_string(n));
    }
    if (!theta.allFinite()) throw ValidationError("CCR matrix has non-finite entries");
    if ((theta + theta.transpose()).norm() >
        antisymmetry_tol * std::max(S(1), S(theta.norm()))) {
      throw ValidationError("CCR matrix not antisymmetric");
    }
    theta_ = S(0.5) * (theta - theta.transpose());
    Eigen::JacobiSVD<Mat<S>> svd(theta_);
    const auto& sv = svd.singularValues();
    if (!(sv(n - 1) > singularity_rtol * sv(0))) {
      throw ValidationError("CCR matrix singular");
    }
    inverse_ = theta_.inverse();
  }

  /// Theta = I_{n/2} (x) j_bar / 2 (position-momentum pairs).
  static CcrMatrix canonical(Index n) {
    return CcrMatrix(S(0.5) * symplectic_unit<S>(n));
  }

  const Mat<S>& theta() const noexcept { return theta_; }
  const Mat<S>& inverse() const noexcept { return inverse_; }
  Index dim() const noexcept { return theta_.rows(); }

 private:
  Mat<S> theta_;
  Mat<S> inverse_;
};

/// Ito matrix Omega = I_m + iJ of the vacuum input fields.
template <class S>
struct ItoStructure {
  Index m = 0;
  Mat<S> j;
  CMat<S> omega;

  static ItoStructure canonical(Index m) {
    ItoStructure ito;
    ito.m = m;
    ito.j = symplectic_unit<S>(m);
    ito.omega = Mat<S>::Identity(m, m).template cast<std::complex<S>>() +
                std::complex<S>(0, 1) * ito.j.template cast<std::complex<S>>();
    return ito;
  }
};

namespace detail {

// D D^T = I_r and D J D^T = I_{r/2} (x) j_bar.
template <class S>
void validate_selector(const Mat<S>& d, Index m, const std::string& name) {
  if (d.cols() != m) {
    throw DimensionError(name + " is " + shape(d) + ", expected r x " +
                         std::to_string(m));
  }
  const Index r = d.rows();
  if (r == 0 || r % 2 != 0 || r > m) {
    throw ValidationError(name + " must have an even number r <= " +
                          std::to_string(m) + " of rows, got " + std::to_string(r));
  }
  if ((d * d.transpose() - Mat<S>::Identity(r, r)).norm() > S(1e-12)) {
    throw ValidationError(name + " rows are not orthonormal (D D^T != I)");
  }
  if ((d * symplectic_unit<S>(m) * d.transpose() - symplectic_unit<S>(r)).norm() >
      S(1e-12)) {
    throw ValidationError(name + " does not select conjugate pairs of field channels");
  }
}

template <class S>
Mat<S> validated_symmetric(const Mat<S>& r, Index n, const std::string& name,
                           const std::string& what) {
  if (r.rows() != n || r.cols() != n) {
    throw DimensionError(name + " is " + shape(r) + ", expected " + shape(n, n) +
                         " to match the CCR matrix");
  }
  if (!r.allFinite()) throw ValidationError(name + " has non-finite entries");
  if ((r - r.transpose()).norm() > S(1e-12) * std::max(S(1), S(r.norm()))) {
    throw ValidationError(what + " not symmetric");
  }
  return symmetrize(r);
}

}  // namespace detail

/// Physical parameters (Theta, R, N, D) of one open oscillator.
template <class S>
class OqhoParams {
 public:
  OqhoParams(CcrMatrix<S> ccr, const Mat<S>& energy, const Mat<S>& coupling,
             std::optional<Mat<S>> selector = std::nullopt)
      : ccr_(std::move(ccr)) {
    const Index n = ccr_.dim();
    energy_ = detail::validated_symmetric<S>(energy, n, "energy matrix R",
                                             "energy matrix");
    if (coupling.cols() != n) {
      throw DimensionError("coupling matrix N is " + detail::shape(coupling) +
                           ", expected m x " + std::to_string(n));
    }
    if (coupling.rows() == 0 || coupling.rows() % 2 != 0) {
      throw DimensionError("coupling matrix N must have an even number of rows, got " +
                            std::to_string(coupling.rows()));
    }
    if (!coupling.allFinite()) throw ValidationError("coupling matrix N has non-finite entries");
    coupling_ = coupling;
    const Index m = coupling_.rows();
    selector_ = selector ? *selector : Mat<S>::Identity(m, m);
    detail::validate_selector<S>(selector_, m, "selector D");
  }

  const CcrMatrix<S>& ccr() const noexcept { return ccr_; }
  const Mat<S>& energy() const noexcept { return energy_; }
  const Mat<S>& coupling() const noexcept { return coupling_; }
  const Mat<S>& selector() const noexcept { return selector_; }
  ItoStructure<S> ito() const { return ItoStructure<S>::canonical(m()); }

  Index n() const noexcept { return ccr_.dim(); }
  Index m() const noexcept { return coupling_.rows(); }
  Index r() const noexcept { return selector_.rows(); }

  OqhoParams with_energy(const Mat<S>& energy) const {
    return OqhoParams(ccr_, energy, coupling_, selector_);
  }

 private:
  CcrMatrix<S> ccr_;
  Mat<S> energy_;
  Mat<S> coupling_;
  Mat<S> selector_;
};

/// State-space quadruple dX = AX dt + B dW, dY = CX dt + D dW together with
/// the Hamiltonian/skew-Hamiltonian split of A.
template <class S>
struct Realization {
  Mat<S> a;
  Mat<S> b;
  Mat<S> c;
  Mat<S> d;
  Mat<S> a0;       // 2 Theta R
  Mat<S> a_tilde;  // 2 Theta N^T J N
};

/// A = 2 Theta (R + N^T J N), B = 2 Theta N^T, C = 2 D J N.
template <class S>
Realization<S> build_realization(const OqhoParams<S>& params) {
  const Mat<S>& theta = params.ccr().theta();
  const Mat<S>& n_mat = params.coupling();
  const Mat<S> j = symplectic_unit<S>(params.m());
  Realization<S> out;
  out.a0 = S(2) * theta * params.energy();
  out.a_tilde = S(2) * theta * n_mat.transpose() * j * n_mat;
  out.a = out.a0 + out.a_tilde;
  out.b = S(2) * theta * n_mat.transpose();
  out.c = S(2) * params.selector() * j * n_mat;
  out.d = params.selector();
  return out;
}

/// Frobenius norm of A Theta + Theta A^T + B J B^T, which vanishes for
/// physically realizable pairs (A, B).
template <class D1, class D2, class S = typename D1::Scalar>
S check_physical_realizability(const Eigen::MatrixBase<D1>& a,
                               const Eigen::MatrixBase<D2>& b,
                               const CcrMatrix<S>& ccr,
                               const ItoStructure<S>& ito) {
  const Index n = ccr.dim();
  if (a.rows() != n || a.cols() != n) {
    throw DimensionError("A is " + detail::shape(a) + ", expected " +
                         detail::shape(n, n));
  }
  if (b.rows() != n || b.cols() != ito.m) {
    throw DimensionError("B is " + detail::shape(b) + ", expected " +
                         detail::shape(n, ito.m));
  }
  const Mat<S>& theta = ccr.theta();
  return (a * theta + theta * a.transpose() + b * ito.j * b.transpose()).norm();
}

enum class SpectralCategory { Hurwitz, MarginallyStable, Unstable };

inline const char* to_string(SpectralCategory c) {
  switch (c) {
    case SpectralCategory::Hurwitz: return "hurwitz";
    case SpectralCategory::MarginallyStable: return "marginally-stable";
    case SpectralCategory::Unstable: return "unstable";
  }
  return "unknown";
}

template <class S>
struct SpectralClass {
  CVec<S> eigenvalues;
  SpectralCategory category = SpectralCategory::Hurwitz;
  // Some eigenvalue of A is imaginary, i.e. a square root of it lies on the
  // bisectors |Re z| = |Im z|.
  bool on_bisectors = false;
  S max_real_part = S(0);
};

template <class Derived>
SpectralClass<typename Derived::Scalar> classify_spectrum(
    const Eigen::MatrixBase<Derived>& a, typename Derived::Scalar tol = 1e-9) {
  using S = typename Derived::Scalar;
  SpectralClass<S> out;
  out.eigenvalues = eigenvalues_real(a);
  if (out.eigenvalues.size() == 0) return out;
  out.max_real_part = out.eigenvalues.real().maxCoeff();
  if (out.max_real_part > tol) {
    out.category = SpectralCategory::Unstable;
  } else if (out.max_real_part >= -tol) {
    out.category = SpectralCategory::MarginallyStable;
  } else {
    out.category = SpectralCategory::Hurwitz;
  }
  for (Index k = 0; k < out.eigenvalues.size(); ++k) {
    if (std::abs(out.eigenvalues(k).real()) <= tol) out.on_bisectors = true;
  }
  return out;
}

template <class S>
struct EigenvalueCluster {
  std::complex<S> center;
  Index multiplicity = 0;
};

/// Groups eigenvalues whose chained distances are within gap.
template <class S>
std::vector<EigenvalueCluster<S>> cluster_eigenvalues(const CVec<S>& values,
                                                      S gap = S(1e-6)) {
  const Index n = values.size();
  std::vector<Index> parent(n);
  for (Index i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](Index i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (std::abs(values(i) - values(j)) <= gap) parent[find(i)] = find(j);
    }
  }
  std::vector<EigenvalueCluster<S>> clusters;
  std::vector<Index> slot(n, -1);
  for (Index i = 0; i < n; ++i) {
    const Index root = find(i);
    if (slot[root] < 0) {
      slot[root] = Index(clusters.size());
      clusters.push_back({std::complex<S>(0), 0});
    }
    auto& c = clusters[slot[root]];
    c.center += values(i);
    ++c.multiplicity;
  }
  for (auto& c : clusters) c.center /= S(c.multiplicity);
  return clusters;
}

}  // namespace oqho
