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

#include <doctest.h>

#include "support/oracles.hpp"

using namespace oqho;
using namespace oqho::testing;

TEST_SUITE("model") {

TEST_CASE("CCR matrix validation") {
  CHECK_NOTHROW(CcrMatrix<double>(0.5 * jbar()));
  CHECK_THROWS_WITH_AS(CcrMatrix<double>(M(M::Zero(2, 2))), doctest::Contains("CCR matrix singular"),
                       ValidationError);
  M sym = jbar();
  sym(0, 1) = 2;
  CHECK_THROWS_WITH_AS(CcrMatrix<double>{sym}, doctest::Contains("not antisymmetric"),
                       ValidationError);
  CHECK_THROWS_AS(CcrMatrix<double>(M(M::Zero(3, 3))), Error);
  const CcrMatrix<double> c = CcrMatrix<double>::canonical(4);
  CHECK((c.theta() - 0.5 * canonical_j(4)).norm() == 0.0);
  CHECK((c.theta() * c.inverse() - M::Identity(4, 4)).norm() < 1e-15);
}

TEST_CASE("Ito structure") {
  const auto ito = ItoStructure<double>::canonical(4);
  CHECK((ito.j.transpose() * ito.j - M::Identity(4, 4)).norm() == 0.0);
  CHECK((ito.j + ito.j.transpose()).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<CM> es(ito.omega);
  for (Index k = 0; k < 4; ++k) {
    const double v = es.eigenvalues()(k);
    CHECK((std::abs(v) < 1e-14 || std::abs(v - 2.0) < 1e-14));
  }
}

TEST_CASE("single-mode realization") {
  const OqhoParams<double> p(CcrMatrix<double>(0.5 * jbar()), M::Zero(2, 2), M::Identity(2, 2),
                             M(M::Identity(2, 2)));
  const Realization<double> rz = build_realization(p);
  CHECK((rz.a + M::Identity(2, 2)).norm() < 1e-15);
  CHECK((rz.b - jbar()).norm() < 1e-15);
  CHECK((rz.c - 2.0 * jbar()).norm() < 1e-15);
  CHECK((rz.d - M::Identity(2, 2)).norm() == 0.0);
  CHECK(check_physical_realizability(rz.a, rz.b, p.ccr(), p.ito()) <= 1e-12);
}

TEST_CASE("decoupled oscillator has only the Hamiltonian part") {
  Rng rng(21);
  const CcrMatrix<double> ccr(random_theta(rng, 4));
  const M r = random_symmetric(rng, 4);
  const Realization<double> rz = build_realization(OqhoParams<double>(ccr, r, M::Zero(2, 4)));
  CHECK(rz.b.norm() == 0.0);
  CHECK(rz.c.norm() == 0.0);
  CHECK(rz.a_tilde.norm() == 0.0);
  CHECK((rz.a - 2.0 * ccr.theta() * r).norm() < 1e-14);

  const Realization<double> rot =
      build_realization(OqhoParams<double>(CcrMatrix<double>(0.5 * jbar()), M::Identity(2, 2),
                                           M::Zero(2, 2)));
  CHECK((rot.a - jbar()).norm() < 1e-15);
}

TEST_CASE("realization invariants on random parameters") {
  Rng rng(22);
  for (int i = 0; i < 50; ++i) {
    const OqhoParams<double> p = random_params(rng, 2 + 2 * (i % 3), 2 + 2 * (i % 2));
    const Realization<double> rz = build_realization(p);
    CHECK(check_physical_realizability(rz.a, rz.b, p.ccr(), p.ito()) <= 1e-12);
    CHECK((rz.a - rz.a0 - rz.a_tilde).norm() <= 1e-14 * std::max(1.0, rz.a.norm()));
    const M njn = p.coupling().transpose() * p.ito().j * p.coupling();
    CHECK((njn + njn.transpose()).norm() <= 1e-12);
    const M alt = -0.5 * rz.b * p.ito().j * rz.b.transpose() * p.ccr().inverse();
    CHECK((rz.a_tilde - alt).norm() <= 1e-12 * std::max(1.0, rz.a_tilde.norm()));
  }
}

TEST_CASE("realizability residual of a non-realizable pair") {
  const CcrMatrix<double> ccr(0.5 * jbar());
  const auto ito = ItoStructure<double>::canonical(2);
  CHECK(check_physical_realizability(M(M::Identity(2, 2)), M(M::Zero(2, 2)), ccr, ito) ==
        doctest::Approx(std::sqrt(2.0)));
  CHECK(check_physical_realizability(M(-M::Identity(2, 2)), jbar(), ccr, ito) <= 1e-12);
  CHECK_THROWS_AS(check_physical_realizability(M(M::Identity(3, 3)), jbar(), ccr, ito),
                  DimensionError);
}

TEST_CASE("parameter validation messages") {
  const CcrMatrix<double> ccr(0.5 * jbar());
  M r(2, 2);
  r << 1, 0.5, 0.2, 1;
  CHECK_THROWS_WITH_AS(OqhoParams<double>(ccr, r, M::Identity(2, 2)),
                       doctest::Contains("energy matrix not symmetric"), ValidationError);
  CHECK_THROWS_AS(OqhoParams<double>(ccr, M::Zero(3, 3), M::Identity(2, 2)), DimensionError);
  CHECK_THROWS_AS(OqhoParams<double>(ccr, M::Zero(2, 2), M::Identity(3, 2)), DimensionError);
  M d(2, 4);
  d << 1, 0, 0, 0, 0, 0, 1, 0;  // selects a position from each of two pairs
  CHECK_THROWS_AS(OqhoParams<double>(ccr, M::Zero(2, 2), M(M::Identity(4, 2)), d),
                  ValidationError);
  CHECK_NOTHROW(OqhoParams<double>(ccr, M::Zero(2, 2), M(M::Identity(4, 2)), pair_selector(4, {1})));
}

TEST_CASE("selector accepts rotated conjugate pairs") {
  // Any D with D D^T = I and D J D^T = jbar is admissible, not only permutation rows.
  const double c = std::cos(0.3), s = std::sin(0.3);
  M d(2, 4);
  d << c, 0, s, 0, 0, c, 0, s;
  CHECK_NOTHROW(OqhoParams<double>(CcrMatrix<double>(0.5 * jbar()), M::Zero(2, 2),
                                   M(M::Identity(4, 2)), d));
}

TEST_CASE("spectral classification examples") {
  const SpectralClass<double> h = classify_spectrum(M(-M::Identity(2, 2)));
  CHECK(h.category == SpectralCategory::Hurwitz);
  CHECK_FALSE(h.on_bisectors);

  const SpectralClass<double> m = classify_spectrum(jbar());
  CHECK(m.category == SpectralCategory::MarginallyStable);
  CHECK(m.on_bisectors);

  M r = M::Zero(2, 2);
  r.diagonal() << 1, 4;
  const SpectralClass<double> w = classify_spectrum(M(jbar() * r));
  CHECK(w.category == SpectralCategory::MarginallyStable);
  CHECK(std::abs(std::abs(w.eigenvalues(0).imag()) - 2.0) < 1e-12);
  CHECK(std::abs(w.eigenvalues(0).real()) < 1e-12);

  CHECK(classify_spectrum(M(M::Identity(2, 2))).category == SpectralCategory::Unstable);
  CHECK(std::string(to_string(SpectralCategory::Hurwitz)) == "hurwitz");
}

TEST_CASE("definite energy without coupling gives an imaginary spectrum") {
  Rng rng(23);
  for (int i = 0; i < 20; ++i) {
    const Index n = 2 + 2 * (i % 3);
    M r = random_pd(rng, n, 2.0);
    if (i % 2) r = -r;
    const CcrMatrix<double> ccr(random_theta(rng, n));
    const M a = build_realization(OqhoParams<double>(ccr, r, M::Zero(2, n))).a;
    const SpectralClass<double> sc = classify_spectrum(a);
    CHECK(sc.eigenvalues.real().cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("zero energy gives even multiplicities of nonzero eigenvalues") {
  Rng rng(24);
  for (int i = 0; i < 20; ++i) {
    const Index n = 2 + 2 * (i % 3);
    const OqhoParams<double> p(CcrMatrix<double>(random_theta(rng, n)), M::Zero(n, n),
                               gaussian(rng, 2 + 2 * (i % 2), n));
    const auto clusters = cluster_eigenvalues(eigenvalues_real(build_realization(p).a), 1e-6);
    for (const auto& c : clusters) {
      if (std::abs(c.center) > 1e-6) CHECK(c.multiplicity % 2 == 0);
    }
  }
}

}  // TEST_SUITE
