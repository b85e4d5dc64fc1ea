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
#include <limits>
#include <optional>
#include <vector>

#include "oqho/dynamics.hpp"
#include "oqho/model.hpp"

namespace oqho {

/// How a decoherence time was settled.
enum class Certificate {
  Crossing,          // Delta crossed the threshold; tau is finite
  IdenticallyZero,   // Delta(t) = 0 for all t, tau = +inf
  HurwitzLimit,      // A Hurwitz, no crossing on the grid, limit <= threshold
  Inconclusive,      // no crossing within the horizon, nothing more is known
};

inline const char* to_string(Certificate c) {
  switch (c) {
    case Certificate::Crossing: return "crossing";
    case Certificate::IdenticallyZero: return "identically-zero";
    case Certificate::HurwitzLimit: return "hurwitz-limit";
    case Certificate::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

template <class S>
struct DecoherenceOptions {
  Index grid_points = 2000;          // half log-spaced, half linear
  std::optional<S> horizon;          // default 50 max(tau', 1/max(||A||, 1))
  S log_grid_floor = S(1e-9);        // first log point, as a fraction of the horizon
  S root_tolerance = S(1e-10);       // bracket width bound, relative to the horizon
  S relative_root_tolerance = S(1e-15);  // and relative to the root itself
  int max_bisections = 400;
};

template <class S>
struct DecoherenceReport {
  S epsilon = S(0);
  S threshold = S(0);       // epsilon ||F sqrt(P)||^2
  S tau = S(0);             // +inf when no crossing
  S tau_prime = S(0);       // +inf when F B = 0
  S tau_second = std::numeric_limits<S>::quiet_NaN();
  S tau_hat = std::numeric_limits<S>::quiet_NaN();
  bool expansion_valid = false;  // F B != 0
  S horizon_used = S(0);
  Index grid_points = 0;
  int bisection_iterations = 0;
  Certificate certificate = Certificate::Inconclusive;
  S limit = std::numeric_limits<S>::quiet_NaN();  // Hurwitz limit when computed
};

namespace detail {

template <class S>
S signal_scale(const Weighting<S>& weighting, const MomentData<S>& moments) {
  if (weighting.dim() != moments.dim()) {
    throw DimensionError("weighting and moment data dimensions differ");
  }
  const S scale = (weighting.f() * moments.sqrt_p()).squaredNorm();
  const S ref = weighting.f().squaredNorm() * moments.sqrt_p().squaredNorm();
  if (!(scale > S(1e-28) * ref) || scale == S(0)) {
    throw PreconditionError("F sqrt(P) = 0: nothing to store in the weighted variables");
  }
  return scale;
}

// Delta vanishes identically iff F A^k [B, A sqrt(P)] = 0 for k < n.
template <class S>
bool deviation_identically_zero(const Mat<S>& a, const Mat<S>& b, const Mat<S>& f,
                                const Mat<S>& sqrt_p) {
  const Index n = a.rows();
  Mat<S> krylov(n, b.cols() + n);
  krylov << b, a * sqrt_p;
  const S f_norm = f.norm();
  for (Index k = 0; k < n; ++k) {
    const S k_norm = krylov.norm();
    if (k_norm == S(0)) return true;
    if ((f * krylov).norm() > S(1e-13) * f_norm * k_norm) return false;
    krylov = a * krylov;
  }
  return true;
}

template <class S>
std::vector<S> hybrid_grid(S horizon, Index points, S floor) {
  const Index n_log = std::max<Index>(points / 2, 2);
  const Index n_lin = std::max<Index>(points - n_log, 2);
  std::vector<S> grid;
  grid.reserve(n_log + n_lin);
  const S lo = std::log(floor * horizon);
  const S hi = std::log(horizon);
  for (Index k = 0; k < n_log; ++k) {
    grid.push_back(std::exp(lo + (hi - lo) * S(k) / S(n_log - 1)));
  }
  for (Index k = 1; k <= n_lin; ++k) grid.push_back(horizon * S(k) / S(n_lin));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace detail

/// tau' = ||F sqrt(P)||^2 / ||F B||^2, or +inf when F B = 0.
template <class S>
S tau_prime(const Mat<S>& b, const Weighting<S>& weighting,
            const MomentData<S>& moments) {
  const S scale = detail::signal_scale(weighting, moments);
  if (b.rows() != weighting.dim()) {
    throw DimensionError("B has " + std::to_string(b.rows()) + " rows, expected " +
                         std::to_string(weighting.dim()));
  }
  const S noise = (weighting.f() * b).squaredNorm();
  if (noise == S(0)) return std::numeric_limits<S>::infinity();
  return scale / noise;
}

/// tau'' = -Delta'' ||F sqrt(P)||^4 / ||F B||^6; requires F B != 0.
template <class S>
S tau_second(const Realization<S>& system, const Weighting<S>& weighting,
             const MomentData<S>& moments) {
  const S scale = detail::signal_scale(weighting, moments);
  detail::require_system_shapes<S>(system.a, system.b, weighting.dim(), moments.dim());
  const S noise = (weighting.f() * system.b).squaredNorm();
  if (noise == S(0)) {
    throw PreconditionError("F B = 0: the small-epsilon expansion of tau does not apply");
  }
  const S ddot = delta_ddot(system.a, system.b, weighting.sigma(), moments.p());
  return -ddot * scale * scale / (noise * noise * noise);
}

/// Quadratic approximation tau' eps + tau'' eps^2 / 2.
template <class S>
S tau_hat(const Realization<S>& system, const Weighting<S>& weighting,
          const MomentData<S>& moments, S epsilon) {
  const S second = tau_second(system, weighting, moments);
  const S first = tau_prime(system.b, weighting, moments);
  return first * epsilon + S(0.5) * second * epsilon * epsilon;
}

/// First time Delta(t) exceeds epsilon ||F sqrt(P)||^2.
///
/// Delta is scanned on a hybrid log/linear grid over [0, horizon]; the first
/// bracketing interval is refined by bisection keeping Delta(lo) <= threshold
/// < Delta(hi), and the midpoint of the final bracket is returned.
template <class S>
DecoherenceReport<S> decoherence_time(const Realization<S>& system,
                                      const Weighting<S>& weighting,
                                      const MomentData<S>& moments, S epsilon,
                                      const DecoherenceOptions<S>& opts = {}) {
  if (!(epsilon > S(0))) throw PreconditionError("epsilon must be positive");
  if (opts.horizon && !(*opts.horizon > S(0))) {
    throw PreconditionError("horizon must be positive");
  }
  const Mat<S>& a = system.a;
  const Mat<S>& b = system.b;
  detail::require_system_shapes<S>(a, b, weighting.dim(), moments.dim());

  DecoherenceReport<S> report;
  report.epsilon = epsilon;
  report.threshold = epsilon * detail::signal_scale(weighting, moments);
  report.tau_prime = tau_prime(b, weighting, moments);
  report.expansion_valid = std::isfinite(report.tau_prime);
  if (report.expansion_valid) {
    report.tau_second = tau_second(system, weighting, moments);
    report.tau_hat = report.tau_prime * epsilon +
                     S(0.5) * report.tau_second * epsilon * epsilon;
  }

  const S inv_rate = S(1) / std::max(S(1), S(a.norm()));
  report.horizon_used =
      opts.horizon ? *opts.horizon
                   : S(50) * std::max(report.expansion_valid ? report.tau_prime : S(0),
                                      inv_rate);

  if (detail::deviation_identically_zero<S>(a, b, weighting.f(), moments.sqrt_p())) {
    report.tau = std::numeric_limits<S>::infinity();
    report.certificate = Certificate::IdenticallyZero;
    return report;
  }

  const DeviationEvaluator<S> eval(a, b, weighting, moments);
  const std::vector<S> grid =
      detail::hybrid_grid(report.horizon_used, opts.grid_points, opts.log_grid_floor);
  report.grid_points = Index(grid.size());

  S lo = S(0);
  std::optional<S> hi;
  for (const S t : grid) {
    if (eval(t).total() > report.threshold) {
      hi = t;
      break;
    }
    lo = t;
  }

  if (!hi) {
    report.tau = std::numeric_limits<S>::infinity();
    report.certificate = Certificate::Inconclusive;
    if (classify_spectrum(a).category == SpectralCategory::Hurwitz) {
      report.limit = hurwitz_limit(a, b, weighting, moments);
      if (report.limit <= report.threshold) report.certificate = Certificate::HurwitzLimit;
    }
    return report;
  }

  S upper = *hi;
  const S abs_tol = opts.root_tolerance * report.horizon_used;
  int it = 0;
  for (; it < opts.max_bisections; ++it) {
    const S width = upper - lo;
    const S rel_tol = opts.relative_root_tolerance * upper;
    if (width <= std::min(abs_tol, std::max(rel_tol, std::numeric_limits<S>::min()))) break;
    const S mid = lo + S(0.5) * width;
    if (mid <= lo || mid >= upper) break;
    if (eval(mid).total() > report.threshold) {
      upper = mid;
    } else {
      lo = mid;
    }
  }
  report.bisection_iterations = it;
  report.tau = lo + S(0.5) * (upper - lo);
  report.certificate = Certificate::Crossing;
  return report;
}

}  // namespace oqho
