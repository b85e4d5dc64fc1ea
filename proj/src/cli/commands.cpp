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

#include "cli/commands.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <spdlog/spdlog.h>

namespace oqho::cli {

using json = nlohmann::json;
using M = Mat<double>;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

json num(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

json matrix_json(const M& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json eigen_json(const CVec<double>& values) {
  json out = json::array();
  for (Index k = 0; k < values.size(); ++k) out.push_back({values(k).real(), values(k).imag()});
  return out;
}

json check_json(const std::string& name, double value, double tolerance, bool pass) {
  return {{"name", name}, {"value", num(value)}, {"tolerance", num(tolerance)}, {"pass", pass}};
}

std::string mode_name(Mode m) { return m == Mode::Single ? "single" : "interconnection"; }

Realization<double> system_of(const Scenario& sc) {
  if (sc.mode == Mode::Single) return build_realization(*sc.single);
  return assemble(*sc.sub1, *sc.sub2, sc.r12).closed_realization;
}

ItoStructure<double> ito_of(const Scenario& sc) {
  if (sc.mode == Mode::Single) return sc.single->ito();
  return ItoStructure<double>::canonical(sc.sub1->m() + sc.sub2->m());
}

MomentData<double> moments_of(const Scenario& sc) {
  const M& p = sc.require_p();
  try {
    return MomentData<double>(p, sc.system_ccr());
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("/P: ") + e.what());
  }
}

void require_mode(const Scenario& sc, Mode mode, const std::string& command) {
  if (sc.mode != mode) {
    throw ValidationError(command + " needs a " + mode_name(mode) + " scenario");
  }
}

DecoherenceOptions<double> decoherence_options(const Scenario& sc, const CommandOptions& opts) {
  DecoherenceOptions<double> d;
  if (opts.grid_points) d.grid_points = *opts.grid_points;
  if (opts.horizon) {
    d.horizon = *opts.horizon;
  } else if (sc.horizon) {
    d.horizon = *sc.horizon;
  }
  if (opts.tolerance) d.root_tolerance = *opts.tolerance;
  return d;
}

std::vector<double> curve_times(const Scenario& sc, const CommandOptions& opts, const M& a) {
  const GridSpec& g = sc.grid;
  if (g.times && !opts.grid_points && !opts.horizon) return *g.times;
  const Index points = opts.grid_points.value_or(g.points);
  if (points < 2) throw ValidationError("grid needs at least two points");
  std::optional<double> t_max = opts.horizon;
  if (!t_max) t_max = g.t_max;
  if (!t_max) t_max = sc.horizon;
  if (g.spacing == Spacing::Linear) {
    return linear_time_grid(t_max.value_or(10.0 / std::max(1.0, a.norm())), points);
  }
  if (!t_max) return default_time_grid(a, points);
  std::vector<double> grid{0.0};
  const double lo = std::log10(1e-4 * *t_max);
  const double hi = std::log10(*t_max);
  for (Index k = 0; k < points; ++k) {
    grid.push_back(std::pow(10.0, lo + (hi - lo) * double(k) / double(points - 1)));
  }
  grid.back() = *t_max;
  return grid;
}

double fb_norm(const Realization<double>& sys, const Weighting<double>& w) {
  return (w.f() * sys.b).norm();
}

// tau-hat at each epsilon, or nan when the expansion does not apply.
json tau_hat_list(const Realization<double>& sys, const Weighting<double>& w,
                  const MomentData<double>& md, const std::vector<double>& eps) {
  json out = json::array();
  const bool valid = fb_norm(sys, w) > 0.0;
  for (const double e : eps) {
    out.push_back(num(valid ? tau_hat(sys, w, md, e) : std::numeric_limits<double>::quiet_NaN()));
  }
  return out;
}

std::string report_text(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"check",       "delta-curve",     "tau",
                                              "optimize-energy", "optimize-r12", "spectrum",
                                              "interconnect"};
  return names;
}

CommandOutput cmd_check(const Scenario& sc, const CommandOptions& opts) {
  CommandOutput out;
  const double tol = opts.tolerance.value_or(1e-12);
  const CcrMatrix<double> ccr = sc.system_ccr();
  const Realization<double> sys = system_of(sc);
  const ItoStructure<double> ito = ito_of(sc);
  json checks = json::array();
  bool ok = true;
  auto add = [&](const std::string& name, double value, double tolerance, bool pass) {
    checks.push_back(check_json(name, value, tolerance, pass));
    ok = ok && pass;
  };

  const double pr = check_physical_realizability(sys.a, sys.b, ccr, ito);
  const double pr_scale =
      std::max(1.0, 2.0 * sys.a.norm() * ccr.theta().norm() + sys.b.squaredNorm());
  add("physical_realizability", pr, tol * pr_scale, pr <= tol * pr_scale);

  if (sc.mode == Mode::Interconnection) {
    const Interconnection<double> ic = assemble(*sc.sub1, *sc.sub2, sc.r12);
    const double scale = std::max(1.0, std::max(ic.closed_realization.a.norm(),
                                                ic.closed_realization.b.norm()));
    add("closed_loop_consistency", ic.consistency_residual, tol * scale,
        ic.consistency_residual <= tol * scale);
  }

  std::vector<M> selectors;
  if (sc.mode == Mode::Single) {
    selectors.push_back(sc.single->selector());
  } else {
    selectors.push_back(sc.sub1->selector());
    selectors.push_back(sc.sub2->selector());
  }
  for (std::size_t k = 0; k < selectors.size(); ++k) {
    const M& d = selectors[k];
    const double orth = (d * d.transpose() - M::Identity(d.rows(), d.rows())).norm();
    const double sympl =
        (d * symplectic_unit<double>(d.cols()) * d.transpose() - symplectic_unit<double>(d.rows()))
            .norm();
    const std::string name =
        selectors.size() == 1 ? "selector" : "selector_" + std::to_string(k + 1);
    add(name, std::max(orth, sympl), 1e-12, std::max(orth, sympl) <= 1e-12);
  }

  if (sc.p) {
    const CMat<double> pi = sc.p->cast<std::complex<double>>() +
                            std::complex<double>(0, 1) * ccr.theta().cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<CMat<double>> solver(pi, Eigen::EigenvaluesOnly);
    const double lam = solver.eigenvalues().minCoeff();
    add("uncertainty_relation", lam, -1e-10, lam >= -1e-10);
  }

  const SpectralClass<double> spec = classify_spectrum(sys.a);
  out.report = {{"command", "check"},
                {"mode", mode_name(sc.mode)},
                {"n", sc.dim()},
                {"checks", checks},
                {"spectrum",
                 {{"category", to_string(spec.category)},
                  {"max_real_part", spec.max_real_part},
                  {"on_bisectors", spec.on_bisectors},
                  {"eigenvalues", eigen_json(spec.eigenvalues)}}},
                {"pass", ok}};
  std::ostringstream csv;
  csv << "check,value,tolerance,pass\n";
  for (const json& c : checks) {
    const auto field = [](const json& v) {
      return v.is_number() ? format_number(v.get<double>()) : v.get<std::string>();
    };
    csv << c["name"].get<std::string>() << ',' << field(c["value"]) << ','
        << field(c["tolerance"]) << ',' << (c["pass"].get<bool>() ? "true" : "false") << '\n';
  }
  csv << "spectral_class," << to_string(spec.category) << ",,true\n";
  out.csv = csv.str();
  std::ostringstream summary;
  summary << "check: " << (ok ? "pass" : "FAIL") << " (" << checks.size() << " checks, spectrum "
          << to_string(spec.category) << ")\n";
  out.summary = summary.str();
  out.ok = ok;
  return out;
}

CommandOutput cmd_delta_curve(const Scenario& sc, const CommandOptions& opts) {
  const Realization<double> sys = system_of(sc);
  const MomentData<double> md = moments_of(sc);
  const std::vector<double> times = curve_times(sc, opts, sys.a);
  spdlog::debug("delta-curve: {} grid points", times.size());
  const DeviationCurve<double> curve =
      deviation_curve(sys.a, sys.b, sc.require_weighting(), md, times);

  CommandOutput out;
  out.curve = true;
  out.default_format = Format::Csv;
  std::ostringstream csv;
  csv << "t,delta,signal_term,noise_term\n";
  json t = json::array(), d = json::array(), s = json::array(), nz = json::array();
  for (std::size_t i = 0; i < times.size(); ++i) {
    csv << format_number(times[i]) << ',' << format_number(curve.delta_values[i]) << ','
        << format_number(curve.signal_term[i]) << ',' << format_number(curve.noise_term[i])
        << '\n';
    t.push_back(times[i]);
    d.push_back(num(curve.delta_values[i]));
    s.push_back(num(curve.signal_term[i]));
    nz.push_back(num(curve.noise_term[i]));
  }
  out.csv = csv.str();
  out.report = {{"command", "delta-curve"}, {"t", t}, {"delta", d}, {"signal_term", s},
                {"noise_term", nz}};
  out.summary = "delta-curve: " + std::to_string(times.size()) + " rows\n";
  return out;
}

CommandOutput cmd_tau(const Scenario& sc, const CommandOptions& opts) {
  const Realization<double> sys = system_of(sc);
  const MomentData<double> md = moments_of(sc);
  const Weighting<double>& w = sc.require_weighting();
  const DecoherenceOptions<double> dopts = decoherence_options(sc, opts);

  CommandOutput out;
  out.default_format = Format::Csv;
  json reports = json::array();
  std::ostringstream csv, summary;
  csv << "epsilon,tau,tau_prime,tau_second,tau_hat,certificate,expansion_valid,horizon_used,"
         "bisection_iterations,limit\n";
  for (const double eps : sc.epsilons) {
    const DecoherenceReport<double> r = decoherence_time(sys, w, md, eps, dopts);
    reports.push_back({{"epsilon", r.epsilon},
                       {"threshold", num(r.threshold)},
                       {"tau", num(r.tau)},
                       {"tau_prime", num(r.tau_prime)},
                       {"tau_second", num(r.tau_second)},
                       {"tau_hat", num(r.tau_hat)},
                       {"expansion_valid", r.expansion_valid},
                       {"horizon_used", num(r.horizon_used)},
                       {"grid_points", r.grid_points},
                       {"bisection_iterations", r.bisection_iterations},
                       {"certificate", to_string(r.certificate)},
                       {"limit", num(r.limit)}});
    csv << format_number(r.epsilon) << ',' << format_number(r.tau) << ','
        << format_number(r.tau_prime) << ',' << format_number(r.tau_second) << ','
        << format_number(r.tau_hat) << ',' << to_string(r.certificate) << ','
        << (r.expansion_valid ? "true" : "false") << ',' << format_number(r.horizon_used) << ','
        << r.bisection_iterations << ',' << format_number(r.limit) << '\n';
    summary << "epsilon " << format_number(eps) << ": tau " << format_number(r.tau)
            << ", tau_hat " << format_number(r.tau_hat) << " (" << to_string(r.certificate)
            << ")\n";
  }
  out.csv = csv.str();
  out.report = {{"command", "tau"}, {"mode", mode_name(sc.mode)}, {"reports", reports}};
  out.summary = summary.str();
  return out;
}

CommandOutput cmd_optimize_energy(const Scenario& sc, const CommandOptions&) {
  require_mode(sc, Mode::Single, "optimize-energy");
  const OqhoParams<double>& params = *sc.single;
  const Weighting<double>& w = sc.require_weighting();
  const MomentData<double> md = moments_of(sc);
  const M& p = md.p();

  const EnergyOptimum<double> opt =
      optimal_energy_matrix(params.ccr(), w, params.coupling(), p);
  if (opt.ale_fallback) spdlog::warn("optimize-energy: ALE route failed, used least squares");
  if (!opt.consistent) spdlog::warn("optimize-energy: stationarity equation is inconsistent");

  const Realization<double> before = build_realization(params);
  const Realization<double> after = build_realization(params.with_energy(opt.r_star));
  const Mat<double> b = before.b;
  const double zh = zero_hamiltonian_condition(params.ccr(), w, params.coupling(), p);
  const double zh_tol = zero_hamiltonian_tolerance(w, b, p);
  const double dd_before = delta_ddot(before.a, before.b, w.sigma(), p);
  const double dd_after = delta_ddot(after.a, after.b, w.sigma(), p);
  const json th_before = tau_hat_list(before, w, md, sc.epsilons);
  const json th_after = tau_hat_list(after, w, md, sc.epsilons);

  CommandOutput out;
  json per_eps = json::array();
  std::ostringstream csv;
  csv << "epsilon,tau_hat_before,tau_hat_after\n";
  for (std::size_t k = 0; k < sc.epsilons.size(); ++k) {
    per_eps.push_back({{"epsilon", sc.epsilons[k]},
                       {"tau_hat_before", th_before[k]},
                       {"tau_hat_after", th_after[k]}});
    const auto field = [](const json& v) {
      return v.is_number() ? format_number(v.get<double>()) : v.get<std::string>();
    };
    csv << format_number(sc.epsilons[k]) << ',' << field(th_before[k]) << ','
        << field(th_after[k]) << '\n';
  }
  out.csv = csv.str();
  out.report = {{"command", "optimize-energy"},
                {"r_star", matrix_json(opt.r_star)},
                {"k_matrix", matrix_json(opt.k_matrix)},
                {"method", to_string(opt.method)},
                {"ale_fallback", opt.ale_fallback},
                {"stationarity_residual", num(opt.stationarity_residual)},
                {"consistent", opt.consistent},
                {"null_space_dimension", opt.null_space_dimension},
                {"expansion_applicable", opt.expansion_applicable},
                {"zero_hamiltonian_residual", num(zh)},
                {"zero_hamiltonian_tolerance", num(zh_tol)},
                {"zero_hamiltonian_optimal", zh <= zh_tol},
                {"dd_delta_before", num(dd_before)},
                {"dd_delta_after", num(dd_after)},
                {"tau_hat", per_eps}};
  std::ostringstream summary;
  summary << "optimize-energy: ||R*|| " << format_number(opt.r_star.norm())
          << ", stationarity residual " << format_number(opt.stationarity_residual)
          << ", dd_delta " << format_number(dd_before) << " -> " << format_number(dd_after)
          << "\n";
  out.summary = summary.str();
  return out;
}

CommandOutput cmd_optimize_r12(const Scenario& sc, const CommandOptions&) {
  require_mode(sc, Mode::Interconnection, "optimize-r12");
  const Weighting<double>& w = sc.require_weighting();
  const MomentData<double> md = moments_of(sc);
  const M& p = md.p();

  const R12Optimum<double> opt = optimal_r12(*sc.sub1, *sc.sub2, w, p);
  if (opt.sylvester_fallback) {
    spdlog::warn("optimize-r12: Sylvester equation resonant, used least squares");
  }
  if (!opt.consistent) spdlog::warn("optimize-r12: stationarity equation is inconsistent");

  const Realization<double> before = assemble(*sc.sub1, *sc.sub2, sc.r12).closed_realization;
  const Realization<double> after = assemble(*sc.sub1, *sc.sub2, opt.r12).closed_realization;
  const double dd_before = delta_ddot(before.a, before.b, w.sigma(), p);
  const double dd_after = delta_ddot(after.a, after.b, w.sigma(), p);
  const json th_before = tau_hat_list(before, w, md, sc.epsilons);
  const json th_after = tau_hat_list(after, w, md, sc.epsilons);

  CommandOutput out;
  json per_eps = json::array();
  std::ostringstream csv;
  csv << "epsilon,tau_hat_before,tau_hat_after\n";
  for (std::size_t k = 0; k < sc.epsilons.size(); ++k) {
    per_eps.push_back({{"epsilon", sc.epsilons[k]},
                       {"tau_hat_before", th_before[k]},
                       {"tau_hat_after", th_after[k]}});
    const auto field = [](const json& v) {
      return v.is_number() ? format_number(v.get<double>()) : v.get<std::string>();
    };
    csv << format_number(sc.epsilons[k]) << ',' << field(th_before[k]) << ','
        << field(th_after[k]) << '\n';
  }
  out.csv = csv.str();
  out.report = {{"command", "optimize-r12"},
                {"r12_star", matrix_json(opt.r12)},
                {"q_matrix", matrix_json(opt.q)},
                {"method", to_string(opt.method)},
                {"sylvester_fallback", opt.sylvester_fallback},
                {"stationarity_residual", num(opt.residual)},
                {"consistent", opt.consistent},
                {"null_space_dimension", opt.null_space_dimension},
                {"r12_before", matrix_json(sc.r12)},
                {"dd_delta_before", num(dd_before)},
                {"dd_delta_after", num(dd_after)},
                {"tau_hat", per_eps}};
  std::ostringstream summary;
  summary << "optimize-r12: ||R12*|| " << format_number(opt.r12.norm()) << " ("
          << to_string(opt.method) << "), residual " << format_number(opt.residual)
          << ", dd_delta " << format_number(dd_before) << " -> " << format_number(dd_after)
          << "\n";
  out.summary = summary.str();
  return out;
}

CommandOutput cmd_spectrum(const Scenario& sc, const CommandOptions& opts) {
  const Realization<double> sys = system_of(sc);
  const double tol = opts.tolerance.value_or(1e-9);
  const SpectralClass<double> spec = classify_spectrum(sys.a, tol);
  const auto clusters = cluster_eigenvalues(spec.eigenvalues);

  CommandOutput out;
  json cl = json::array();
  for (const auto& c : clusters) {
    cl.push_back({{"center", {c.center.real(), c.center.imag()}},
                  {"multiplicity", c.multiplicity}});
  }
  out.report = {{"command", "spectrum"},
                {"mode", mode_name(sc.mode)},
                {"category", to_string(spec.category)},
                {"max_real_part", spec.max_real_part},
                {"on_bisectors", spec.on_bisectors},
                {"eigenvalues", eigen_json(spec.eigenvalues)},
                {"clusters", cl}};

  if (spec.category == SpectralCategory::Hurwitz && sc.p) {
    const MomentData<double> md = moments_of(sc);
    out.report["hurwitz_limit"] = num(hurwitz_limit(sys.a, sys.b, sc.require_weighting(), md));
  }
  if (spec.category == SpectralCategory::MarginallyStable) {
    try {
      const CMat<double> rate = asymptotic_rate(sys.a, sys.b);
      out.report["asymptotic_rate_real"] = matrix_json(rate.real());
      out.report["asymptotic_delta_slope"] =
          num(frobenius_inner(sc.require_weighting().sigma(), M(rate.real())));
    } catch (const PreconditionError& e) {
      spdlog::info("spectrum: no asymptotic rate ({})", e.what());
    }
  }

  std::ostringstream csv;
  csv << "index,re,im\n";
  for (Index k = 0; k < spec.eigenvalues.size(); ++k) {
    csv << k << ',' << format_number(spec.eigenvalues(k).real()) << ','
        << format_number(spec.eigenvalues(k).imag()) << '\n';
  }
  out.csv = csv.str();
  out.summary = std::string("spectrum: ") + to_string(spec.category) + ", max Re " +
                format_number(spec.max_real_part) + "\n";
  return out;
}

CommandOutput cmd_interconnect(const Scenario& sc, const CommandOptions& opts) {
  require_mode(sc, Mode::Interconnection, "interconnect");
  const Interconnection<double> ic = assemble(*sc.sub1, *sc.sub2, sc.r12);
  const Realization<double>& sys = ic.closed_realization;
  const double tol = opts.tolerance.value_or(1e-12);
  const double pr = check_physical_realizability(
      sys.a, sys.b, ic.closed_ccr, ItoStructure<double>::canonical(sc.sub1->m() + sc.sub2->m()));

  const char* choice = sc.r12_choice == R12Choice::Matrix            ? "matrix"
                       : sc.r12_choice == R12Choice::ZeroHamiltonian ? "zero-hamiltonian"
                                                                     : "zero";
  CommandOutput out;
  out.report = {{"command", "interconnect"},
                {"r12_choice", choice},
                {"r12", matrix_json(ic.r12)},
                {"closed_theta", matrix_json(ic.closed_ccr.theta())},
                {"r0", matrix_json(ic.r0)},
                {"r_tilde", matrix_json(ic.r_tilde)},
                {"closed_r", matrix_json(ic.closed_r)},
                {"closed_n", matrix_json(ic.closed_n)},
                {"a", matrix_json(sys.a)},
                {"b", matrix_json(sys.b)},
                {"c", matrix_json(sys.c)},
                {"d", matrix_json(sys.d)},
                {"consistency_residual", num(ic.consistency_residual)},
                {"physical_realizability", num(pr)},
                {"closed_r_norm", num(ic.closed_r.norm())}};
  bool ok = true;
  if (sc.r12_choice == R12Choice::ZeroHamiltonian) {
    const bool nonzero = zero_hamiltonian_r12(*sc.sub1, *sc.sub2).subsystem_energy_nonzero;
    if (nonzero) spdlog::warn("interconnect: R_1 or R_2 nonzero, closed-loop R is not zero");
    const bool zero = ic.closed_r.norm() <= tol * std::max(1.0, ic.r0.norm());
    out.report["zero_hamiltonian"] = {{"subsystem_energy_nonzero", nonzero},
                                      {"closed_r_zero", zero}};
    ok = zero || nonzero;
  }
  out.ok = ok;

  std::ostringstream csv;
  csv << "quantity,value\n"
      << "consistency_residual," << format_number(ic.consistency_residual) << '\n'
      << "physical_realizability," << format_number(pr) << '\n'
      << "closed_r_norm," << format_number(ic.closed_r.norm()) << '\n';
  out.csv = csv.str();
  out.summary = "interconnect: n = " + std::to_string(ic.n()) + ", ||R|| = " +
                format_number(ic.closed_r.norm()) + ", consistency " +
                format_number(ic.consistency_residual) + "\n";
  return out;
}

CommandOutput dispatch(const std::string& command, const Scenario& sc,
                       const CommandOptions& opts) {
  if (command == "check") return cmd_check(sc, opts);
  if (command == "delta-curve") return cmd_delta_curve(sc, opts);
  if (command == "tau") return cmd_tau(sc, opts);
  if (command == "optimize-energy") return cmd_optimize_energy(sc, opts);
  if (command == "optimize-r12") return cmd_optimize_r12(sc, opts);
  if (command == "spectrum") return cmd_spectrum(sc, opts);
  if (command == "interconnect") return cmd_interconnect(sc, opts);
  throw ParseError("", "unknown command " + command);
}

int run_command(const std::string& command, const CommandOptions& opts, std::ostream& out,
                std::ostream& err) {
  try {
    const Scenario sc = load_scenario(opts.scenario);
    const CommandOutput result = dispatch(command, sc, opts);
    const Format format = opts.format == Format::Auto ? result.default_format : opts.format;
    const std::string text = format == Format::Csv ? result.csv : report_text(result.report);

    std::optional<std::filesystem::path> dest = opts.out;
    if (!dest) dest = result.curve ? sc.outputs.curve : sc.outputs.report;
    if (dest) {
      std::ofstream file(*dest, std::ios::binary);
      if (!file) throw IoError("cannot open output file " + dest->string());
      file << text;
      file.close();
      if (!file) throw IoError("failed writing output file " + dest->string());
      out << result.summary;
    } else {
      out << text;
    }
    if (!result.ok) err << "error: " << command << " failed\n";
    return result.ok ? 0 : 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: internal failure: " << e.what() << '\n';
    return 4;
  }
}

}  // namespace oqho::cli
