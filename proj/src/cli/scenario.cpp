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

#include "cli/scenario.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

namespace oqho::cli {

using json = nlohmann::json;
using M = Mat<double>;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension:
    case ErrorKind::Validation:
    case ErrorKind::Precondition:
      return 1;
    case ErrorKind::Parse:
      return 2;
    case ErrorKind::Io:
      return 3;
    case ErrorKind::SingularEquation:
    case ErrorKind::Numerical:
    case ErrorKind::Consistency:
      return 4;
  }
  return 4;
}

namespace {

std::string join(const std::string& pointer, const std::string& key) {
  return pointer + "/" + key;
}

std::string join(const std::string& pointer, std::size_t index) {
  return pointer + "/" + std::to_string(index);
}

// Runs fn and prefixes domain errors with the location they came from.
template <class F>
auto located(const std::string& pointer, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw Error(e.kind(), pointer + ": " + e.what());
  }
}

double parse_number(const json& node, const std::string& pointer) {
  if (!node.is_number()) throw ParseError(pointer, "expected a number");
  const double v = node.get<double>();
  if (!std::isfinite(v)) throw ParseError(pointer, "number is not finite");
  return v;
}

double parse_positive(const json& node, const std::string& pointer) {
  const double v = parse_number(node, pointer);
  if (!(v > 0.0)) throw ParseError(pointer, "expected a positive number");
  return v;
}

M parse_matrix(const json& node, const std::string& pointer) {
  if (!node.is_array() || node.empty()) {
    throw ParseError(pointer, "expected a non-empty array of rows");
  }
  const std::size_t rows = node.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    const json& row = node[i];
    if (!row.is_array()) throw ParseError(join(pointer, i), "expected an array of numbers");
    if (i == 0) {
      cols = row.size();
      if (cols == 0) throw ParseError(join(pointer, i), "empty row");
    } else if (row.size() != cols) {
      throw ParseError(join(pointer, i), "row has " + std::to_string(row.size()) +
                                             " entries, expected " + std::to_string(cols));
    }
  }
  M m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      m(Index(i), Index(j)) = parse_number(node[i][j], join(join(pointer, i), j));
    }
  }
  return m;
}

void check_keys(const json& node, const std::string& pointer,
                const std::set<std::string>& allowed) {
  if (!node.is_object()) throw ParseError(pointer, "expected an object");
  for (auto it = node.begin(); it != node.end(); ++it) {
    if (!allowed.count(it.key())) throw ParseError(join(pointer, it.key()), "unknown key");
  }
}

const json& require(const json& node, const std::string& pointer, const std::string& key) {
  if (!node.contains(key)) throw ParseError(join(pointer, key), "missing required key");
  return node.at(key);
}

CcrMatrix<double> parse_theta(const json& obj, const std::string& pointer, Index n) {
  if (!obj.contains("theta") ||
      (obj.at("theta").is_string() && obj.at("theta").get<std::string>() == "canonical")) {
    return located(join(pointer, "theta"), [&] { return CcrMatrix<double>::canonical(n); });
  }
  const json& node = obj.at("theta");
  if (node.is_string()) throw ParseError(join(pointer, "theta"), "expected a matrix or \"canonical\"");
  const M theta = parse_matrix(node, join(pointer, "theta"));
  return located(join(pointer, "theta"), [&] { return CcrMatrix<double>(theta); });
}

std::optional<M> parse_optional_matrix(const json& obj, const std::string& pointer,
                                       const std::string& key) {
  if (!obj.contains(key)) return std::nullopt;
  return parse_matrix(obj.at(key), join(pointer, key));
}

OqhoParams<double> parse_single(const json& root) {
  const M r = parse_matrix(require(root, "", "R"), "/R");
  const M n = parse_matrix(require(root, "", "N"), "/N");
  const CcrMatrix<double> ccr = parse_theta(root, "", r.rows());
  const std::optional<M> d = parse_optional_matrix(root, "", "D");
  // Field-level locations for the checks OqhoParams performs.
  located("/R", [&] {
    detail::validated_symmetric<double>(r, ccr.dim(), "energy matrix R", "energy matrix");
    return 0;
  });
  if (d) {
    located("/D", [&] {
      detail::validate_selector<double>(*d, n.rows(), "selector D");
      return 0;
    });
  }
  return located("/N", [&] { return OqhoParams<double>(ccr, r, n, d); });
}

SubsystemParams<double> parse_subsystem(const json& node, const std::string& pointer) {
  check_keys(node, pointer, {"theta", "R", "N", "L", "D"});
  const M r = parse_matrix(require(node, pointer, "R"), join(pointer, "R"));
  const M n = parse_matrix(require(node, pointer, "N"), join(pointer, "N"));
  const M l = parse_matrix(require(node, pointer, "L"), join(pointer, "L"));
  const CcrMatrix<double> ccr = parse_theta(node, pointer, r.rows());
  const std::optional<M> d = parse_optional_matrix(node, pointer, "D");
  located(join(pointer, "R"), [&] {
    detail::validated_symmetric<double>(r, ccr.dim(), "energy matrix R_k", "energy matrix");
    return 0;
  });
  if (d) {
    located(join(pointer, "D"), [&] {
      detail::validate_selector<double>(*d, n.rows(), "selector D_k");
      return 0;
    });
  }
  return located(pointer, [&] { return SubsystemParams<double>(ccr, r, n, l, d); });
}

GridSpec parse_grid(const json& node) {
  const std::string pointer = "/grid";
  check_keys(node, pointer, {"points", "spacing", "t_max", "times"});
  GridSpec grid;
  if (node.contains("points")) {
    const json& p = node.at("points");
    if (!p.is_number_integer() || p.get<long long>() < 2) {
      throw ParseError(join(pointer, "points"), "expected an integer >= 2");
    }
    grid.points = Index(p.get<long long>());
  }
  if (node.contains("spacing")) {
    const json& s = node.at("spacing");
    const std::string value = s.is_string() ? s.get<std::string>() : "";
    if (value == "log") {
      grid.spacing = Spacing::Log;
    } else if (value == "linear") {
      grid.spacing = Spacing::Linear;
    } else {
      throw ParseError(join(pointer, "spacing"), "expected \"log\" or \"linear\"");
    }
  }
  if (node.contains("t_max")) grid.t_max = parse_positive(node.at("t_max"), join(pointer, "t_max"));
  if (node.contains("times")) {
    const json& t = node.at("times");
    const std::string tp = join(pointer, "times");
    if (!t.is_array() || t.empty()) throw ParseError(tp, "expected a non-empty array of times");
    std::vector<double> times;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double v = parse_number(t[i], join(tp, i));
      if (v < 0.0 || (!times.empty() && !(v > times.back()))) {
        throw ParseError(join(tp, i), "times must be nonnegative and strictly increasing");
      }
      times.push_back(v);
    }
    grid.times = std::move(times);
  }
  return grid;
}

std::vector<double> parse_epsilons(const json& node) {
  std::vector<double> out;
  if (node.is_array()) {
    if (node.empty()) throw ParseError("/epsilon", "expected at least one value");
    for (std::size_t i = 0; i < node.size(); ++i) {
      out.push_back(parse_positive(node[i], join("/epsilon", i)));
    }
  } else {
    out.push_back(parse_positive(node, "/epsilon"));
  }
  return out;
}

Outputs parse_outputs(const json& node, const std::filesystem::path& base_dir) {
  check_keys(node, "/outputs", {"curve", "report"});
  Outputs out;
  auto path_of = [&](const std::string& key) -> std::optional<std::filesystem::path> {
    if (!node.contains(key)) return std::nullopt;
    const json& v = node.at(key);
    if (!v.is_string() || v.get<std::string>().empty()) {
      throw ParseError(join("/outputs", key), "expected a non-empty path string");
    }
    std::filesystem::path p(v.get<std::string>());
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return p;
  };
  out.curve = path_of("curve");
  out.report = path_of("report");
  return out;
}

}  // namespace

CcrMatrix<double> Scenario::system_ccr() const {
  if (mode == Mode::Single) return single->ccr();
  return CcrMatrix<double>(detail::block_diag(sub1->ccr().theta(), sub2->ccr().theta()));
}

Index Scenario::dim() const {
  return mode == Mode::Single ? single->n() : sub1->n() + sub2->n();
}

const Weighting<double>& Scenario::require_weighting() const {
  if (!weighting) throw ParseError("/F", "missing weighting");
  return *weighting;
}

const Mat<double>& Scenario::require_p() const {
  if (!p) throw ParseError("/P", "missing required key");
  return *p;
}

Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", "invalid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  check_keys(root, "", {"schema_version", "mode", "theta", "R", "N", "D", "subsystems", "R12",
                        "F", "Sigma", "P", "epsilon", "horizon", "grid", "outputs", "name",
                        "description"});

  Scenario sc;
  const json& version = require(root, "", "schema_version");
  if (!version.is_number_integer()) throw ParseError("/schema_version", "expected an integer");
  sc.schema_version = version.get<int>();
  if (sc.schema_version != 1) {
    throw ParseError("/schema_version",
                     "unsupported version " + std::to_string(sc.schema_version));
  }

  if (root.contains("mode")) {
    const json& m = root.at("mode");
    const std::string value = m.is_string() ? m.get<std::string>() : "";
    if (value == "single") {
      sc.mode = Mode::Single;
    } else if (value == "interconnection") {
      sc.mode = Mode::Interconnection;
    } else {
      throw ParseError("/mode", "expected \"single\" or \"interconnection\"");
    }
  }

  if (sc.mode == Mode::Single) {
    for (const char* key : {"subsystems", "R12"}) {
      if (root.contains(key)) {
        throw ParseError(std::string("/") + key, "only valid in interconnection mode");
      }
    }
    sc.single = parse_single(root);
  } else {
    for (const char* key : {"theta", "R", "N", "D"}) {
      if (root.contains(key)) {
        throw ParseError(std::string("/") + key,
                         "interconnection mode takes these per subsystem");
      }
    }
    const json& subs = require(root, "", "subsystems");
    if (!subs.is_array() || subs.size() != 2) {
      throw ParseError("/subsystems", "expected an array of exactly two subsystems");
    }
    sc.sub1 = parse_subsystem(subs[0], "/subsystems/0");
    sc.sub2 = parse_subsystem(subs[1], "/subsystems/1");
    located("/subsystems", [&] {
      detail::require_interconnect_shapes(*sc.sub1, *sc.sub2);
      return 0;
    });
    sc.r12 = M::Zero(sc.sub1->n(), sc.sub2->n());
    if (root.contains("R12")) {
      const json& node = root.at("R12");
      if (node.is_string()) {
        const std::string value = node.get<std::string>();
        if (value == "zero-hamiltonian") {
          sc.r12_choice = R12Choice::ZeroHamiltonian;
          sc.r12 = zero_hamiltonian_r12(*sc.sub1, *sc.sub2).r12;
        } else if (value != "zero") {
          throw ParseError("/R12", "expected a matrix, \"zero\" or \"zero-hamiltonian\"");
        }
      } else {
        sc.r12_choice = R12Choice::Matrix;
        sc.r12 = parse_matrix(node, "/R12");
      }
    }
    located("/R12", [&] { return assemble(*sc.sub1, *sc.sub2, sc.r12).consistency_residual; });
  }

  const Index n = sc.dim();
  if (root.contains("F") && root.contains("Sigma")) {
    throw ParseError("/Sigma", "give either F or Sigma, not both");
  }
  if (root.contains("F")) {
    const M f = parse_matrix(root.at("F"), "/F");
    if (f.cols() != n) {
      throw Error(ErrorKind::Dimension, "/F: weighting factor F is " + detail::shape(f) +
                                            ", expected r x " + std::to_string(n));
    }
    sc.weighting = located("/F", [&] { return Weighting<double>(f); });
  } else if (root.contains("Sigma")) {
    const M sigma = parse_matrix(root.at("Sigma"), "/Sigma");
    if (sigma.rows() != n || sigma.cols() != n) {
      throw Error(ErrorKind::Dimension, "/Sigma: weighting matrix Sigma is " +
                                            detail::shape(sigma) + ", expected " +
                                            detail::shape(n, n));
    }
    sc.weighting = located("/Sigma", [&] { return Weighting<double>::from_sigma(sigma); });
  } else {
    sc.weighting = Weighting<double>::identity(n);
  }

  if (root.contains("P")) {
    const M p = parse_matrix(root.at("P"), "/P");
    located("/P", [&] {
      if (p.rows() != n || p.cols() != n) {
        throw DimensionError("second-moment matrix P is " + detail::shape(p) + ", expected " +
                             detail::shape(n, n));
      }
      if ((p - p.transpose()).norm() > 1e-12 * std::max(1.0, p.norm())) {
        throw ValidationError("second-moment matrix P not symmetric");
      }
      return 0;
    });
    sc.p = symmetrize(p);
  }

  if (root.contains("epsilon")) sc.epsilons = parse_epsilons(root.at("epsilon"));
  if (root.contains("horizon")) sc.horizon = parse_positive(root.at("horizon"), "/horizon");
  if (root.contains("grid")) sc.grid = parse_grid(root.at("grid"));
  if (root.contains("outputs")) sc.outputs = parse_outputs(root.at("outputs"), base_dir);
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.parent_path());
}

}  // namespace oqho::cli
