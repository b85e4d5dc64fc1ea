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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli/commands.hpp"
#include "cli/scenario.hpp"

using namespace oqho;
using namespace oqho::cli;

namespace {

const std::filesystem::path kData = OQHO_TEST_DATA;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::string& command, const std::string& fixture, CommandOptions opts = {}) {
  opts.scenario = kData / fixture;
  std::ostringstream out, err;
  const int code = run_command(command, opts, out, err);
  return {code, out.str(), err.str()};
}

const char* kSingle = R"({"schema_version": 1, "R": [[0, 0], [0, 0]], "N": [[1, 0], [0, 1]],
                          "P": [[1, 0], [0, 1]]})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("scenario defaults") {
  const Scenario sc = parse_scenario(kSingle);
  CHECK(sc.mode == Mode::Single);
  CHECK(sc.dim() == 2);
  CHECK((sc.system_ccr().theta() - 0.5 * symplectic_unit<double>(2)).norm() == 0.0);
  CHECK((sc.require_weighting().sigma() - Mat<double>::Identity(2, 2)).norm() == 0.0);
  REQUIRE(sc.epsilons.size() == 1);
  CHECK(sc.epsilons[0] == 0.01);
  CHECK(sc.grid.points == 400);
}

TEST_CASE("scenario parse errors carry the JSON pointer") {
  auto expect = [](const std::string& text, const std::string& fragment) {
    try {
      parse_scenario(text);
      FAIL("expected a parse failure for " << text);
    } catch (const Error& e) {
      CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
    }
  };
  expect(R"({"schema_version": 2})", "/schema_version");
  expect(R"({"schema_version": 1, "R": [[0]], "N": [[1, 0], [0, 1]], "bogus": 1})", "/bogus");
  expect(R"({"schema_version": 1, "R": [[0, 0], [0]], "N": [[1, 0], [0, 1]]})", "/R");
  expect(R"({"schema_version": 1, "R": [[0, 1], [0, 0]], "N": [[1, 0], [0, 1]]})",
         "energy matrix not symmetric");
  expect(R"({"schema_version": 1, "theta": [[0, 0], [0, 0]], "R": [[0, 0], [0, 0]],
             "N": [[1, 0], [0, 1]]})",
         "CCR matrix singular");
  expect(R"({"schema_version": 1, "R": [[0, 0], [0, 0]], "N": [[1, 0], [0, 1]],
             "F": [[1, 0], [0, 1]], "Sigma": [[1, 0], [0, 1]]})",
         "F");
  expect("{", "");
}

TEST_CASE("missing moments are reported when needed") {
  const Scenario sc = parse_scenario(
      R"({"schema_version": 1, "R": [[0, 0], [0, 0]], "N": [[1, 0], [0, 1]]})");
  CHECK_THROWS_WITH_AS(sc.require_p(), doctest::Contains("/P"), ParseError);
}

TEST_CASE("exit codes by error kind") {
  CHECK(exit_code(ErrorKind::Validation) == 1);
  CHECK(exit_code(ErrorKind::Dimension) == 1);
  CHECK(exit_code(ErrorKind::Parse) == 2);
  CHECK(exit_code(ErrorKind::Io) == 3);
  CHECK(exit_code(ErrorKind::Numerical) == 4);
  CHECK(exit_code(ErrorKind::Consistency) == 4);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(std::stod(format_number(0.1)) == 0.1);
}

TEST_CASE("check passes on the single-mode scenario") {
  const Run r = run("check", "single_mode.json");
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["pass"] == true);
  CHECK(j["spectrum"]["category"] == "hurwitz");
}

TEST_CASE("delta-curve writes the closed form as CSV") {
  const Run r = run("delta-curve", "single_mode.json");
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,delta,signal_term,noise_term");
  int rows = 0;
  while (std::getline(in, line)) {
    double t, d;
    char comma;
    std::istringstream row(line);
    row >> t >> comma >> d;
    const double e = std::exp(-t);
    CHECK(std::abs(d - (2 * (1 - e) * (1 - e) + 1 - std::exp(-2 * t))) <= 1e-12);
    ++rows;
  }
  CHECK(rows >= 101);
}

TEST_CASE("tau reports both tolerances as JSON") {
  CommandOptions opts;
  opts.format = Format::Json;
  const Run r = run("tau", "single_mode.json", opts);
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  REQUIRE(j["reports"].size() == 2);
  CHECK(j["reports"][0]["tau"].get<double>() ==
        doctest::Approx(0.010000330877718350548).epsilon(1e-12));
  CHECK(j["reports"][1]["certificate"] == "crossing");
}

TEST_CASE("zero coupling gives an infinite decoherence time") {
  CommandOptions opts;
  opts.format = Format::Json;
  const Run r = run("tau", "zero_coupling.json", opts);
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["reports"][0]["tau"] == "inf");
  CHECK(j["reports"][0]["certificate"] == "identically-zero");
}

TEST_CASE("optimize-energy and optimize-r12") {
  const Run e = run("optimize-energy", "perturbed_mode.json");
  REQUIRE(e.code == 0);
  const auto je = nlohmann::json::parse(e.out);
  CHECK(je["consistent"] == true);
  CHECK(je["dd_delta_after"].get<double>() <= je["dd_delta_before"].get<double>() + 1e-12);

  const Run n = run("optimize-r12", "network_general.json");
  REQUIRE(n.code == 0);
  const auto jn = nlohmann::json::parse(n.out);
  CHECK(jn["method"] == "vectorized");
  CHECK(jn["stationarity_residual"].get<double>() <= 1e-9);
  CHECK(jn["dd_delta_after"].get<double>() <= jn["dd_delta_before"].get<double>() + 1e-12);
}

TEST_CASE("interconnect with the zero-Hamiltonian coupling") {
  const Run r = run("interconnect", "network_zero_hamiltonian.json");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  double norm = 0;
  for (const auto& row : j["closed_r"])
    for (const auto& v : row) norm += v.get<double>() * v.get<double>();
  CHECK(norm <= 1e-24);
}

TEST_CASE("spectrum command") {
  const Run r = run("spectrum", "single_mode.json");
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["category"] == "hurwitz");
}

TEST_CASE("error exit codes") {
  CHECK(run("check", "asymmetric_energy.json").code == 1);
  CHECK(run("check", "singular_theta.json").code == 1);
  CHECK(run("check", "non_admissible_moments.json").code == 1);
  const Run bad = run("check", "malformed.json");
  CHECK(bad.code == 2);
  CHECK(bad.err.rfind("error:", 0) == 0);
  CHECK(run("check", "ragged_matrix.json").code == 2);
  CHECK(run("check", "does_not_exist.json").code == 3);
  CHECK(run("optimize-r12", "single_mode.json").code != 0);
}

TEST_CASE("writing to a file prints a summary") {
  const auto path = std::filesystem::temp_directory_path() / "oqho_cli_test_curve.csv";
  CommandOptions opts;
  opts.out = path;
  const Run r = run("delta-curve", "single_mode.json", opts);
  REQUIRE(r.code == 0);
  CHECK_FALSE(r.out.empty());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,delta,signal_term,noise_term");
  std::filesystem::remove(path);
}

}  // TEST_SUITE
