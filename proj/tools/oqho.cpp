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

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cli/commands.hpp"

namespace {

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("oqho");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("OQHO_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept "off" when asked for.
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  using oqho::cli::Format;

  CLI::App app{"Deviation and decoherence analysis of open quantum harmonic oscillators"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "oqho 1.0.0");

  oqho::cli::CommandOptions opts;
  std::string out_path;
  long long grid_points = 0;
  double horizon = 0.0;
  double tolerance = 0.0;
  std::string format = "auto";

  const std::vector<std::pair<std::string, std::string>> commands{
      {"check", "validate a scenario: realizability, spectrum, uncertainty relation"},
      {"delta-curve", "tabulate Delta(t) with its signal and noise terms"},
      {"tau", "decoherence time and its small-epsilon expansion"},
      {"optimize-energy", "energy matrix maximizing the decoherence time"},
      {"optimize-r12", "direct coupling between two subsystems maximizing it"},
      {"spectrum", "eigenvalues and stability class of the dynamics matrix"},
      {"interconnect", "closed-loop matrices of a two-oscillator network"}};

  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--scenario", opts.scenario, "scenario file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_path, "output file instead of stdout");
    sub->add_option("--grid-points", grid_points, "number of grid points")
        ->check(CLI::Range(2LL, 100000000LL));
    sub->add_option("--horizon", horizon, "time horizon")->check(CLI::PositiveNumber);
    sub->add_option("--tolerance", tolerance, "check or root tolerance")
        ->check(CLI::PositiveNumber);
    sub->add_option("--format", format, "output format")
        ->check(CLI::IsMember({"auto", "csv", "json"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--out")) opts.out = out_path;
  if (chosen->count("--grid-points")) opts.grid_points = grid_points;
  if (chosen->count("--horizon")) opts.horizon = horizon;
  if (chosen->count("--tolerance")) opts.tolerance = tolerance;
  opts.format = format == "csv" ? Format::Csv : format == "json" ? Format::Json : Format::Auto;

  return oqho::cli::run_command(chosen->get_name(), opts, std::cout, std::cerr);
}
