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

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli/scenario.hpp"

namespace oqho::cli {

enum class Format { Auto, Csv, Json };

struct CommandOptions {
  std::filesystem::path scenario;
  std::optional<std::filesystem::path> out;
  std::optional<Index> grid_points;
  std::optional<double> horizon;
  std::optional<double> tolerance;
  Format format = Format::Auto;
};

/// Machine-readable result of one command. `csv` holds the table form,
/// `report` the structured form; `summary` is a few lines for humans.
struct CommandOutput {
  nlohmann::json report;
  std::string csv;
  std::string summary;
  bool ok = true;
  Format default_format = Format::Json;
  bool curve = false;  // written to outputs.curve rather than outputs.report
};

const std::vector<std::string>& command_names();

CommandOutput cmd_check(const Scenario& sc, const CommandOptions& opts);
CommandOutput cmd_delta_curve(const Scenario& sc, const CommandOptions& opts);
CommandOutput cmd_tau(const Scenario& sc, const CommandOptions& opts);
CommandOutput cmd_optimize_energy(const Scenario& sc, const CommandOptions& opts);
CommandOutput cmd_optimize_r12(const Scenario& sc, const CommandOptions& opts);
CommandOutput cmd_spectrum(const Scenario& sc, const CommandOptions& opts);
CommandOutput cmd_interconnect(const Scenario& sc, const CommandOptions& opts);

CommandOutput dispatch(const std::string& command, const Scenario& sc,
                       const CommandOptions& opts);

/// Loads the scenario, runs the command and writes its output. Errors are
/// reported on err; the return value is the process exit code.
int run_command(const std::string& command, const CommandOptions& opts, std::ostream& out,
                std::ostream& err);

/// 17 significant digits; "inf", "-inf", "nan" for non-finite values.
std::string format_number(double v);

}  // namespace oqho::cli
