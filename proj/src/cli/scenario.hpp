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
#include <optional>
#include <string>
#include <vector>

#include "oqho/oqho.hpp"

namespace oqho::cli {

class ParseError : public Error {
 public:
  ParseError(const std::string& pointer, const std::string& what)
      : Error(ErrorKind::Parse, (pointer.empty() ? std::string("/") : pointer) + ": " + what),
        pointer_(pointer) {}
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

/// 0 success, 1 validation, 2 parse, 3 I/O, 4 numerical.
int exit_code(ErrorKind kind);

enum class Mode { Single, Interconnection };

enum class Spacing { Log, Linear };

struct GridSpec {
  Index points = 400;
  Spacing spacing = Spacing::Log;
  std::optional<double> t_max;
  std::optional<std::vector<double>> times;
};

enum class R12Choice { Zero, Matrix, ZeroHamiltonian };

struct Outputs {
  std::optional<std::filesystem::path> curve;
  std::optional<std::filesystem::path> report;
};

struct Scenario {
  int schema_version = 1;
  Mode mode = Mode::Single;

  std::optional<OqhoParams<double>> single;
  std::optional<SubsystemParams<double>> sub1;
  std::optional<SubsystemParams<double>> sub2;
  R12Choice r12_choice = R12Choice::Zero;
  Mat<double> r12;  // filled for every choice once loaded

  std::optional<Weighting<double>> weighting;
  std::optional<Mat<double>> p;

  std::vector<double> epsilons{1e-2};
  std::optional<double> horizon;
  GridSpec grid;
  Outputs outputs;

  /// CCR matrix of the system the commands act on (closed loop for networks).
  CcrMatrix<double> system_ccr() const;
  Index dim() const;
  const Weighting<double>& require_weighting() const;
  const Mat<double>& require_p() const;
};

/// Parses and validates a scenario document. Relative output paths are
/// resolved against base_dir.
Scenario parse_scenario(const std::string& text,
                        const std::filesystem::path& base_dir = {});

Scenario load_scenario(const std::filesystem::path& path);

}  // namespace oqho::cli
