// Copyright 2026 The Neptune Select Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Subcommands of neptune-select. Each run loads every input before writing
// anything, writes its outputs atomically and always leaves a report.json
// (with an error section on failure) in the output directory.

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "neptune/config.hpp"

namespace neptune::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kInvariant = 2, kIo = 3 };

struct RunError {
  int exit_code = kOk;
  std::string kind;
  std::string message;
};

struct RunReport {
  std::string command;
  nlohmann::ordered_json config;
  nlohmann::ordered_json results = nlohmann::ordered_json::object();
  std::optional<RunError> error;
  std::vector<std::pair<std::string, double>> timings;  ///< seconds, written to timings.json
  std::vector<std::string> outputs;                     ///< files written, in order
};

const std::vector<std::string>& command_names();

/// Runs one subcommand and writes report.json and timings.json into
/// output_dir. A short summary goes to `out`, errors to `err`.
/// Returns the exit status.
int execute(const std::string& command, const RunConfig& config, std::ostream& out,
            std::ostream& err, RunReport* report = nullptr);

}  // namespace neptune::cli
