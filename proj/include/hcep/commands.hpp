// Copyright 2026 The HCEP Authors.
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

#ifndef HCEP_COMMANDS_HPP_
#define HCEP_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "hcep/run_config.hpp"

namespace hcep {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitIo = 3, kExitMissingInput = 4 };

/// Command-line overrides; each one beats the config file.
struct CommandOptions {
  std::filesystem::path config;       // empty: built-in defaults
  std::optional<std::uint64_t> seed;
  std::filesystem::path out;          // dataset root for gen-data, run dir otherwise
  std::filesystem::path checkpoint;   // input checkpoint (train: warm start)
};

/// Effective configuration after applying the overrides.
RunConfig resolve_config(const std::string& command, const CommandOptions& opts);

// Each command writes the effective config as config.json into its output
// directory and holds <dir>/.hcep.lock while running.
void cmd_gen_data(const CommandOptions& opts, std::ostream& log);
void cmd_train(const CommandOptions& opts, std::ostream& log);
void cmd_evolve(const CommandOptions& opts, std::ostream& log);
void cmd_eval(const CommandOptions& opts, std::ostream& log);
void cmd_plot(const CommandOptions& opts, std::ostream& log);

/// Dispatches `command` and maps exceptions to exit codes (2 config,
/// 3 I/O, 4 missing input), printing diagnostics to `err`.
int run_command(const std::string& command, const CommandOptions& opts, std::ostream& log, std::ostream& err);

}  // namespace hcep

#endif  // HCEP_COMMANDS_HPP_
