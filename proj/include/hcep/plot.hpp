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

#ifndef HCEP_PLOT_HPP_
#define HCEP_PLOT_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace hcep {

struct Figure {
  std::string name;  // file stem
  std::string csv;
  std::string svg;
};

/// Per-iteration share of high-confidence records plus the confidence
/// histogram, from an evolution report.
Figure confidence_figure(const nlohmann::json& evolve_report);

/// Per-concept Dice bars from an evaluation report.
Figure category_dice_figure(const nlohmann::json& eval_report);

/// Per-concept Hausdorff distance bars from an evaluation report.
Figure hausdorff_figure(const nlohmann::json& eval_report);

/// Reads <run_dir>/evolve_report.json (required) and eval_report.json
/// (optional) and writes the figures to <run_dir>/figures. Returns the
/// written paths. Throws MissingInputError.
std::vector<std::filesystem::path> write_figures(const std::filesystem::path& run_dir);

}  // namespace hcep

#endif  // HCEP_PLOT_HPP_
