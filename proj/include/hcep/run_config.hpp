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

#ifndef HCEP_RUN_CONFIG_HPP_
#define HCEP_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "hcep/evolve.hpp"
#include "hcep/hierarchy.hpp"
#include "hcep/losses.hpp"
#include "hcep/manifest.hpp"
#include "hcep/net.hpp"
#include "hcep/scene.hpp"
#include "hcep/train.hpp"
#include "json.hpp"

namespace hcep {

/// Everything one command needs. Relative paths resolve against the
/// directory of the config file.
struct RunConfig {
  std::string dataset_root = "data";
  std::string output_dir = "runs/default";
  /// Empty selects the built-in reference taxonomy.
  std::string hierarchy_path;
  std::size_t num_samples = 200;
  PoolFractions fractions;
  SceneConfig scene;
  NetConfig net;
  TrainConfig train;
  EvolveConfig evolve;
  LossConfig loss;
  /// When set, overrides scene.seed, net.init_seed and train.seed.
  std::optional<std::uint64_t> seed;

  /// Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  /// Throws MissingInputError, ConfigError.
  static RunConfig load(const std::filesystem::path& path);

  void set_seed(std::uint64_t s);
  ConceptHierarchy hierarchy() const;
  std::uint64_t split_seed() const { return scene.seed ^ 0x5EEDF00DULL; }
};

}  // namespace hcep

#endif  // HCEP_RUN_CONFIG_HPP_
