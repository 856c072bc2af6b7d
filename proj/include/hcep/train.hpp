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

#ifndef HCEP_TRAIN_HPP_
#define HCEP_TRAIN_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hcep/losses.hpp"
#include "hcep/manifest.hpp"
#include "hcep/model.hpp"
#include "hcep/parallel.hpp"
#include "hcep/scene.hpp"
#include "json.hpp"

namespace hcep {

struct TrainConfig {
  double learning_rate = 1e-4;
  /// Per-epoch multiplicative decay.
  double decay_factor = 0.98;
  int batch_size = 8;
  int epochs = 60;
  std::uint64_t seed = 0;
  /// Train only adapters and decoder.
  bool freeze_encoder_base = false;

  /// Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// lr0 * decay^epoch.
double learning_rate_at(const TrainConfig& cfg, int epoch);

struct TrainLogRow {
  int step = 0;
  int epoch = 0;
  LossReport loss;  // batch mean before the update
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  /// Columns step,dice,bce,mse,hc,total.
  std::string to_csv() const;
};

struct FitOptions {
  ExecPolicy policy = ExecPolicy::parallel;
  /// Written after every epoch when non-empty.
  std::filesystem::path checkpoint_path;
  /// Added to the logged step numbers.
  int step_offset = 0;
  std::function<void(int epoch, const LossReport& mean)> on_epoch;
};

/// Adam (0.9, 0.999, 1e-8) over shuffled minibatches of `pool`.
/// Throws EmptyPoolError, DivergenceError (non-finite total loss).
TrainLog fit(Model& model, std::span<const Sample> pool, const TrainConfig& cfg,
             const LossConfig& loss_cfg, const FitOptions& options = {});

/// Reads `ids` from their label roots. Throws IoError / CorruptSampleError.
std::vector<Sample> load_pool(const DatasetManifest& m, const std::vector<std::string>& ids);

}  // namespace hcep

#endif  // HCEP_TRAIN_HPP_
