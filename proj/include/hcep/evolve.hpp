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

#ifndef HCEP_EVOLVE_HPP_
#define HCEP_EVOLVE_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hcep/hierarchy.hpp"
#include "hcep/losses.hpp"
#include "hcep/manifest.hpp"
#include "hcep/model.hpp"
#include "hcep/parallel.hpp"
#include "hcep/prediction.hpp"
#include "hcep/scene.hpp"
#include "hcep/train.hpp"
#include "json.hpp"

namespace hcep {

struct EvolveConfig {
  int iterations = 3;
  /// Fraction t of the ranked records promoted each round.
  double select_ratio = 0.7;
  /// Skip unlabeled samples whose image duplicates an earlier sample.
  bool dedup_enabled = true;
  int epochs_per_iteration = 10;
  /// Records at or above this confidence count as high-confidence.
  double high_conf_threshold = 0.8;

  /// Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
  static EvolveConfig from_json(const nlohmann::json& j);
};

/// One record per sample, masks thresholded at 0.5.
std::vector<PseudoLabelRecord> generate_pseudo_labels(const Model& model, std::span<const Sample> samples,
                                                      int iteration, ExecPolicy policy = ExecPolicy::parallel);

struct Selection {
  std::vector<PseudoLabelRecord> selected;  // best first
  std::vector<PseudoLabelRecord> rejected;  // best first
};

/// Ranks by record confidence (descending, ties by ascending sample_id) and
/// selects the first ceil(t * n). Throws ConfigError unless 0 < t <= 1.
Selection select_top_confidence(std::vector<PseudoLabelRecord> records, double t);

/// Every pixel claimed by several masks of one level keeps only the mask
/// with the highest confidence (ties: lower node id, i.e. lower slot).
PseudoLabelRecord resolve_overlaps(PseudoLabelRecord r);

/// Moves the selected ids from unlabeled to labeled, tags them with
/// `iteration` and bumps the version. Throws PoolConsistencyError.
DatasetManifest integrate(const DatasetManifest& m, std::span<const PseudoLabelRecord> selected,
                          int iteration);

/// `source` image with the record's label maps as pseudo ground truth.
Sample pseudo_sample(const Sample& source, const PseudoLabelRecord& r, const ConceptHierarchy& h);

/// Ids of samples whose image hash already appeared earlier in `samples`.
std::vector<std::string> duplicate_ids(std::span<const Sample> samples);

/// Mean over every (record, level, concept) of Dice(mask, ground truth).
double pseudo_label_dice(std::span<const PseudoLabelRecord> records, std::span<const Sample> ground_truth,
                         const ConceptHierarchy& h);

struct IterationReport {
  int iteration = 0;
  std::size_t selected_count = 0;
  std::size_t rejected_count = 0;
  double mean_conf_selected = 0.0;
  double mean_conf_rejected = 0.0;
  /// Share of the monitoring set (the initial unlabeled pool) at or above
  /// the high-confidence threshold, predicted by the model of this round.
  double high_conf_fraction = 0.0;
  std::vector<double> confidence_histogram;  // 10 bins over [0, 1], monitoring set
  std::size_t labeled_size = 0;
  std::size_t unlabeled_size = 0;
  std::size_t test_size = 0;
  bool pools_conserved = true;
  double heldout_parent_dice = 0.0;
  double heldout_child_dice = 0.0;
  /// True Dice of this round's pseudo-labels (selected records).
  double pseudo_label_dice = 0.0;
  int manifest_version = 0;

  nlohmann::json to_json() const;
};

struct EvolutionReport {
  IterationReport baseline;  // held-out scores before any round
  std::vector<IterationReport> iterations;
  nlohmann::json to_json() const;
  /// One row per iteration.
  std::string to_csv() const;
};

struct EvolveOptions {
  ExecPolicy policy = ExecPolicy::parallel;
  /// Pseudo-label roots and versioned manifests go here; root_path when empty.
  std::filesystem::path work_dir;
  /// Checkpoint written after each round when non-empty.
  std::filesystem::path checkpoint_path;
};

struct EvolutionResult {
  DatasetManifest manifest;
  EvolutionReport report;
  TrainLog log;
};

/// Rounds k = 1..iterations of generate -> resolve -> select -> integrate -> fit.
EvolutionResult run_evolution(Model& model, const DatasetManifest& manifest, const EvolveConfig& ecfg,
                              const TrainConfig& tcfg, const LossConfig& lcfg,
                              const EvolveOptions& options = {});

}  // namespace hcep

#endif  // HCEP_EVOLVE_HPP_
