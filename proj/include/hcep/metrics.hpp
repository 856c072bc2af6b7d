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

#ifndef HCEP_METRICS_HPP_
#define HCEP_METRICS_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hcep/hierarchy.hpp"
#include "hcep/parallel.hpp"
#include "hcep/prediction.hpp"
#include "hcep/scene.hpp"
#include "json.hpp"

namespace hcep {

/// 2|A n B| / (|A| + |B|); 1.0 when both masks are empty.
/// Throws ShapeMismatchError.
double dice_score(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt);

/// Mask pixels with at least one 8-neighbour outside the mask (or outside the image).
Mask boundary_pixels(std::span<const std::uint8_t> mask, int height, int width);

/// Exact squared Euclidean distance from each pixel to the nearest site
/// (separable lower-envelope transform). +inf everywhere without sites.
std::vector<double> squared_distance_transform(std::span<const std::uint8_t> sites, int height,
                                               int width);

/// Symmetric Hausdorff distance between the boundary sets of two masks, in
/// pixels times `spacing`. Both empty: 0. Exactly one empty: the image diagonal.
double hausdorff_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                          int height, int width, double spacing = 1.0);

/// Spearman rank correlation with average ranks for ties; 0 when either
/// side is constant. Throws ShapeMismatchError.
double spearman(std::span<const double> x, std::span<const double> y);

/// Sum over parents and pixels of max(0, p_parent - max_child p_child).
double parent_violation_mass(const Prediction& p, const ConceptHierarchy& h);

struct EvalReport {
  std::map<int, double> dice;        // node id -> mean over samples containing it
  std::map<int, double> hd;          // node id -> mean HD in pixels
  std::map<int, int> count;          // node id -> samples containing it
  std::vector<double> level_dice;    // mean over present nodes of each level
  std::vector<double> level_hd;
  double confidence_spearman = 0.0;  // t vs true Dice over every predicted mask
  double mean_confidence = 0.0;
  double parent_violation_mass = 0.0;  // mean per sample
  std::size_t samples = 0;

  nlohmann::json to_json(const ConceptHierarchy& h) const;
  /// Rows "dice" and "hd"; columns P1.. for level 0, C1.. for level 1, L<l>_<k> deeper.
  std::string to_csv(const ConceptHierarchy& h) const;
};

/// Column label of a node in the P*/C* convention.
std::string node_column(const ConceptHierarchy& h, int node_id);

using Predictor = std::function<Prediction(const Sample&)>;

/// Scores `predict` on `samples` (exported label maps vs ground truth).
/// Throws EmptyPoolError.
EvalReport evaluate(const Predictor& predict, std::span<const Sample> samples,
                    const ConceptHierarchy& h, ExecPolicy policy = ExecPolicy::parallel);

struct QualityReport {
  std::map<int, double> per_category;                      // node id -> mean Dice
  std::map<int, std::vector<std::string>> sampled_ids;     // node id -> sampled sample ids
  double overall = 0.0;                                    // mean over every sampled instance
  nlohmann::json to_json(const ConceptHierarchy& h) const;
};

/// Draws `n_per_category` seeded instances of every concept (samples whose
/// ground truth contains it) and scores pseudo vs ground-truth masks.
/// Throws InsufficientSamplesError when a concept has fewer instances.
QualityReport sample_quality_report(std::span<const PseudoLabelRecord> records,
                                    std::span<const Sample> ground_truth, const ConceptHierarchy& h,
                                    int n_per_category, std::uint64_t seed);

}  // namespace hcep

#endif  // HCEP_METRICS_HPP_
