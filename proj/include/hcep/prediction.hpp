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

#ifndef HCEP_PREDICTION_HPP_
#define HCEP_PREDICTION_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "hcep/autodiff.hpp"
#include "hcep/hierarchy.hpp"
#include "hcep/scene.hpp"

namespace hcep {

using Mask = std::vector<std::uint8_t>;

/// Model output for one image, detached from any tape.
struct Prediction {
  int size = 0;
  std::vector<ad::Matrix> logits;              // [level] n_l x size^2
  std::vector<Eigen::VectorXd> confidence;     // [level] n_l

  ad::Matrix probs(int level) const;
  /// Per-concept binarisation at p > 0.5 (logit > 0).
  Mask binary(int level, int slot) const;
};

/// Per-pixel argmax over the concepts whose probability exceeds 0.5;
/// background where none does.
LabelMap export_label_map(const ad::Matrix& logits, const std::vector<int>& level_ids, int size);

/// Ground truth fed back as saturated logits with confidence 1.
Prediction oracle_prediction(const Sample& s, const ConceptHierarchy& h);

struct PseudoLabelRecord {
  std::string sample_id;
  int size = 0;
  int iteration = 0;
  bool selected = false;
  std::vector<std::vector<Mask>> masks;           // [level][slot]
  std::vector<std::vector<double>> confidence;    // [level][slot]

  /// Mean confidence over masks with at least one pixel; over all masks when
  /// every mask is empty.
  double record_confidence() const;

  /// One label map per level; where masks still overlap the lowest slot wins.
  std::vector<LabelMap> label_maps(const ConceptHierarchy& h) const;
};

/// Thresholds every concept map of `p` at 0.5.
PseudoLabelRecord make_record(const Prediction& p, const std::string& sample_id, int iteration);

}  // namespace hcep

#endif  // HCEP_PREDICTION_HPP_
