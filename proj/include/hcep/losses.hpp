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

#ifndef HCEP_LOSSES_HPP_
#define HCEP_LOSSES_HPP_

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "hcep/autodiff.hpp"
#include "hcep/hierarchy.hpp"
#include "hcep/scene.hpp"
#include "json.hpp"

namespace hcep {

using ad::Matrix;

struct LossConfig {
  double lambda1 = 0.5;
  /// Log / denominator stabiliser.
  double epsilon = 1e-6;
  double dice_smooth = 1.0;

  void validate() const;
  nlohmann::json to_json() const;
  static LossConfig from_json(const nlohmann::json& j);
};

struct LossReport {
  double dice = 0.0;
  double bce = 0.0;
  double mse = 0.0;
  double hc = 0.0;
  double total = 0.0;

  LossReport& operator+=(const LossReport& o);
  LossReport scaled(double s) const;
};

// Mask stacks below are n x P: one row per concept, one column per pixel.
// Optional gradient outputs are w.r.t. the probabilities (or t).

/// Mean over rows of 1 - (2 sum p t + smooth) / (sum p + sum t + smooth).
double dice_loss(const Matrix& probs, const Matrix& target, double smooth, Matrix* grad = nullptr);

/// Mean binary cross-entropy with probabilities clamped to [eps, 1 - eps].
double bce_loss(const Matrix& probs, const Matrix& target, double eps, Matrix* grad = nullptr);

/// One-sided KL-style consistency between each parent and the max of its
/// children: for levels l < L, the mean over parents of
///   mean_x max(0, p(x) (log(p(x) + eps) - log(max_j c_j(x) + eps))).
/// Leaf parents contribute 0. `level_probs[l]` rows follow h.level(l).
double hierarchy_consistency_loss(std::span<const Matrix> level_probs, const ConceptHierarchy& h,
                                  const LossConfig& cfg, std::vector<Matrix>* grads = nullptr);

/// mean_k (t_k - Dice(mask_k > 0.5, gt_k))^2 with the Dice target held constant.
double confidence_mse_loss(const Eigen::VectorXd& t, const Matrix& mask_logits, const Matrix& gt,
                           Eigen::VectorXd* grad = nullptr);

/// Binary target stack of `level` (rows follow h.level(level)).
Matrix level_targets(const Sample& s, const ConceptHierarchy& h, int level);

struct LossGradients {
  std::vector<Matrix> logits;                // d total / d logits, per level
  std::vector<Eigen::VectorXd> confidence;   // d total / d t, per level
};

/// dice + bce (every concept, every level) + mse + lambda1 * hc.
/// With `supervise_confidence` false the mse term is reported as 0 and
/// contributes no gradient.
LossReport total_loss(std::span<const Matrix> logits, std::span<const Eigen::VectorXd> confidence,
                      std::span<const Matrix> targets, const ConceptHierarchy& h,
                      const LossConfig& cfg, bool supervise_confidence = true,
                      LossGradients* grads = nullptr);

}  // namespace hcep

#endif  // HCEP_LOSSES_HPP_
