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

#include "hcep/losses.hpp"

#include <cmath>

#include "hcep/errors.hpp"
#include "hcep/metrics.hpp"

namespace hcep {

namespace {

void same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeMismatchError(what);
}

Matrix sigmoid_of(const Matrix& z) {
  return z.unaryExpr([](double x) { return ad::sigmoid(x); });
}

}  // namespace

void LossConfig::validate() const {
  if (!std::isfinite(lambda1) || lambda1 < 0.0) throw ConfigError("lambda1 must be finite and >= 0");
  if (!std::isfinite(epsilon) || epsilon <= 0.0) throw ConfigError("epsilon must be finite and > 0");
  if (!std::isfinite(dice_smooth) || dice_smooth < 0.0)
    throw ConfigError("dice_smooth must be finite and >= 0");
}

nlohmann::json LossConfig::to_json() const {
  return {{"lambda1", lambda1}, {"epsilon", epsilon}, {"dice_smooth", dice_smooth}};
}

LossConfig LossConfig::from_json(const nlohmann::json& j) {
  LossConfig c;
  try {
    c.lambda1 = j.value("lambda1", c.lambda1);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.dice_smooth = j.value("dice_smooth", c.dice_smooth);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("bad loss config: ") + ex.what());
  }
  c.validate();
  return c;
}

LossReport& LossReport::operator+=(const LossReport& o) {
  dice += o.dice;
  bce += o.bce;
  mse += o.mse;
  hc += o.hc;
  total += o.total;
  return *this;
}

LossReport LossReport::scaled(double s) const {
  return {dice * s, bce * s, mse * s, hc * s, total * s};
}

double dice_loss(const Matrix& probs, const Matrix& target, double smooth, Matrix* grad) {
  same_shape(probs, target, "dice_loss: probs and target differ in shape");
  const auto n = probs.rows();
  if (n == 0) return 0.0;
  if (grad) grad->setZero(probs.rows(), probs.cols());
  double loss = 0.0;
  for (ad::Index k = 0; k < n; ++k) {
    const double inter = probs.row(k).dot(target.row(k));
    const double denom = probs.row(k).sum() + target.row(k).sum() + smooth;
    const double num = 2.0 * inter + smooth;
    // 0/0 only when both masks are empty with smooth = 0: treat as a perfect match.
    if (denom == 0.0) continue;
    loss += 1.0 - num / denom;
    if (grad) {
      grad->row(k) = ((num - 2.0 * target.row(k).array() * denom) / (denom * denom)).matrix() /
                     static_cast<double>(n);
    }
  }
  return loss / static_cast<double>(n);
}

double bce_loss(const Matrix& probs, const Matrix& target, double eps, Matrix* grad) {
  same_shape(probs, target, "bce_loss: probs and target differ in shape");
  const double count = static_cast<double>(probs.size());
  if (count == 0) return 0.0;
  if (grad) grad->resize(probs.rows(), probs.cols());
  double loss = 0.0;
  for (ad::Index i = 0; i < probs.size(); ++i) {
    const double p = probs.data()[i], t = target.data()[i];
    const double pc = std::clamp(p, eps, 1.0 - eps);
    loss -= t * std::log(pc) + (1.0 - t) * std::log(1.0 - pc);
    if (grad) {
      const bool inside = p > eps && p < 1.0 - eps;
      grad->data()[i] = inside ? (-t / pc + (1.0 - t) / (1.0 - pc)) / count : 0.0;
    }
  }
  return loss / count;
}

double hierarchy_consistency_loss(std::span<const Matrix> level_probs, const ConceptHierarchy& h,
                                  const LossConfig& cfg, std::vector<Matrix>* grads) {
  if (static_cast<int>(level_probs.size()) != h.num_levels())
    throw ShapeMismatchError("one probability stack per hierarchy level is required");
  const ad::Index npix = level_probs.empty() ? 0 : level_probs[0].cols();
  for (int l = 0; l < h.num_levels(); ++l) {
    if (level_probs[l].rows() != static_cast<ad::Index>(h.level(l).size()) || level_probs[l].cols() != npix)
      throw ShapeMismatchError("probability stack of level " + std::to_string(l) + " has the wrong shape");
  }
  if (grads) {
    grads->clear();
    for (const auto& p : level_probs) grads->push_back(Matrix::Zero(p.rows(), p.cols()));
  }
  if (npix == 0) return 0.0;
  const double eps = cfg.epsilon;
  double loss = 0.0;
  for (int l = 0; l + 1 < h.num_levels(); ++l) {
    const auto& parents = h.level(l);
    const double norm = 1.0 / (static_cast<double>(npix) * static_cast<double>(parents.size()));
    const Matrix& pp = level_probs[l];
    const Matrix& cp = level_probs[l + 1];
    for (std::size_t i = 0; i < parents.size(); ++i) {
      const auto& kids = h.children(parents[i]);
      if (kids.empty()) continue;
      std::vector<ad::Index> rows;
      for (int c : kids) rows.push_back(h.slot(c));
      const auto pi = static_cast<ad::Index>(i);
      for (ad::Index x = 0; x < npix; ++x) {
        ad::Index arg = rows[0];
        for (ad::Index r : rows)
          if (cp(r, x) > cp(arg, x)) arg = r;
        const double p = pp(pi, x), m = cp(arg, x);
        const double diff = std::log(p + eps) - std::log(m + eps);
        const double f = p * diff;
        if (f <= 0.0) continue;
        loss += f * norm;
        if (grads) {
          (*grads)[l](pi, x) += (diff + p / (p + eps)) * norm;
          (*grads)[l + 1](arg, x) -= p / (m + eps) * norm;
        }
      }
    }
  }
  return loss;
}

double confidence_mse_loss(const Eigen::VectorXd& t, const Matrix& mask_logits, const Matrix& gt,
                           Eigen::VectorXd* grad) {
  same_shape(mask_logits, gt, "confidence_mse_loss: logits and ground truth differ in shape");
  if (t.size() != mask_logits.rows()) throw ShapeMismatchError("one confidence per mask is required");
  const auto n = t.size();
  if (grad) grad->setZero(n);
  if (n == 0) return 0.0;
  double loss = 0.0;
  Mask pred(static_cast<std::size_t>(gt.cols())), truth(static_cast<std::size_t>(gt.cols()));
  for (Eigen::Index k = 0; k < n; ++k) {
    for (ad::Index p = 0; p < gt.cols(); ++p) {
      pred[static_cast<std::size_t>(p)] = mask_logits(k, p) > 0.0;
      truth[static_cast<std::size_t>(p)] = gt(k, p) > 0.5;
    }
    const double r = t(k) - dice_score(pred, truth);
    loss += r * r;
    if (grad) (*grad)(k) = 2.0 * r / static_cast<double>(n);
  }
  return loss / static_cast<double>(n);
}

Matrix level_targets(const Sample& s, const ConceptHierarchy& h, int level) {
  const auto& ids = h.level(level);
  const auto& map = s.level_maps.at(static_cast<std::size_t>(level)).ids;
  Matrix t(static_cast<ad::Index>(ids.size()), static_cast<ad::Index>(map.size()));
  for (std::size_t k = 0; k < ids.size(); ++k)
    for (std::size_t p = 0; p < map.size(); ++p)
      t(static_cast<ad::Index>(k), static_cast<ad::Index>(p)) = map[p] == ids[k] ? 1.0 : 0.0;
  return t;
}

LossReport total_loss(std::span<const Matrix> logits, std::span<const Eigen::VectorXd> confidence,
                      std::span<const Matrix> targets, const ConceptHierarchy& h,
                      const LossConfig& cfg, bool supervise_confidence, LossGradients* grads) {
  const auto levels = static_cast<std::size_t>(h.num_levels());
  if (logits.size() != levels || targets.size() != levels || confidence.size() != levels)
    throw ShapeMismatchError("total_loss needs logits, confidences and targets for every level");

  LossReport r;
  std::vector<Matrix> probs, dprobs;
  if (grads) {
    grads->logits.clear();
    grads->confidence.clear();
  }
  for (std::size_t l = 0; l < levels; ++l) {
    same_shape(logits[l], targets[l], "total_loss: logits and targets differ in shape");
    probs.push_back(sigmoid_of(logits[l]));
    Matrix gd, gb;
    r.dice += dice_loss(probs[l], targets[l], cfg.dice_smooth, grads ? &gd : nullptr);
    r.bce += bce_loss(probs[l], targets[l], cfg.epsilon, grads ? &gb : nullptr);
    if (grads) dprobs.push_back(gd + gb);
    Eigen::VectorXd gt = Eigen::VectorXd::Zero(confidence[l].size());
    if (supervise_confidence)
      r.mse += confidence_mse_loss(confidence[l], logits[l], targets[l], grads ? &gt : nullptr);
    else if (confidence[l].size() != logits[l].rows())
      throw ShapeMismatchError("one confidence per mask is required");
    if (grads) grads->confidence.push_back(std::move(gt));
  }
  std::vector<Matrix> ghc;
  r.hc = hierarchy_consistency_loss(probs, h, cfg, grads ? &ghc : nullptr);
  r.total = r.dice + r.bce + r.mse + cfg.lambda1 * r.hc;
  if (grads) {
    for (std::size_t l = 0; l < levels; ++l) {
      Matrix dp = dprobs[l] + cfg.lambda1 * ghc[l];
      grads->logits.push_back(
          dp.cwiseProduct(probs[l].cwiseProduct((1.0 - probs[l].array()).matrix())));
    }
  }
  return r;
}

}  // namespace hcep
