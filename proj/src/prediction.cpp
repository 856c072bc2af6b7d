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

#include "hcep/prediction.hpp"

#include <algorithm>
#include <numeric>

#include "hcep/errors.hpp"

namespace hcep {

ad::Matrix Prediction::probs(int level) const {
  return logits.at(static_cast<std::size_t>(level)).unaryExpr([](double x) { return ad::sigmoid(x); });
}

Mask Prediction::binary(int level, int slot) const {
  const auto& z = logits.at(static_cast<std::size_t>(level));
  Mask m(static_cast<std::size_t>(z.cols()));
  for (ad::Index p = 0; p < z.cols(); ++p) m[static_cast<std::size_t>(p)] = z(slot, p) > 0.0 ? 1 : 0;
  return m;
}

LabelMap export_label_map(const ad::Matrix& logits, const std::vector<int>& level_ids, int size) {
  if (logits.rows() != static_cast<ad::Index>(level_ids.size()) ||
      logits.cols() != static_cast<ad::Index>(size) * size)
    throw ShapeMismatchError("logit stack does not match the level");
  LabelMap m{size, std::vector<std::uint16_t>(static_cast<std::size_t>(size) * size, 0)};
  for (ad::Index p = 0; p < logits.cols(); ++p) {
    ad::Index best = -1;
    for (ad::Index k = 0; k < logits.rows(); ++k)
      if (logits(k, p) > 0.0 && (best < 0 || logits(k, p) > logits(best, p))) best = k;
    if (best >= 0) m.ids[static_cast<std::size_t>(p)] = static_cast<std::uint16_t>(level_ids[best]);
  }
  return m;
}

Prediction oracle_prediction(const Sample& s, const ConceptHierarchy& h) {
  Prediction p;
  p.size = s.size;
  const auto npix = static_cast<ad::Index>(s.size) * s.size;
  for (int l = 0; l < h.num_levels(); ++l) {
    const auto& ids = h.level(l);
    ad::Matrix z(static_cast<ad::Index>(ids.size()), npix);
    for (std::size_t k = 0; k < ids.size(); ++k)
      for (ad::Index q = 0; q < npix; ++q)
        z(static_cast<ad::Index>(k), q) = s.level_maps.at(l).ids[static_cast<std::size_t>(q)] == ids[k] ? 30.0 : -30.0;
    p.logits.push_back(std::move(z));
    p.confidence.push_back(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(ids.size())));
  }
  return p;
}

double PseudoLabelRecord::record_confidence() const {
  double sum = 0.0, all = 0.0;
  std::size_t n = 0, total = 0;
  for (std::size_t l = 0; l < masks.size(); ++l)
    for (std::size_t k = 0; k < masks[l].size(); ++k) {
      all += confidence[l][k];
      ++total;
      if (std::any_of(masks[l][k].begin(), masks[l][k].end(), [](std::uint8_t v) { return v != 0; })) {
        sum += confidence[l][k];
        ++n;
      }
    }
  if (n > 0) return sum / static_cast<double>(n);
  return total > 0 ? all / static_cast<double>(total) : 0.0;
}

std::vector<LabelMap> PseudoLabelRecord::label_maps(const ConceptHierarchy& h) const {
  std::vector<LabelMap> maps;
  const auto npix = static_cast<std::size_t>(size) * size;
  for (std::size_t l = 0; l < masks.size(); ++l) {
    const auto& ids = h.level(static_cast<int>(l));
    LabelMap m{size, std::vector<std::uint16_t>(npix, 0)};
    for (std::size_t k = masks[l].size(); k-- > 0;)
      for (std::size_t p = 0; p < npix; ++p)
        if (masks[l][k][p]) m.ids[p] = static_cast<std::uint16_t>(ids[k]);
    maps.push_back(std::move(m));
  }
  return maps;
}

PseudoLabelRecord make_record(const Prediction& p, const std::string& sample_id, int iteration) {
  PseudoLabelRecord r;
  r.sample_id = sample_id;
  r.size = p.size;
  r.iteration = iteration;
  for (std::size_t l = 0; l < p.logits.size(); ++l) {
    std::vector<Mask> level;
    std::vector<double> conf;
    for (ad::Index k = 0; k < p.logits[l].rows(); ++k) {
      level.push_back(p.binary(static_cast<int>(l), static_cast<int>(k)));
      conf.push_back(p.confidence[l](k));
    }
    r.masks.push_back(std::move(level));
    r.confidence.push_back(std::move(conf));
  }
  return r;
}

}  // namespace hcep
