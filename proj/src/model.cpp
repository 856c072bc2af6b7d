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

#include "hcep/model.hpp"

#include "hcep/errors.hpp"

namespace hcep {

Model Model::create(const NetConfig& cfg, const ConceptHierarchy& h) {
  cfg.validate();
  if (cfg.patch_size != 4)
    throw ConfigError("the segmentation model needs patch_size 4 so masks match the image size");
  Model m(cfg, h);
  Rng rng(cfg.init_seed);
  m.encoder_ = Encoder::create(m.params_, cfg, rng);
  m.decoder_ = HierDecoder::create(m.params_, cfg, h, rng);
  m.pos_ = positional_encoding(cfg.grid(), cfg.embed_dim);
  return m;
}

DecoderVars Model::forward(Tape& t, const Matrix& image) const {
  return forward(t, t.constant(image));
}

DecoderVars Model::forward(Tape& t, Var image) const {
  Var pos = t.constant(pos_);
  Var h = encoder_(t, params_, image, pos);
  return decoder_.forward(t, params_, h, pos);
}

Prediction Model::predict(const std::vector<double>& rgb) const {
  Tape t;
  DecoderVars out = forward(t, image_matrix(rgb, cfg_.image_size));
  Prediction p;
  p.size = cfg_.image_size;
  for (std::size_t l = 0; l < out.logits.size(); ++l) {
    p.logits.push_back(out.logits[l].value());
    p.confidence.push_back(out.confidence[l].value().col(0));
  }
  return p;
}

void Model::freeze_encoder_base(bool frozen) {
  for (int s = 0; s < params_.size(); ++s) {
    Parameter& p = params_[s];
    if (p.name.rfind("encoder/", 0) == 0 && p.name.find(".adapter.") == std::string::npos)
      p.trainable = !frozen;
  }
}

}  // namespace hcep
