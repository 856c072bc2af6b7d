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

#ifndef HCEP_MODEL_HPP_
#define HCEP_MODEL_HPP_

#include <vector>

#include "hcep/decoder.hpp"
#include "hcep/hierarchy.hpp"
#include "hcep/net.hpp"
#include "hcep/prediction.hpp"

namespace hcep {

/// Encoder, shared pixel decoder and hierarchical decoder over one parameter store.
class Model {
 public:
  /// Parameters are initialised from cfg.init_seed. Throws ConfigError.
  static Model create(const NetConfig& cfg, const ConceptHierarchy& h);

  /// `image` is (size^2) x 3.
  DecoderVars forward(Tape& t, const Matrix& image) const;
  /// Same, with the image already on the tape (gradient checks).
  DecoderVars forward(Tape& t, Var image) const;

  Prediction predict(const std::vector<double>& rgb) const;

  const NetConfig& config() const { return cfg_; }
  const ConceptHierarchy& hierarchy() const { return hierarchy_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const Encoder& encoder() const { return encoder_; }
  const HierDecoder& decoder() const { return decoder_; }
  const Matrix& positional() const { return pos_; }

  /// Marks encoder weights frozen except the adapters.
  void freeze_encoder_base(bool frozen);

 private:
  Model(const NetConfig& cfg, const ConceptHierarchy& h) : cfg_(cfg), hierarchy_(h) {}

  NetConfig cfg_;
  ConceptHierarchy hierarchy_;
  ParamStore params_;
  Encoder encoder_;
  HierDecoder decoder_;
  Matrix pos_;
};

}  // namespace hcep

#endif  // HCEP_MODEL_HPP_
