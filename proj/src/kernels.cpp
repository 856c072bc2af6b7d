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

#include "hcep/kernels.hpp"

#include "hcep/errors.hpp"

namespace hcep {

namespace {

struct ItemResult {
  LossReport loss;
  Gradients grads;
};

LossReport run_sample(const Model& model, const Sample& s, const LossConfig& cfg, Gradients* grads) {
  const ConceptHierarchy& h = model.hierarchy();
  if (s.size != model.config().image_size)
    throw ShapeMismatchError("sample " + s.sample_id + " does not match the model image size");
  Tape t;
  DecoderVars out = model.forward(t, image_matrix(s.image, s.size));
  const std::size_t levels = out.logits.size();
  std::vector<Matrix> logits, targets;
  std::vector<Eigen::VectorXd> conf;
  for (std::size_t l = 0; l < levels; ++l) {
    logits.push_back(out.logits[l].value());
    conf.push_back(out.confidence[l].value().col(0));
    targets.push_back(level_targets(s, h, static_cast<int>(l)));
  }
  LossGradients lg;
  const LossReport r = total_loss(logits, conf, targets, h, cfg, !s.provenance.is_pseudo(),
                                  grads ? &lg : nullptr);
  if (grads) {
    std::vector<Tape::Seed> seeds;
    for (std::size_t l = 0; l < levels; ++l) {
      seeds.push_back({out.logits[l], lg.logits[l]});
      seeds.push_back({out.confidence[l], Matrix(lg.confidence[l])});
    }
    t.backward(seeds);
    *grads = zero_gradients(model.params());
    accumulate_tape_gradients(t, *grads);
  }
  return r;
}

}  // namespace

LossReport sample_loss(const Model& model, const Sample& s, const LossConfig& cfg) {
  return run_sample(model, s, cfg, nullptr);
}

BatchResult batch_loss_and_gradients(const Model& model, std::span<const Sample* const> batch,
                                     const LossConfig& cfg, ExecPolicy policy) {
  if (batch.empty()) throw EmptyPoolError("empty training batch");
  std::vector<ItemResult> items(batch.size());
  for_each_index(batch.size(), policy, [&](std::size_t i) {
    items[i].loss = run_sample(model, *batch[i], cfg, &items[i].grads);
  });
  BatchResult out;
  out.grads = zero_gradients(model.params());
  for (const ItemResult& it : items) {
    out.loss += it.loss;
    for (std::size_t k = 0; k < out.grads.size(); ++k) out.grads[k] += it.grads[k];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss = out.loss.scaled(inv);
  for (Matrix& g : out.grads) g *= inv;
  return out;
}

std::vector<Prediction> batch_predict(const Model& model, std::span<const Sample> samples,
                                      ExecPolicy policy) {
  std::vector<Prediction> out(samples.size());
  for_each_index(samples.size(), policy,
                 [&](std::size_t i) { out[i] = model.predict(samples[i].image); });
  return out;
}

std::vector<Sample> generate_scenes(const SceneConfig& cfg, const ConceptHierarchy& h,
                                    std::uint64_t master_seed, std::size_t count, ExecPolicy policy) {
  cfg.validate();
  std::vector<Sample> out(count);
  for_each_index(count, policy, [&](std::size_t i) {
    out[i] = generate_scene(cfg, h, derive_sample_seed(master_seed, i));
    out[i].sample_id = sample_id_for(i);
  });
  return out;
}

}  // namespace hcep
