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

#ifndef HCEP_KERNELS_HPP_
#define HCEP_KERNELS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "hcep/hierarchy.hpp"
#include "hcep/losses.hpp"
#include "hcep/model.hpp"
#include "hcep/parallel.hpp"
#include "hcep/prediction.hpp"
#include "hcep/scene.hpp"

namespace hcep {

struct BatchResult {
  LossReport loss;     // mean over the batch
  Gradients grads;     // mean over the batch, one buffer per parameter slot
};

/// Forward + backward for every sample of a batch. Pseudo-labeled samples
/// carry no confidence supervision. Throws EmptyPoolError on an empty batch.
BatchResult batch_loss_and_gradients(const Model& model, std::span<const Sample* const> batch,
                                     const LossConfig& cfg, ExecPolicy policy);

/// Loss of one sample with its per-level logits and confidence gradients
/// (no parameter gradients).
LossReport sample_loss(const Model& model, const Sample& s, const LossConfig& cfg);

std::vector<Prediction> batch_predict(const Model& model, std::span<const Sample> samples,
                                      ExecPolicy policy);

/// Scenes 0..count-1 of a dataset, each seeded by derive_sample_seed(master_seed, i).
std::vector<Sample> generate_scenes(const SceneConfig& cfg, const ConceptHierarchy& h,
                                    std::uint64_t master_seed, std::size_t count, ExecPolicy policy);

}  // namespace hcep

#endif  // HCEP_KERNELS_HPP_
