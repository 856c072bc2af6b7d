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

#include <benchmark/benchmark.h>

#include <vector>

#include "hcep/kernels.hpp"
#include "hcep/metrics.hpp"
#include "hcep/model.hpp"

using namespace hcep;

namespace {

constexpr int kBatch = 8;

const ConceptHierarchy& taxonomy() {
  static const ConceptHierarchy h = reference_taxonomy();
  return h;
}

const std::vector<Sample>& samples() {
  static const std::vector<Sample> s = generate_scenes(SceneConfig{}, taxonomy(), 1, kBatch, ExecPolicy::serial);
  return s;
}

const Model& model() {
  static const Model m = Model::create(NetConfig{}, taxonomy());
  return m;
}

ExecPolicy policy(const benchmark::State& state) {
  return state.range(0) ? ExecPolicy::parallel : ExecPolicy::serial;
}

void BM_LossAndGradients(benchmark::State& state) {
  std::vector<const Sample*> batch;
  for (const auto& s : samples()) batch.push_back(&s);
  for (auto _ : state) benchmark::DoNotOptimize(batch_loss_and_gradients(model(), batch, LossConfig{}, policy(state)));
  state.SetItemsProcessed(state.iterations() * kBatch);
}

void BM_Predict(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(batch_predict(model(), samples(), policy(state)));
  state.SetItemsProcessed(state.iterations() * kBatch);
}

void BM_GenerateScenes(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(generate_scenes(SceneConfig{}, taxonomy(), 2, kBatch, policy(state)));
  state.SetItemsProcessed(state.iterations() * kBatch);
}

void BM_Evaluate(benchmark::State& state) {
  const Predictor p = [](const Sample& s) { return oracle_prediction(s, taxonomy()); };
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(p, samples(), taxonomy(), policy(state)));
  state.SetItemsProcessed(state.iterations() * kBatch);
}

}  // namespace

// Argument 0 is the serial reference, 1 the OpenMP kernel.
BENCHMARK(BM_LossAndGradients)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Predict)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_GenerateScenes)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Evaluate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
