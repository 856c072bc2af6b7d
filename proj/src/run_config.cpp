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

#include "hcep/run_config.hpp"

#include <cmath>
#include <fstream>

#include "hcep/errors.hpp"

namespace hcep {

void RunConfig::validate() const {
  if (dataset_root.empty()) throw ConfigError("dataset_root must be set");
  if (output_dir.empty()) throw ConfigError("output_dir must be set");
  if (num_samples == 0) throw ConfigError("num_samples must be >= 1");
  const double sum = fractions.labeled + fractions.unlabeled + fractions.test;
  if (fractions.labeled < 0 || fractions.unlabeled < 0 || fractions.test < 0 || std::abs(sum - 1.0) > 1e-9)
    throw FractionError("pool fractions must be non-negative and sum to 1");
  if (scene.image_size != net.image_size)
    throw ConfigError("scene.image_size and net.image_size differ");
  scene.validate();
  net.validate();
  train.validate();
  evolve.validate();
  loss.validate();
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = {{"dataset_root", dataset_root},
                      {"output_dir", output_dir},
                      {"hierarchy_path", hierarchy_path},
                      {"num_samples", num_samples},
                      {"fractions",
                       {{"labeled", fractions.labeled},
                        {"unlabeled", fractions.unlabeled},
                        {"test", fractions.test}}},
                      {"scene", scene.to_json()},
                      {"net", net.to_json()},
                      {"train", train.to_json()},
                      {"evolve", evolve.to_json()},
                      {"loss", loss.to_json()}};
  if (seed) j["seed"] = *seed;
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    if (!j.is_object()) throw ConfigError("run config must be a JSON object");
    c.dataset_root = j.value("dataset_root", c.dataset_root);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.hierarchy_path = j.value("hierarchy_path", c.hierarchy_path);
    c.num_samples = j.value("num_samples", c.num_samples);
    if (j.contains("fractions")) {
      const auto& f = j.at("fractions");
      c.fractions.labeled = f.value("labeled", c.fractions.labeled);
      c.fractions.unlabeled = f.value("unlabeled", c.fractions.unlabeled);
      c.fractions.test = f.value("test", c.fractions.test);
    }
    const nlohmann::json empty = nlohmann::json::object();
    c.scene = SceneConfig::from_json(j.value("scene", empty));
    c.net = NetConfig::from_json(j.value("net", empty));
    if (!j.contains("net") || !j.at("net").contains("image_size")) c.net.image_size = c.scene.image_size;
    c.train = TrainConfig::from_json(j.value("train", empty));
    c.evolve = EvolveConfig::from_json(j.value("evolve", empty));
    c.loss = LossConfig::from_json(j.value("loss", empty));
    if (j.contains("seed")) c.set_seed(j.at("seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed run config: ") + ex.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingInputError("config not found: " + path.string());
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + ex.what());
  }
  RunConfig c = from_json(j);
  const auto base = path.parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  resolve(c.dataset_root);
  resolve(c.output_dir);
  resolve(c.hierarchy_path);
  return c;
}

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  scene.seed = s;
  net.init_seed = s;
  train.seed = s;
}

ConceptHierarchy RunConfig::hierarchy() const {
  return hierarchy_path.empty() ? reference_taxonomy() : ConceptHierarchy::load(hierarchy_path);
}

}  // namespace hcep
