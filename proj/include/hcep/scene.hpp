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

#ifndef HCEP_SCENE_HPP_
#define HCEP_SCENE_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hcep/hierarchy.hpp"
#include "json.hpp"

namespace hcep {

struct IntRange {
  int lo = 1;
  int hi = 1;
};

struct SceneConfig {
  int image_size = 64;
  IntRange parent_count_range{2, 3};
  IntRange children_per_parent_range{1, 3};
  double texture_noise_sigma = 0.04;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
  static SceneConfig from_json(const nlohmann::json& j);
};

/// Either ground truth from the generator or a pseudo-label from evolution round k.
struct Provenance {
  int pseudo_iteration = 0;  // 0 = synthetic ground truth

  bool is_pseudo() const { return pseudo_iteration > 0; }
  std::string to_string() const;
  static Provenance parse(const std::string& s);
  bool operator==(const Provenance&) const = default;
};

/// Packed per-level label map, row-major, value = node id (0 = background).
struct LabelMap {
  int size = 0;
  std::vector<std::uint16_t> ids;

  std::uint16_t at(int y, int x) const { return ids[static_cast<std::size_t>(y) * size + x]; }
  bool operator==(const LabelMap&) const = default;
};

struct Sample {
  std::string sample_id;
  int size = 0;
  std::vector<double> image;         // size*size*3 interleaved RGB in [0,1]
  std::vector<LabelMap> level_maps;  // indexed by hierarchy level
  bool labeled = true;
  Provenance provenance;

  double pixel(int y, int x, int c) const {
    return image[(static_cast<std::size_t>(y) * size + x) * 3 + c];
  }
  bool operator==(const Sample&) const = default;
};

/// Splittable per-sample seed: hash(master ^ hash(index)).
std::uint64_t derive_sample_seed(std::uint64_t master_seed, std::uint64_t index);

/// Content hash of the image bytes, used for duplicate removal.
std::uint64_t image_hash(const Sample& s);

/// Canonical sample id for dataset index `i` ("s000123").
std::string sample_id_for(std::size_t index);

/// Renders one scene. Deepest-level regions are unions of ellipses or star
/// polygons drawn last-wins; coarser levels are the ancestor of each pixel.
/// Image values are quantised to k/65535 so PNG storage is exact.
/// Throws ConfigError when the drawn regions cannot all stay visible.
Sample generate_scene(const SceneConfig& cfg, const ConceptHierarchy& h, std::uint64_t sample_seed);

/// Base RGB colour of a node.
std::array<double, 3> concept_color(const ConceptHierarchy& h, int node_id);

/// Checks both label-map invariants; returns the number of violating pixels.
std::size_t count_consistency_violations(const Sample& s, const ConceptHierarchy& h);

/// Binary mask (0/1 per pixel) of `node_id` at its level.
std::vector<std::uint8_t> node_mask(const Sample& s, const ConceptHierarchy& h, int node_id);

/// Writes <root>/<id>/{image.png, level_<l>.png, meta.json}. Throws IoError.
void write_sample(const Sample& s, const std::filesystem::path& root);

/// 16-bit grayscale PNG of node ids. Throws IoError.
void write_label_map(const LabelMap& m, const std::filesystem::path& path);

/// Throws IoError when missing, CorruptSampleError on checksum mismatch.
Sample read_sample(const std::filesystem::path& root, const std::string& id);

}  // namespace hcep

#endif  // HCEP_SCENE_HPP_
