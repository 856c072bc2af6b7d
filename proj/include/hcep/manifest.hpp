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

#ifndef HCEP_MANIFEST_HPP_
#define HCEP_MANIFEST_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace hcep {

struct PoolFractions {
  double labeled = 0.7;
  double unlabeled = 0.1;
  double test = 0.2;
};

/// Labeled / unlabeled / test bookkeeping for one dataset root.
struct DatasetManifest {
  std::string root_path;
  std::vector<std::string> labeled_ids;
  std::vector<std::string> unlabeled_ids;
  std::vector<std::string> test_ids;
  std::string hierarchy_spec_path;
  int created_by_iteration = 0;
  int version = 0;
  /// Labeled ids whose labels came from evolution round k (absent = ground truth).
  std::map<std::string, int> pseudo_iteration;
  /// Parent directory of the pseudo_iter_<k> label roots; empty means root_path.
  std::string pseudo_root;

  /// Throws PoolConsistencyError when pools overlap or contain duplicates.
  void check_disjoint() const;
  std::vector<std::string> all_ids() const;
  bool is_pseudo(const std::string& id) const { return pseudo_iteration.count(id) != 0; }

  /// Directory holding the labels of `id`.
  std::filesystem::path label_root(const std::string& id) const;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);

  /// Atomic write (temp file + rename).
  void save(const std::filesystem::path& path) const;
  static DatasetManifest load(const std::filesystem::path& path);

  /// Writes manifest_v<version>.json and manifest.json under `dir` (root_path when empty).
  void save_versioned(const std::filesystem::path& dir = {}) const;
};

/// Directory name for pseudo-labels produced in evolution round `iteration`.
std::string pseudo_root_name(int iteration);

/// Deterministic shuffled partition; sizes by largest remainder.
/// Throws FractionError unless the fractions are >= 0 and sum to 1 +- 1e-9.
DatasetManifest split_pools(const std::vector<std::string>& ids, const PoolFractions& fractions,
                            std::uint64_t seed);

/// Writes `text` to `path` via a temp file and rename.
void atomic_write(const std::filesystem::path& path, const std::string& text);

}  // namespace hcep

#endif  // HCEP_MANIFEST_HPP_
