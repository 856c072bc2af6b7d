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

#ifndef HCEP_HIERARCHY_HPP_
#define HCEP_HIERARCHY_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace hcep {

/// Node id 0 is reserved for background in every label map.
inline constexpr int kBackgroundId = 0;

struct ConceptNode {
  int id = 0;
  std::string name;
  int level = 0;
  std::optional<int> parent_id;

  bool operator==(const ConceptNode&) const = default;
};

/// Immutable, validated concept forest. Levels and child lists are kept in
/// ascending id order, which fixes the node <-> query-slot correspondence.
class ConceptHierarchy {
 public:
  /// Validates `nodes` and builds the level and child indices.
  /// Throws DuplicateIdError, DuplicateNameError, InvalidNodeError,
  /// OrphanError, CycleError or LevelError.
  static ConceptHierarchy build(std::vector<ConceptNode> nodes);

  static ConceptHierarchy from_json(const nlohmann::json& j);
  static ConceptHierarchy load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;

  /// Maximum level L (0 for a single root level).
  int depth() const { return depth_; }
  int num_levels() const { return depth_ + 1; }
  std::size_t size() const { return nodes_.size(); }

  const std::vector<ConceptNode>& nodes() const { return nodes_; }
  const std::vector<int>& level(int l) const;
  bool contains(int id) const { return index_.count(id) != 0; }
  const ConceptNode& node(int id) const;
  std::optional<int> parent(int id) const { return node(id).parent_id; }
  const std::vector<int>& children(int id) const;
  bool is_leaf(int id) const { return children(id).empty(); }

  /// Row of `id` inside its level's ordered id list.
  int slot(int id) const;

  /// Ancestor of `id` at `target_level` (itself when levels match).
  int ancestor_at(int id, int target_level) const;

  /// Number of (parent, child) edges.
  std::size_t edge_count() const;

  /// FNV-1a hash of the canonical JSON form; stored in checkpoints.
  std::uint64_t spec_hash() const;

 private:
  std::vector<ConceptNode> nodes_;             // ascending id
  std::map<int, std::size_t> index_;           // id -> position in nodes_
  std::vector<std::vector<int>> levels_;
  std::map<int, std::vector<int>> children_;   // only nodes with children
  std::map<int, int> slots_;
  int depth_ = 0;
};

/// Per-pixel max over the children of `parent_id`. `child_maps` must follow
/// children(parent_id) order. A leaf parent yields zeros of `pixel_count`.
std::vector<double> aggregate_children(const ConceptHierarchy& h, int parent_id,
                                       std::span<const std::vector<double>> child_maps,
                                       std::size_t pixel_count);

/// Maps external dataset category strings onto hierarchy nodes.
class LabelMapping {
 public:
  LabelMapping() = default;
  explicit LabelMapping(std::string dataset_name) : dataset_name_(std::move(dataset_name)) {}

  static LabelMapping from_json(const nlohmann::json& j, const ConceptHierarchy& h,
                                std::string dataset_name = {});
  static LabelMapping load(const std::filesystem::path& path, const ConceptHierarchy& h);
  nlohmann::json to_json() const;

  /// Throws UnknownNodeError when `node_id` is not in `h`.
  void register_category(const ConceptHierarchy& h, const std::string& category, int node_id);

  const std::string& dataset_name() const { return dataset_name_; }
  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, int>& entries() const { return entries_; }

  /// Throws UnmappedCategoryError for unregistered categories.
  int map_category(const ConceptHierarchy& h, const std::string& category) const;

  /// Resolves `category` and ascends to `level` (granularity-adaptive lookup).
  int map_category_at_level(const ConceptHierarchy& h, const std::string& category,
                            int level) const;

 private:
  std::string dataset_name_;
  std::map<std::string, int> entries_;
};

int map_category(const LabelMapping& m, const ConceptHierarchy& h, const std::string& category);

/// Three root branches with 11 + 2 + 7 children.
ConceptHierarchy surgical_taxonomy();

/// Desk-scale taxonomy: three root branches with 3 + 2 + 3 children.
ConceptHierarchy reference_taxonomy();

/// Category strings of the built-in taxonomies mapped onto their nodes.
LabelMapping default_label_mapping(const ConceptHierarchy& h);

}  // namespace hcep

#endif  // HCEP_HIERARCHY_HPP_
