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

#include "hcep/hierarchy.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "hcep/errors.hpp"

namespace hcep {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

ConceptHierarchy ConceptHierarchy::build(std::vector<ConceptNode> nodes) {
  if (nodes.empty()) throw InvalidNodeError("hierarchy has no nodes");
  std::sort(nodes.begin(), nodes.end(),
            [](const ConceptNode& a, const ConceptNode& b) { return a.id < b.id; });

  ConceptHierarchy h;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.id < 1) throw InvalidNodeError("node id must be >= 1, got " + std::to_string(n.id));
    if (n.level < 0) throw InvalidNodeError("node " + std::to_string(n.id) + " has negative level");
    if (!h.index_.emplace(n.id, i).second)
      throw DuplicateIdError("duplicate node id " + std::to_string(n.id));
  }

  for (const auto& n : nodes) {
    if (!n.parent_id) {
      if (n.level != 0)
        throw OrphanError("node " + std::to_string(n.id) + " at level " + std::to_string(n.level) +
                          " has no parent");
      continue;
    }
    if (n.level == 0)
      throw LevelError("root-level node " + std::to_string(n.id) + " declares a parent");
    if (!h.index_.count(*n.parent_id))
      throw OrphanError("node " + std::to_string(n.id) + " references missing parent " +
                        std::to_string(*n.parent_id));
  }

  // Parent chains: 0 = unvisited, 1 = on current path, 2 = known acyclic.
  std::map<int, int> state;
  for (const auto& start : nodes) {
    std::vector<int> path;
    int cur = start.id;
    while (true) {
      int& s = state[cur];
      if (s == 2) break;
      if (s == 1) throw CycleError("parent chain through node " + std::to_string(cur) + " is cyclic");
      s = 1;
      path.push_back(cur);
      const auto& pn = nodes[h.index_.at(cur)].parent_id;
      if (!pn) break;
      cur = *pn;
    }
    for (int id : path) state[id] = 2;
  }

  for (const auto& n : nodes) {
    if (!n.parent_id) continue;
    const auto& p = nodes[h.index_.at(*n.parent_id)];
    if (p.level != n.level - 1)
      throw LevelError("node " + std::to_string(n.id) + " at level " + std::to_string(n.level) +
                       " has parent at level " + std::to_string(p.level));
  }

  int depth = 0;
  for (const auto& n : nodes) depth = std::max(depth, n.level);
  h.depth_ = depth;
  h.levels_.assign(static_cast<std::size_t>(depth) + 1, {});
  std::vector<std::set<std::string>> names(h.levels_.size());
  for (const auto& n : nodes) {
    if (!names[n.level].insert(n.name).second)
      throw DuplicateNameError("name '" + n.name + "' repeated at level " + std::to_string(n.level));
    h.levels_[n.level].push_back(n.id);
    if (n.parent_id) h.children_[*n.parent_id].push_back(n.id);
  }
  for (std::size_t l = 0; l < h.levels_.size(); ++l) {
    if (h.levels_[l].empty()) throw LevelError("level " + std::to_string(l) + " is empty");
    for (std::size_t s = 0; s < h.levels_[l].size(); ++s)
      h.slots_[h.levels_[l][s]] = static_cast<int>(s);
  }
  h.nodes_ = std::move(nodes);
  return h;
}

ConceptHierarchy ConceptHierarchy::from_json(const nlohmann::json& j) {
  std::vector<ConceptNode> nodes;
  try {
    for (const auto& e : j.at("nodes")) {
      ConceptNode n;
      n.id = e.at("id").get<int>();
      n.name = e.at("name").get<std::string>();
      n.level = e.at("level").get<int>();
      if (e.contains("parent") && !e.at("parent").is_null()) n.parent_id = e.at("parent").get<int>();
      nodes.push_back(std::move(n));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed hierarchy description: ") + ex.what());
  }
  return build(std::move(nodes));
}

ConceptHierarchy ConceptHierarchy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open hierarchy file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("hierarchy file " + path.string() + " is not valid JSON: " + ex.what());
  }
  return from_json(j);
}

nlohmann::json ConceptHierarchy::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& n : nodes_) {
    nlohmann::json e = {{"id", n.id}, {"name", n.name}, {"level", n.level}};
    if (n.parent_id) e["parent"] = *n.parent_id;
    arr.push_back(std::move(e));
  }
  return {{"nodes", std::move(arr)}};
}

void ConceptHierarchy::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write hierarchy file " + path.string());
  out << to_json().dump(2) << "\n";
}

const std::vector<int>& ConceptHierarchy::level(int l) const {
  if (l < 0 || l > depth_) throw LevelError("level " + std::to_string(l) + " out of range");
  return levels_[l];
}

const ConceptNode& ConceptHierarchy::node(int id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw UnknownNodeError("unknown node id " + std::to_string(id));
  return nodes_[it->second];
}

const std::vector<int>& ConceptHierarchy::children(int id) const {
  static const std::vector<int> kNone;
  if (!contains(id)) throw UnknownNodeError("unknown node id " + std::to_string(id));
  auto it = children_.find(id);
  return it == children_.end() ? kNone : it->second;
}

int ConceptHierarchy::slot(int id) const {
  auto it = slots_.find(id);
  if (it == slots_.end()) throw UnknownNodeError("unknown node id " + std::to_string(id));
  return it->second;
}

int ConceptHierarchy::ancestor_at(int id, int target_level) const {
  const ConceptNode* n = &node(id);
  if (target_level > n->level || target_level < 0)
    throw LevelError("node " + std::to_string(id) + " has no ancestor at level " +
                     std::to_string(target_level));
  while (n->level > target_level) n = &node(*n->parent_id);
  return n->id;
}

std::size_t ConceptHierarchy::edge_count() const {
  std::size_t e = 0;
  for (const auto& [id, ch] : children_) e += ch.size();
  return e;
}

std::uint64_t ConceptHierarchy::spec_hash() const { return fnv1a(to_json().dump()); }

std::vector<double> aggregate_children(const ConceptHierarchy& h, int parent_id,
                                       std::span<const std::vector<double>> child_maps,
                                       std::size_t pixel_count) {
  const auto& kids = h.children(parent_id);
  if (child_maps.size() != kids.size())
    throw ShapeMismatchError("expected " + std::to_string(kids.size()) + " child maps, got " +
                             std::to_string(child_maps.size()));
  std::vector<double> out(pixel_count, 0.0);
  for (const auto& m : child_maps) {
    if (m.size() != pixel_count) throw ShapeMismatchError("child map size mismatch");
    for (std::size_t i = 0; i < pixel_count; ++i) out[i] = std::max(out[i], m[i]);
  }
  return out;
}

LabelMapping LabelMapping::from_json(const nlohmann::json& j, const ConceptHierarchy& h,
                                     std::string dataset_name) {
  LabelMapping m(std::move(dataset_name));
  if (!j.is_object()) throw ConfigError("label mapping must be a JSON object");
  const nlohmann::json* entries = &j;
  if (j.contains("entries")) {
    if (j.contains("dataset_name")) m.dataset_name_ = j.at("dataset_name").get<std::string>();
    entries = &j.at("entries");
  }
  for (const auto& [k, v] : entries->items()) {
    if (!v.is_number_integer()) throw ConfigError("label mapping value for '" + k + "' is not an id");
    m.register_category(h, k, v.get<int>());
  }
  return m;
}

LabelMapping LabelMapping::load(const std::filesystem::path& path, const ConceptHierarchy& h) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label mapping " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("label mapping " + path.string() + " is not valid JSON: " + ex.what());
  }
  return from_json(j, h, path.stem().string());
}

nlohmann::json LabelMapping::to_json() const {
  nlohmann::json e = nlohmann::json::object();
  for (const auto& [k, v] : entries_) e[k] = v;
  return {{"dataset_name", dataset_name_}, {"entries", e}};
}

void LabelMapping::register_category(const ConceptHierarchy& h, const std::string& category,
                                     int node_id) {
  if (!h.contains(node_id))
    throw UnknownNodeError("category '" + category + "' maps to unknown node " +
                           std::to_string(node_id));
  entries_[category] = node_id;
}

int LabelMapping::map_category(const ConceptHierarchy& h, const std::string& category) const {
  auto it = entries_.find(category);
  if (it == entries_.end())
    throw UnmappedCategoryError("category '" + category +
                                "' is not registered; register it or resolve at a coarser level");
  if (!h.contains(it->second)) throw UnknownNodeError("stale mapping for '" + category + "'");
  return it->second;
}

int LabelMapping::map_category_at_level(const ConceptHierarchy& h, const std::string& category,
                                        int level) const {
  return h.ancestor_at(map_category(h, category), level);
}

int map_category(const LabelMapping& m, const ConceptHierarchy& h, const std::string& category) {
  return m.map_category(h, category);
}

namespace {

ConceptHierarchy make_taxonomy(const std::vector<std::vector<std::string>>& branches) {
  static const char* kRoots[] = {"anatomy", "tissue", "instrument"};
  std::vector<ConceptNode> nodes;
  for (int r = 0; r < 3; ++r) nodes.push_back({r + 1, kRoots[r], 0, std::nullopt});
  int next = 4;
  for (int r = 0; r < 3; ++r)
    for (const auto& name : branches[r]) nodes.push_back({next++, name, 1, r + 1});
  return ConceptHierarchy::build(std::move(nodes));
}

}  // namespace

ConceptHierarchy surgical_taxonomy() {
  return make_taxonomy({{"abdominal_wall", "liver", "gallbladder", "fat", "spleen", "stomach",
                         "colon", "small_intestine", "vein", "ureter", "cystic_duct"},
                        {"blood", "connective_tissue"},
                        {"grasper", "hook", "clipper", "scissors", "irrigator", "bipolar",
                         "specimen_bag"}});
}

ConceptHierarchy reference_taxonomy() {
  return make_taxonomy({{"liver", "gallbladder", "fat"},
                        {"blood", "connective_tissue"},
                        {"grasper", "hook", "clipper"}});
}

LabelMapping default_label_mapping(const ConceptHierarchy& h) {
  LabelMapping m("builtin");
  for (const auto& n : h.nodes()) m.register_category(h, n.name, n.id);
  return m;
}

}  // namespace hcep
