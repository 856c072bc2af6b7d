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

#include "hcep/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "hcep/errors.hpp"

namespace hcep {

void DatasetManifest::check_disjoint() const {
  std::set<std::string> seen;
  for (const auto* pool : {&labeled_ids, &unlabeled_ids, &test_ids})
    for (const auto& id : *pool)
      if (!seen.insert(id).second) throw PoolConsistencyError("sample '" + id + "' appears twice");
  for (const auto& [id, it] : pseudo_iteration) {
    if (std::find(labeled_ids.begin(), labeled_ids.end(), id) == labeled_ids.end())
      throw PoolConsistencyError("pseudo-labeled '" + id + "' is not in the labeled pool");
  }
}

std::vector<std::string> DatasetManifest::all_ids() const {
  std::vector<std::string> all = labeled_ids;
  all.insert(all.end(), unlabeled_ids.begin(), unlabeled_ids.end());
  all.insert(all.end(), test_ids.begin(), test_ids.end());
  return all;
}

std::filesystem::path DatasetManifest::label_root(const std::string& id) const {
  auto it = pseudo_iteration.find(id);
  const std::filesystem::path root(root_path);
  if (it == pseudo_iteration.end()) return root;
  return (pseudo_root.empty() ? root : std::filesystem::path(pseudo_root)) / pseudo_root_name(it->second);
}

nlohmann::json DatasetManifest::to_json() const {
  return {{"root_path", root_path},
          {"labeled_ids", labeled_ids},
          {"unlabeled_ids", unlabeled_ids},
          {"test_ids", test_ids},
          {"hierarchy_spec_path", hierarchy_spec_path},
          {"created_by_iteration", created_by_iteration},
          {"version", version},
          {"pseudo_iteration", pseudo_iteration},
          {"pseudo_root", pseudo_root}};
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    m.root_path = j.at("root_path").get<std::string>();
    m.labeled_ids = j.at("labeled_ids").get<std::vector<std::string>>();
    m.unlabeled_ids = j.at("unlabeled_ids").get<std::vector<std::string>>();
    m.test_ids = j.at("test_ids").get<std::vector<std::string>>();
    m.hierarchy_spec_path = j.value("hierarchy_spec_path", std::string{});
    m.created_by_iteration = j.value("created_by_iteration", 0);
    m.version = j.value("version", 0);
    m.pseudo_root = j.value("pseudo_root", std::string{});
    if (j.contains("pseudo_iteration"))
      m.pseudo_iteration = j.at("pseudo_iteration").get<std::map<std::string, int>>();
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed manifest: ") + ex.what());
  }
  m.check_disjoint();
  return m;
}

void atomic_write(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out << text;
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + ": " + ec.message());
}

void DatasetManifest::save(const std::filesystem::path& path) const {
  atomic_write(path, to_json().dump(2) + "\n");
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("manifest " + path.string() + " is not valid JSON: " + ex.what());
  }
  return from_json(j);
}

void DatasetManifest::save_versioned(const std::filesystem::path& dir) const {
  const std::filesystem::path root = dir.empty() ? std::filesystem::path(root_path) : dir;
  save(root / ("manifest_v" + std::to_string(version) + ".json"));
  save(root / "manifest.json");
}

std::string pseudo_root_name(int iteration) { return "pseudo_iter_" + std::to_string(iteration); }

DatasetManifest split_pools(const std::vector<std::string>& ids, const PoolFractions& f,
                            std::uint64_t seed) {
  const double fr[3] = {f.labeled, f.unlabeled, f.test};
  for (double x : fr)
    if (!(x >= 0.0) || !std::isfinite(x)) throw FractionError("pool fractions must be >= 0");
  if (std::abs(fr[0] + fr[1] + fr[2] - 1.0) > 1e-9)
    throw FractionError("pool fractions must sum to 1");

  const std::size_t n = ids.size();
  std::size_t counts[3];
  double rem[3];
  std::size_t total = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = fr[k] * static_cast<double>(n);
    counts[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[k] = exact - static_cast<double>(counts[k]);
    total += counts[k];
  }
  while (total < n) {
    int best = 0;
    for (int k = 1; k < 3; ++k)
      if (rem[k] > rem[best] + 1e-12) best = k;
    ++counts[best];
    rem[best] = -1.0;
    ++total;
  }

  std::vector<std::string> order = ids;
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> d(0, i - 1);
    std::swap(order[i - 1], order[d(rng)]);
  }
  DatasetManifest m;
  auto it = order.begin();
  m.labeled_ids.assign(it, it + static_cast<std::ptrdiff_t>(counts[0]));
  it += static_cast<std::ptrdiff_t>(counts[0]);
  m.unlabeled_ids.assign(it, it + static_cast<std::ptrdiff_t>(counts[1]));
  it += static_cast<std::ptrdiff_t>(counts[1]);
  m.test_ids.assign(it, order.end());
  m.check_disjoint();
  return m;
}

}  // namespace hcep
