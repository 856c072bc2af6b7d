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

#include <algorithm>
#include <fstream>
#include <random>

#include "doctest.h"
#include "hcep/errors.hpp"
#include "hcep/kernels.hpp"
#include "hcep/manifest.hpp"
#include "hcep/scene.hpp"
#include "support.hpp"

using namespace hcep;

namespace {

/// Pixel-scan check of both label-map invariants; returns the violation count.
std::size_t scan_violations(const Sample& s, const ConceptHierarchy& h) {
  std::size_t bad = 0;
  const std::size_t npix = static_cast<std::size_t>(s.size) * s.size;
  for (int l = 0; l + 1 < h.num_levels(); ++l) {
    const auto& up = s.level_maps[static_cast<std::size_t>(l)].ids;
    const auto& down = s.level_maps[static_cast<std::size_t>(l + 1)].ids;
    for (std::size_t x = 0; x < npix; ++x) {
      if (down[x] != 0) {
        if (up[x] != *h.parent(down[x])) ++bad;
      } else if (up[x] != 0 && !h.children(up[x]).empty()) {
        ++bad;  // parent pixel not covered by one of its children
      }
    }
  }
  return bad;
}

SceneConfig small_scene(std::uint64_t seed = 1) {
  SceneConfig c;
  c.image_size = 32;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("one parent with one child yields identical parent and child regions") {
  SceneConfig c = small_scene();
  c.parent_count_range = {1, 1};
  c.children_per_parent_range = {1, 1};
  const auto h = reference_taxonomy();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Sample s = generate_scene(c, h, seed);
    int parent = 0, child = 0;
    for (std::size_t x = 0; x < s.level_maps[0].ids.size(); ++x) {
      parent = std::max<int>(parent, s.level_maps[0].ids[x]);
      child = std::max<int>(child, s.level_maps[1].ids[x]);
    }
    REQUIRE(parent != 0);
    CHECK(node_mask(s, h, parent) == node_mask(s, h, child));
  }
}

TEST_CASE("generate_scene is deterministic in (cfg, seed)") {
  const auto h = reference_taxonomy();
  const auto c = small_scene();
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL, 0xFFFFFFFFFFFFULL}) CHECK(generate_scene(c, h, seed) == generate_scene(c, h, seed));
  CHECK_FALSE(generate_scene(c, h, 1).image == generate_scene(c, h, 2).image);
}

TEST_CASE("100 random scenes satisfy the cross-level invariant on every pixel") {
  const auto h = reference_taxonomy();
  SceneConfig c;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Sample s = generate_scene(c, h, derive_sample_seed(17, seed));
    CHECK(scan_violations(s, h) == 0);
    CHECK(count_consistency_violations(s, h) == 0);
    CHECK(std::all_of(s.image.begin(), s.image.end(), [](double v) { return v >= 0.0 && v <= 1.0; }));
    for (int p : h.level(0)) {
      auto mp = node_mask(s, h, p);
      std::vector<std::uint8_t> uni(mp.size(), 0);
      for (int ch : h.children(p)) {
        const auto mc = node_mask(s, h, ch);
        for (std::size_t x = 0; x < uni.size(); ++x) uni[x] |= mc[x];
      }
      CHECK(uni == mp);
    }
  }
}

TEST_CASE("deeper hierarchies also satisfy the invariant") {
  const auto h = ConceptHierarchy::build({{1, "a", 0, std::nullopt},
                                          {2, "b", 0, std::nullopt},
                                          {3, "a1", 1, 1},
                                          {4, "a2", 1, 1},
                                          {5, "b1", 1, 2},
                                          {6, "a1x", 2, 3},
                                          {7, "a1y", 2, 3},
                                          {8, "a2x", 2, 4},
                                          {9, "b1x", 2, 5}});
  for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(scan_violations(generate_scene(small_scene(), h, seed), h) == 0);
}

TEST_CASE("scene config validation") {
  const auto h = reference_taxonomy();
  SceneConfig c;
  c.image_size = 8;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SceneConfig{};
  c.parent_count_range = {3, 2};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SceneConfig{};
  c.parent_count_range = {4, 4};
  CHECK_THROWS_AS(generate_scene(c, h, 0), ConfigError);
  CHECK_THROWS_AS(generate_scene(SceneConfig{}, ConceptHierarchy::build({{1, "x", 0, std::nullopt}}), 0), ConfigError);
  CHECK(SceneConfig::from_json(small_scene(5).to_json()).to_json() == small_scene(5).to_json());
}

TEST_CASE("sample seeds do not depend on generation order") {
  const auto h = reference_taxonomy();
  const auto c = small_scene();
  const auto batch = generate_scenes(c, h, 42, 6, ExecPolicy::serial);
  for (std::size_t i = 6; i-- > 0;) {
    Sample s = generate_scene(c, h, derive_sample_seed(42, i));
    s.sample_id = sample_id_for(i);
    CHECK(s == batch[i]);
  }
}

TEST_CASE("split_pools sizes and determinism") {
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back(sample_id_for(static_cast<std::size_t>(i)));
  const auto m = split_pools(ids, {0.7, 0.1, 0.2}, 3);
  CHECK(m.labeled_ids.size() == 7);
  CHECK(m.unlabeled_ids.size() == 1);
  CHECK(m.test_ids.size() == 2);
  CHECK(split_pools(ids, {0.7, 0.1, 0.2}, 3).to_json() == m.to_json());

  const auto z = split_pools(ids, {0.8, 0.0, 0.2}, 3);
  CHECK(z.unlabeled_ids.empty());
  CHECK_THROWS_AS(split_pools(ids, {0.7, 0.2, 0.2}, 3), FractionError);
  CHECK_THROWS_AS(split_pools(ids, {1.2, -0.2, 0.0}, 3), FractionError);
}

TEST_CASE("split_pools is a bijection onto the input ids") {
  std::vector<std::string> ids;
  for (int i = 0; i < 1000; ++i) ids.push_back(sample_id_for(static_cast<std::size_t>(i)));
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = split_pools(ids, {0.2, 0.6, 0.2}, rng());
    auto all = m.all_ids();
    std::sort(all.begin(), all.end());
    CHECK(all == ids);
    CHECK(m.labeled_ids.size() == 200);
    CHECK(m.unlabeled_ids.size() == 600);
  }
}

TEST_CASE("manifest consistency and round-trip") {
  testing::TempDir dir("manifest");
  DatasetManifest m;
  m.root_path = dir.path.string();
  m.labeled_ids = {"a", "b"};
  m.unlabeled_ids = {"c"};
  m.test_ids = {"d"};
  m.pseudo_iteration["b"] = 1;
  m.pseudo_root = (dir.path / "work").string();
  m.version = 2;
  m.check_disjoint();
  CHECK(m.label_root("a") == dir.path);
  CHECK(m.label_root("b") == dir.path / "work" / pseudo_root_name(1));
  m.save_versioned();
  CHECK(DatasetManifest::load(dir.path / "manifest.json").to_json() == m.to_json());
  CHECK(std::filesystem::exists(dir.path / "manifest_v2.json"));
  auto bad = m;
  bad.test_ids.push_back("a");
  CHECK_THROWS_AS(bad.check_disjoint(), PoolConsistencyError);
  bad = m;
  bad.pseudo_iteration["c"] = 1;
  CHECK_THROWS_AS(bad.check_disjoint(), PoolConsistencyError);
  CHECK_THROWS_AS(DatasetManifest::load(dir.path / "nope.json"), IoError);
}

TEST_CASE("write_sample and read_sample round-trip") {
  testing::TempDir dir("io");
  const auto h = reference_taxonomy();
  for (std::uint64_t i = 0; i < 50; ++i) {
    Sample s = generate_scene(small_scene(), h, derive_sample_seed(3, i));
    s.sample_id = sample_id_for(i);
    s.labeled = i % 2 == 0;
    s.provenance.pseudo_iteration = static_cast<int>(i % 3);
    write_sample(s, dir.path);
    const Sample r = read_sample(dir.path, s.sample_id);
    CHECK(r.level_maps == s.level_maps);
    CHECK(r.labeled == s.labeled);
    CHECK(r.provenance == s.provenance);
    CHECK(r.size == s.size);
    REQUIRE(r.image.size() == s.image.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < s.image.size(); ++k) worst = std::max(worst, std::abs(r.image[k] - s.image[k]));
    CHECK(worst <= 1.0 / 65535.0);
  }
  CHECK_THROWS_AS(read_sample(dir.path, "missing"), IoError);

  // Flip one byte of a label map: the checksum must catch it.
  const auto png = dir.path / sample_id_for(0) / "level_1.png";
  std::fstream f(png, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(-20, std::ios::end);
  char byte = 0;
  f.read(&byte, 1);
  f.seekp(-20, std::ios::end);
  byte = static_cast<char>(byte ^ 0x5A);
  f.write(&byte, 1);
  f.close();
  CHECK_THROWS_AS(read_sample(dir.path, sample_id_for(0)), CorruptSampleError);
}

TEST_CASE("provenance strings round-trip") {
  for (int k = 0; k < 5; ++k) {
    Provenance p{k};
    CHECK(Provenance::parse(p.to_string()) == p);
  }
  CHECK_THROWS_AS(Provenance::parse("bogus"), CorruptSampleError);
}
