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

#include "hcep/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>

#include "hcep/errors.hpp"
#include "png_io.hpp"

namespace hcep {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Random shape rasterised into `mask` (1 = inside), evaluated at pixel centres.
void draw_shape(Rng& rng, int size, std::vector<std::uint8_t>& mask) {
  std::fill(mask.begin(), mask.end(), 0);
  const double s = size;
  const double cx = uniform(rng, 0.15 * s, 0.85 * s);
  const double cy = uniform(rng, 0.15 * s, 0.85 * s);
  if (uniform_int(rng, 0, 2) < 2) {
    const int blobs = uniform_int(rng, 1, 2);
    for (int b = 0; b < blobs; ++b) {
      const double a = uniform(rng, s / 10.0, s / 4.0);
      const double c = uniform(rng, s / 10.0, s / 4.0);
      const double th = uniform(rng, 0.0, std::numbers::pi);
      const double ox = b == 0 ? 0.0 : uniform(rng, -a, a);
      const double oy = b == 0 ? 0.0 : uniform(rng, -c, c);
      const double ct = std::cos(th), st = std::sin(th);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          const double dx = x + 0.5 - (cx + ox), dy = y + 0.5 - (cy + oy);
          const double u = (ct * dx + st * dy) / a, v = (-st * dx + ct * dy) / c;
          if (u * u + v * v <= 1.0) mask[static_cast<std::size_t>(y) * size + x] = 1;
        }
    }
    return;
  }
  const int n = uniform_int(rng, 5, 8);
  std::vector<double> px(n), py(n);
  for (int k = 0; k < n; ++k) {
    const double ang = (k + uniform(rng, -0.3, 0.3)) * 2.0 * std::numbers::pi / n;
    const double r = uniform(rng, s / 8.0, s / 3.5);
    px[k] = cx + r * std::cos(ang);
    py[k] = cy + r * std::sin(ang);
  }
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double qx = x + 0.5, qy = y + 0.5;
      bool inside = false;
      for (int i = 0, j = n - 1; i < n; j = i++) {
        if ((py[i] > qy) != (py[j] > qy) &&
            qx < (px[j] - px[i]) * (qy - py[i]) / (py[j] - py[i]) + px[i])
          inside = !inside;
      }
      if (inside) mask[static_cast<std::size_t>(y) * size + x] = 1;
    }
}

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
  const double i = std::floor(h * 6.0);
  const double f = h * 6.0 - i;
  const double p = v * (1 - s), q = v * (1 - f * s), t = v * (1 - (1 - f) * s);
  switch (static_cast<int>(i) % 6) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

double quantize16(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return std::round(v * 65535.0) / 65535.0;
}

// Picks `[lo, hi]` items (clamped to availability) from `pool` in random order.
std::vector<int> pick(Rng& rng, const std::vector<int>& pool, IntRange r) {
  const int avail = static_cast<int>(pool.size());
  const int lo = std::min(r.lo, avail);
  const int hi = std::min(r.hi, avail);
  const int k = uniform_int(rng, lo, hi);
  std::vector<int> v = pool;
  for (int i = 0; i < k; ++i) std::swap(v[i], v[uniform_int(rng, i, avail - 1)]);
  v.resize(k);
  return v;
}

}  // namespace

void SceneConfig::validate() const {
  if (image_size < 16) throw ConfigError("image_size must be >= 16");
  if (parent_count_range.lo < 1 || parent_count_range.lo > parent_count_range.hi)
    throw ConfigError("parent_count_range must be a non-empty interval of positive counts");
  if (children_per_parent_range.lo < 1 ||
      children_per_parent_range.lo > children_per_parent_range.hi)
    throw ConfigError("children_per_parent_range must be a non-empty interval of positive counts");
  if (!(texture_noise_sigma >= 0.0) || !std::isfinite(texture_noise_sigma))
    throw ConfigError("texture_noise_sigma must be finite and >= 0");
}

nlohmann::json SceneConfig::to_json() const {
  return {{"image_size", image_size},
          {"parent_count_range", {parent_count_range.lo, parent_count_range.hi}},
          {"children_per_parent_range", {children_per_parent_range.lo, children_per_parent_range.hi}},
          {"texture_noise_sigma", texture_noise_sigma},
          {"seed", seed}};
}

SceneConfig SceneConfig::from_json(const nlohmann::json& j) {
  SceneConfig c;
  try {
    c.image_size = j.value("image_size", c.image_size);
    if (j.contains("parent_count_range")) {
      c.parent_count_range = {j["parent_count_range"].at(0).get<int>(),
                              j["parent_count_range"].at(1).get<int>()};
    }
    if (j.contains("children_per_parent_range")) {
      c.children_per_parent_range = {j["children_per_parent_range"].at(0).get<int>(),
                                     j["children_per_parent_range"].at(1).get<int>()};
    }
    c.texture_noise_sigma = j.value("texture_noise_sigma", c.texture_noise_sigma);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("bad scene config: ") + ex.what());
  }
  c.validate();
  return c;
}

std::string Provenance::to_string() const {
  return is_pseudo() ? "pseudo_iter_" + std::to_string(pseudo_iteration) : "synthetic_gt";
}

Provenance Provenance::parse(const std::string& s) {
  if (s == "synthetic_gt") return {};
  const std::string prefix = "pseudo_iter_";
  if (s.rfind(prefix, 0) == 0) {
    try {
      const int k = std::stoi(s.substr(prefix.size()));
      if (k >= 1) return {k};
    } catch (const std::exception&) {
    }
  }
  throw CorruptSampleError("unknown provenance '" + s + "'");
}

std::uint64_t derive_sample_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(master_seed ^ splitmix64(index));
}

std::uint64_t image_hash(const Sample& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : s.image) {
    const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
    h = (h ^ (q & 0xFF)) * 1099511628211ULL;
    h = (h ^ (q >> 8)) * 1099511628211ULL;
  }
  return h;
}

std::string sample_id_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%06zu", index);
  return buf;
}

std::array<double, 3> concept_color(const ConceptHierarchy& h, int node_id) {
  const auto& nodes = h.nodes();
  const auto it = std::find_if(nodes.begin(), nodes.end(),
                               [&](const ConceptNode& n) { return n.id == node_id; });
  if (it == nodes.end()) throw UnknownNodeError("unknown node id " + std::to_string(node_id));
  const double k = static_cast<double>(it - nodes.begin());
  const double hue = std::fmod(0.05 + k * 0.6180339887498949, 1.0);
  const double sat = 0.55 + 0.3 * std::fmod(k * 0.37, 1.0);
  return hsv_to_rgb(hue, sat, 0.9);
}

Sample generate_scene(const SceneConfig& cfg, const ConceptHierarchy& h, std::uint64_t sample_seed) {
  cfg.validate();
  if (h.depth() < 1) throw ConfigError("scene generation needs a hierarchy with child levels");
  const auto& roots = h.level(0);
  if (cfg.parent_count_range.lo > static_cast<int>(roots.size()))
    throw ConfigError("parent_count_range.lo exceeds the number of root concepts");

  const int size = cfg.image_size;
  const std::size_t npix = static_cast<std::size_t>(size) * size;
  const std::size_t min_pixels = std::max<std::size_t>(4, npix / 200);
  Rng rng(sample_seed);

  std::vector<std::uint16_t> leaf_map(npix);
  std::vector<std::uint8_t> shape(npix);
  bool placed = false;
  for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
    std::vector<int> leaves;
    std::vector<int> frontier = pick(rng, roots, cfg.parent_count_range);
    while (!frontier.empty()) {
      std::vector<int> next;
      for (int id : frontier) {
        const auto& kids = h.children(id);
        if (kids.empty()) {
          leaves.push_back(id);
        } else {
          auto chosen = pick(rng, kids, cfg.children_per_parent_range);
          next.insert(next.end(), chosen.begin(), chosen.end());
        }
      }
      frontier = std::move(next);
    }
    // Deterministic draw order, last drawn wins.
    for (std::size_t i = leaves.size(); i > 1; --i)
      std::swap(leaves[i - 1], leaves[uniform_int(rng, 0, static_cast<int>(i) - 1)]);
    std::fill(leaf_map.begin(), leaf_map.end(), 0);
    for (int id : leaves) {
      draw_shape(rng, size, shape);
      for (std::size_t p = 0; p < npix; ++p)
        if (shape[p]) leaf_map[p] = static_cast<std::uint16_t>(id);
    }
    placed = true;
    for (int id : leaves) {
      const auto n = static_cast<std::size_t>(std::count(leaf_map.begin(), leaf_map.end(), id));
      if (n < min_pixels) {
        placed = false;
        break;
      }
    }
  }
  if (!placed)
    throw ConfigError("could not place all regions visibly at image_size " + std::to_string(size));

  Sample s;
  s.size = size;
  s.labeled = true;
  s.level_maps.resize(static_cast<std::size_t>(h.num_levels()));
  for (int l = 0; l < h.num_levels(); ++l) {
    auto& m = s.level_maps[l];
    m.size = size;
    m.ids.assign(npix, 0);
    for (std::size_t p = 0; p < npix; ++p) {
      const int id = leaf_map[p];
      if (id == kBackgroundId || h.node(id).level < l) continue;
      m.ids[p] = static_cast<std::uint16_t>(h.ancestor_at(id, l));
    }
  }

  // Shading: smooth background gradient, per-scene gain, shared Gaussian noise.
  const std::array<double, 3> bg = {0.32, 0.12, 0.10};
  const double gain = uniform(rng, 0.9, 1.1);
  const double gx = uniform(rng, -0.15, 0.15), gy = uniform(rng, -0.15, 0.15);
  std::normal_distribution<double> noise(0.0, 1.0);
  s.image.resize(npix * 3);
  std::map<int, std::array<double, 3>> palette;
  for (std::size_t p = 0; p < npix; ++p) {
    const int id = leaf_map[p];
    const double y = static_cast<double>(p / size) / size - 0.5;
    const double x = static_cast<double>(p % size) / size - 0.5;
    std::array<double, 3> base = bg;
    double shade = 1.0 + gx * x + gy * y;
    if (id != kBackgroundId) {
      auto it = palette.find(id);
      if (it == palette.end()) it = palette.emplace(id, concept_color(h, id)).first;
      base = it->second;
      shade = 1.0;
    }
    for (int c = 0; c < 3; ++c) {
      const double v = gain * shade * base[c] + cfg.texture_noise_sigma * noise(rng);
      s.image[p * 3 + c] = quantize16(v);
    }
  }
  return s;
}

std::size_t count_consistency_violations(const Sample& s, const ConceptHierarchy& h) {
  std::size_t bad = 0;
  const std::size_t npix = static_cast<std::size_t>(s.size) * s.size;
  for (int l = 1; l < static_cast<int>(s.level_maps.size()); ++l) {
    const auto& child = s.level_maps[l].ids;
    const auto& parent = s.level_maps[l - 1].ids;
    for (std::size_t p = 0; p < npix; ++p) {
      const int c = child[p], q = parent[p];
      bool ok = true;
      if (c != kBackgroundId) ok = h.parent(c) && *h.parent(c) == q;
      if (ok && q != kBackgroundId && !h.is_leaf(q)) ok = c != kBackgroundId;
      if (!ok) ++bad;
    }
  }
  return bad;
}

std::vector<std::uint8_t> node_mask(const Sample& s, const ConceptHierarchy& h, int node_id) {
  const int l = h.node(node_id).level;
  const auto& ids = s.level_maps.at(l).ids;
  std::vector<std::uint8_t> m(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) m[i] = ids[i] == node_id ? 1 : 0;
  return m;
}

void write_sample(const Sample& s, const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  const fs::path dir = root / s.sample_id;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  png::Image16 img{s.size, s.size, 3, {}};
  img.data.resize(s.image.size());
  for (std::size_t i = 0; i < s.image.size(); ++i)
    img.data[i] = static_cast<std::uint16_t>(std::lround(std::clamp(s.image[i], 0.0, 1.0) * 65535.0));
  png::write16(dir / "image.png", img);

  nlohmann::json checksums;
  checksums["image.png"] = png::file_crc32(dir / "image.png");
  for (std::size_t l = 0; l < s.level_maps.size(); ++l) {
    const std::string name = "level_" + std::to_string(l) + ".png";
    png::write16(dir / name, {s.size, s.size, 1, s.level_maps[l].ids});
    checksums[name] = png::file_crc32(dir / name);
  }
  nlohmann::json meta = {{"sample_id", s.sample_id},
                         {"size", s.size},
                         {"levels", s.level_maps.size()},
                         {"labeled", s.labeled},
                         {"provenance", s.provenance.to_string()},
                         {"checksums", checksums}};
  std::ofstream out(dir / "meta.json");
  if (!out) throw IoError("cannot write " + (dir / "meta.json").string());
  out << meta.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + (dir / "meta.json").string());
}

void write_label_map(const LabelMap& m, const std::filesystem::path& path) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  png::write16(path, {m.size, m.size, 1, m.ids});
}

Sample read_sample(const std::filesystem::path& root, const std::string& id) {
  namespace fs = std::filesystem;
  const fs::path dir = root / id;
  std::ifstream in(dir / "meta.json");
  if (!in) throw IoError("sample '" + id + "' not found under " + root.string());
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& ex) {
    throw CorruptSampleError("meta.json of '" + id + "' is unreadable: " + ex.what());
  }

  Sample s;
  try {
    s.sample_id = meta.at("sample_id").get<std::string>();
    s.size = meta.at("size").get<int>();
    s.labeled = meta.at("labeled").get<bool>();
    s.provenance = Provenance::parse(meta.at("provenance").get<std::string>());
    const auto levels = meta.at("levels").get<std::size_t>();
    const auto& sums = meta.at("checksums");
    auto verify = [&](const std::string& name) {
      if (!fs::exists(dir / name)) throw IoError("missing " + (dir / name).string());
      if (png::file_crc32(dir / name) != sums.at(name).get<std::uint32_t>())
        throw CorruptSampleError("checksum mismatch for " + (dir / name).string());
    };
    verify("image.png");
    const auto img = png::read16(dir / "image.png");
    if (img.channels != 3 || img.width != s.size || img.height != s.size)
      throw CorruptSampleError("image of '" + id + "' has unexpected shape");
    s.image.resize(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) s.image[i] = img.data[i] / 65535.0;
    for (std::size_t l = 0; l < levels; ++l) {
      const std::string name = "level_" + std::to_string(l) + ".png";
      verify(name);
      const auto m = png::read16(dir / name);
      if (m.channels != 1 || m.width != s.size || m.height != s.size)
        throw CorruptSampleError(name + " of '" + id + "' has unexpected shape");
      s.level_maps.push_back({s.size, m.data});
    }
  } catch (const nlohmann::json::exception& ex) {
    throw CorruptSampleError("meta.json of '" + id + "' is malformed: " + ex.what());
  }
  return s;
}

}  // namespace hcep
