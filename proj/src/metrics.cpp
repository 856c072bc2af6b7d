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

#include "hcep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "hcep/errors.hpp"

namespace hcep {

double dice_score(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt) {
  if (pred.size() != gt.size()) throw ShapeMismatchError("dice_score: masks differ in size");
  std::size_t a = 0, b = 0, both = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool x = pred[i] != 0, y = gt[i] != 0;
    a += x;
    b += y;
    both += x && y;
  }
  if (a + b == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
}

Mask boundary_pixels(std::span<const std::uint8_t> mask, int height, int width) {
  if (mask.size() != static_cast<std::size_t>(height) * width)
    throw ShapeMismatchError("boundary_pixels: mask size mismatch");
  Mask out(mask.size(), 0);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      if (!mask[static_cast<std::size_t>(y) * width + x]) continue;
      bool edge = false;
      for (int dy = -1; dy <= 1 && !edge; ++dy)
        for (int dx = -1; dx <= 1 && !edge; ++dx) {
          const int yy = y + dy, xx = x + dx;
          edge = yy < 0 || yy >= height || xx < 0 || xx >= width ||
                 !mask[static_cast<std::size_t>(yy) * width + xx];
        }
      if (edge) out[static_cast<std::size_t>(y) * width + x] = 1;
    }
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform of a sampled function (lower envelope of parabolas).
void edt_1d(const double* f, int n, std::ptrdiff_t stride, double* out, std::vector<int>& v,
            std::vector<double>& z) {
  v.assign(static_cast<std::size_t>(n), 0);
  z.assign(static_cast<std::size_t>(n) + 1, 0.0);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    const double fq = f[q * stride];
    if (fq == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s;
    while (true) {
      const int p = v[static_cast<std::size_t>(k)];
      s = ((fq + q * static_cast<double>(q)) - (f[p * stride] + p * static_cast<double>(p))) /
          (2.0 * (q - p));
      if (s <= z[static_cast<std::size_t>(k)] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[static_cast<std::size_t>(k)]) {
      // Only reachable for k == 0: the new parabola dominates everywhere.
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = kInf;
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) out[q * stride] = kInf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(j) + 1] < q) ++j;
    const int p = v[static_cast<std::size_t>(j)];
    out[q * stride] = (q - p) * static_cast<double>(q - p) + f[p * stride];
  }
}

}  // namespace

std::vector<double> squared_distance_transform(std::span<const std::uint8_t> sites, int height,
                                               int width) {
  if (sites.size() != static_cast<std::size_t>(height) * width)
    throw ShapeMismatchError("distance transform: mask size mismatch");
  std::vector<double> f(sites.size()), tmp(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) f[i] = sites[i] ? 0.0 : kInf;
  std::vector<int> v;
  std::vector<double> z;
  for (int x = 0; x < width; ++x) edt_1d(f.data() + x, height, width, tmp.data() + x, v, z);
  for (int y = 0; y < height; ++y)
    edt_1d(tmp.data() + static_cast<std::ptrdiff_t>(y) * width, width, 1,
           f.data() + static_cast<std::ptrdiff_t>(y) * width, v, z);
  return f;
}

double hausdorff_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                          int height, int width, double spacing) {
  if (a.size() != b.size() || a.size() != static_cast<std::size_t>(height) * width)
    throw ShapeMismatchError("hausdorff_distance: masks differ in size");
  const Mask ea = boundary_pixels(a, height, width);
  const Mask eb = boundary_pixels(b, height, width);
  const bool empty_a = std::none_of(ea.begin(), ea.end(), [](auto v) { return v != 0; });
  const bool empty_b = std::none_of(eb.begin(), eb.end(), [](auto v) { return v != 0; });
  if (empty_a && empty_b) return 0.0;
  if (empty_a || empty_b) return std::hypot(height, width) * spacing;
  const auto da = squared_distance_transform(ea, height, width);
  const auto db = squared_distance_transform(eb, height, width);
  double worst = 0.0;
  for (std::size_t i = 0; i < ea.size(); ++i) {
    if (ea[i]) worst = std::max(worst, db[i]);
    if (eb[i]) worst = std::max(worst, da[i]);
  }
  return std::sqrt(worst) * spacing;
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeMismatchError("spearman: series differ in length");
  if (x.size() < 2) return 0.0;
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double parent_violation_mass(const Prediction& p, const ConceptHierarchy& h) {
  double mass = 0.0;
  for (int l = 0; l + 1 < h.num_levels(); ++l) {
    const ad::Matrix pp = p.probs(l), cp = p.probs(l + 1);
    const auto& parents = h.level(l);
    for (std::size_t i = 0; i < parents.size(); ++i) {
      const auto& kids = h.children(parents[i]);
      if (kids.empty()) continue;
      for (ad::Index x = 0; x < pp.cols(); ++x) {
        double m = 0.0;
        for (int c : kids) m = std::max(m, cp(h.slot(c), x));
        mass += std::max(0.0, pp(static_cast<ad::Index>(i), x) - m);
      }
    }
  }
  return mass;
}

std::string node_column(const ConceptHierarchy& h, int node_id) {
  const int l = h.node(node_id).level;
  const int k = h.slot(node_id) + 1;
  if (l == 0) return "P" + std::to_string(k);
  if (l == 1) return "C" + std::to_string(k);
  return "L" + std::to_string(l) + "_" + std::to_string(k);
}

nlohmann::json EvalReport::to_json(const ConceptHierarchy& h) const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [id, d] : dice) {
    nodes.push_back({{"id", id},
                     {"name", h.node(id).name},
                     {"column", node_column(h, id)},
                     {"level", h.node(id).level},
                     {"dice", d},
                     {"hd", hd.at(id)},
                     {"count", count.at(id)}});
  }
  return {{"samples", samples},
          {"nodes", nodes},
          {"level_dice", level_dice},
          {"level_hd", level_hd},
          {"confidence_spearman", confidence_spearman},
          {"mean_confidence", mean_confidence},
          {"parent_violation_mass", parent_violation_mass}};
}

std::string EvalReport::to_csv(const ConceptHierarchy& h) const {
  std::ostringstream out;
  out.precision(17);
  out << "metric";
  for (const auto& n : h.nodes()) out << "," << node_column(h, n.id);
  out << "\n";
  for (const auto* table : {&dice, &hd}) {
    out << (table == &dice ? "dice" : "hd");
    for (const auto& n : h.nodes()) {
      out << ",";
      auto it = table->find(n.id);
      if (it != table->end()) out << it->second;
    }
    out << "\n";
  }
  return out.str();
}

namespace {

struct SampleScores {
  std::map<int, double> dice, hd;
  std::vector<double> conf, true_dice;
  double violation = 0.0;
};

}  // namespace

EvalReport evaluate(const Predictor& predict, std::span<const Sample> samples,
                    const ConceptHierarchy& h, ExecPolicy policy) {
  if (samples.empty()) throw EmptyPoolError("evaluation pool is empty");
  std::vector<SampleScores> scores(samples.size());
  for_each_index(samples.size(), policy, [&](std::size_t i) {
    const Sample& s = samples[i];
    const Prediction p = predict(s);
    SampleScores& sc = scores[i];
    for (int l = 0; l < h.num_levels(); ++l) {
      const auto& ids = h.level(l);
      const LabelMap exported = export_label_map(p.logits.at(static_cast<std::size_t>(l)), ids, s.size);
      for (std::size_t k = 0; k < ids.size(); ++k) {
        const Mask gt = node_mask(s, h, ids[k]);
        Mask pred(gt.size());
        for (std::size_t q = 0; q < gt.size(); ++q) pred[q] = exported.ids[q] == ids[k];
        if (std::any_of(gt.begin(), gt.end(), [](auto v) { return v != 0; })) {
          sc.dice[ids[k]] = dice_score(pred, gt);
          sc.hd[ids[k]] = hausdorff_distance(pred, gt, s.size, s.size);
        }
        sc.conf.push_back(p.confidence.at(static_cast<std::size_t>(l))(static_cast<Eigen::Index>(k)));
        sc.true_dice.push_back(dice_score(p.binary(l, static_cast<int>(k)), gt));
      }
    }
    sc.violation = parent_violation_mass(p, h);
  });

  EvalReport r;
  r.samples = samples.size();
  std::vector<double> conf, truth;
  for (const auto& sc : scores) {
    for (const auto& [id, d] : sc.dice) {
      r.dice[id] += d;
      r.hd[id] += sc.hd.at(id);
      r.count[id] += 1;
    }
    conf.insert(conf.end(), sc.conf.begin(), sc.conf.end());
    truth.insert(truth.end(), sc.true_dice.begin(), sc.true_dice.end());
    r.parent_violation_mass += sc.violation;
  }
  r.parent_violation_mass /= static_cast<double>(samples.size());
  for (auto& [id, d] : r.dice) {
    d /= r.count[id];
    r.hd[id] /= r.count[id];
  }
  for (int l = 0; l < h.num_levels(); ++l) {
    double ds = 0.0, hs = 0.0;
    int n = 0;
    for (int id : h.level(l)) {
      auto it = r.dice.find(id);
      if (it == r.dice.end()) continue;
      ds += it->second;
      hs += r.hd.at(id);
      ++n;
    }
    r.level_dice.push_back(n ? ds / n : 0.0);
    r.level_hd.push_back(n ? hs / n : 0.0);
  }
  r.confidence_spearman = spearman(conf, truth);
  r.mean_confidence =
      conf.empty() ? 0.0 : std::accumulate(conf.begin(), conf.end(), 0.0) / static_cast<double>(conf.size());
  return r;
}

nlohmann::json QualityReport::to_json(const ConceptHierarchy& h) const {
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& [id, d] : per_category)
    cats.push_back({{"id", id}, {"name", h.node(id).name}, {"dice", d}, {"sampled", sampled_ids.at(id)}});
  return {{"overall", overall}, {"categories", cats}};
}

QualityReport sample_quality_report(std::span<const PseudoLabelRecord> records,
                                    std::span<const Sample> ground_truth, const ConceptHierarchy& h,
                                    int n_per_category, std::uint64_t seed) {
  if (n_per_category < 1) throw ConfigError("n_per_category must be >= 1");
  std::map<std::string, const PseudoLabelRecord*> by_id;
  for (const auto& r : records) by_id[r.sample_id] = &r;
  std::map<std::string, const Sample*> gt_by_id;
  for (const auto& s : ground_truth) gt_by_id[s.sample_id] = &s;

  QualityReport q;
  double total = 0.0;
  std::size_t instances = 0;
  for (const auto& node : h.nodes()) {
    std::vector<std::string> candidates;
    for (const auto& [id, s] : gt_by_id) {
      if (!by_id.count(id)) continue;
      const auto& ids = s->level_maps.at(static_cast<std::size_t>(node.level)).ids;
      if (std::find(ids.begin(), ids.end(), node.id) != ids.end()) candidates.push_back(id);
    }
    if (static_cast<int>(candidates.size()) < n_per_category)
      throw InsufficientSamplesError("concept '" + node.name + "' has only " +
                                     std::to_string(candidates.size()) + " instances");
    std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(node.id)));
    for (int i = 0; i < n_per_category; ++i) {
      std::uniform_int_distribution<std::size_t> d(static_cast<std::size_t>(i), candidates.size() - 1);
      std::swap(candidates[static_cast<std::size_t>(i)], candidates[d(rng)]);
    }
    candidates.resize(static_cast<std::size_t>(n_per_category));
    double sum = 0.0;
    for (const auto& id : candidates) {
      const PseudoLabelRecord& r = *by_id.at(id);
      const Mask gt = node_mask(*gt_by_id.at(id), h, node.id);
      const double d = dice_score(
          r.masks.at(static_cast<std::size_t>(node.level)).at(static_cast<std::size_t>(h.slot(node.id))), gt);
      sum += d;
      total += d;
      ++instances;
    }
    q.per_category[node.id] = sum / n_per_category;
    q.sampled_ids[node.id] = std::move(candidates);
  }
  q.overall = instances ? total / static_cast<double>(instances) : 0.0;
  return q;
}

}  // namespace hcep
