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

#include "hcep/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "hcep/checkpoint.hpp"
#include "hcep/errors.hpp"
#include "hcep/kernels.hpp"
#include "hcep/metrics.hpp"

namespace hcep {

void EvolveConfig::validate() const {
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (!(select_ratio > 0.0 && select_ratio <= 1.0)) throw ConfigError("select_ratio must be in (0, 1]");
  if (epochs_per_iteration < 0) throw ConfigError("epochs_per_iteration must be >= 0");
  if (!(high_conf_threshold >= 0.0 && high_conf_threshold <= 1.0))
    throw ConfigError("high_conf_threshold must be in [0, 1]");
}

nlohmann::json EvolveConfig::to_json() const {
  return {{"iterations", iterations},
          {"select_ratio", select_ratio},
          {"dedup_enabled", dedup_enabled},
          {"epochs_per_iteration", epochs_per_iteration},
          {"high_conf_threshold", high_conf_threshold}};
}

EvolveConfig EvolveConfig::from_json(const nlohmann::json& j) {
  EvolveConfig c;
  try {
    c.iterations = j.value("iterations", c.iterations);
    c.select_ratio = j.value("select_ratio", c.select_ratio);
    c.dedup_enabled = j.value("dedup_enabled", c.dedup_enabled);
    c.epochs_per_iteration = j.value("epochs_per_iteration", c.epochs_per_iteration);
    c.high_conf_threshold = j.value("high_conf_threshold", c.high_conf_threshold);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed evolve config: ") + ex.what());
  }
  c.validate();
  return c;
}

std::vector<PseudoLabelRecord> generate_pseudo_labels(const Model& model, std::span<const Sample> samples,
                                                      int iteration, ExecPolicy policy) {
  std::vector<PseudoLabelRecord> out(samples.size());
  for_each_index(samples.size(), policy, [&](std::size_t i) {
    out[i] = make_record(model.predict(samples[i].image), samples[i].sample_id, iteration);
  });
  return out;
}

Selection select_top_confidence(std::vector<PseudoLabelRecord> records, double t) {
  if (!(t > 0.0 && t <= 1.0)) throw ConfigError("select ratio must be in (0, 1]");
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) keyed.emplace_back(records[i].record_confidence(), i);
  std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return records[a.second].sample_id < records[b.second].sample_id;
  });
  // Guard against t * n landing a hair above an integer.
  const auto n_sel = static_cast<std::size_t>(std::ceil(t * static_cast<double>(records.size()) - 1e-9));
  Selection s;
  for (std::size_t r = 0; r < keyed.size(); ++r) {
    PseudoLabelRecord& rec = records[keyed[r].second];
    rec.selected = r < n_sel;
    (rec.selected ? s.selected : s.rejected).push_back(std::move(rec));
  }
  return s;
}

PseudoLabelRecord resolve_overlaps(PseudoLabelRecord r) {
  const auto npix = static_cast<std::size_t>(r.size) * r.size;
  for (std::size_t l = 0; l < r.masks.size(); ++l) {
    auto& level = r.masks[l];
    for (std::size_t p = 0; p < npix; ++p) {
      std::size_t best = level.size();
      int claims = 0;
      for (std::size_t k = 0; k < level.size(); ++k) {
        if (!level[k][p]) continue;
        ++claims;
        if (best == level.size() || r.confidence[l][k] > r.confidence[l][best]) best = k;
      }
      if (claims < 2) continue;
      for (std::size_t k = 0; k < level.size(); ++k) level[k][p] = k == best ? 1 : 0;
    }
  }
  return r;
}

DatasetManifest integrate(const DatasetManifest& m, std::span<const PseudoLabelRecord> selected,
                          int iteration) {
  m.check_disjoint();
  if (iteration < 1) throw PoolConsistencyError("pseudo-label iteration must be >= 1");
  std::set<std::string> ids;
  for (const auto& r : selected) {
    if (!ids.insert(r.sample_id).second)
      throw PoolConsistencyError("sample '" + r.sample_id + "' selected twice");
    if (std::find(m.unlabeled_ids.begin(), m.unlabeled_ids.end(), r.sample_id) == m.unlabeled_ids.end())
      throw PoolConsistencyError("selected sample '" + r.sample_id + "' is not in the unlabeled pool");
  }
  DatasetManifest out = m;
  out.unlabeled_ids.clear();
  for (const auto& id : m.unlabeled_ids) {
    if (ids.count(id)) {
      out.labeled_ids.push_back(id);
      out.pseudo_iteration[id] = iteration;
    } else {
      out.unlabeled_ids.push_back(id);
    }
  }
  out.version = m.version + 1;
  out.created_by_iteration = iteration;
  out.check_disjoint();
  return out;
}

Sample pseudo_sample(const Sample& source, const PseudoLabelRecord& r, const ConceptHierarchy& h) {
  if (source.sample_id != r.sample_id || source.size != r.size)
    throw ShapeMismatchError("pseudo-label record does not belong to sample " + source.sample_id);
  Sample s = source;
  s.level_maps = r.label_maps(h);
  s.labeled = true;
  s.provenance.pseudo_iteration = r.iteration;
  return s;
}

std::vector<std::string> duplicate_ids(std::span<const Sample> samples) {
  std::unordered_set<std::uint64_t> seen;
  std::vector<std::string> dups;
  for (const auto& s : samples)
    if (!seen.insert(image_hash(s)).second) dups.push_back(s.sample_id);
  return dups;
}

double pseudo_label_dice(std::span<const PseudoLabelRecord> records, std::span<const Sample> ground_truth,
                         const ConceptHierarchy& h) {
  std::map<std::string, const Sample*> gt;
  for (const auto& s : ground_truth) gt[s.sample_id] = &s;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    const Sample& s = *gt.at(r.sample_id);
    for (std::size_t l = 0; l < r.masks.size(); ++l) {
      const auto& ids = h.level(static_cast<int>(l));
      for (std::size_t k = 0; k < r.masks[l].size(); ++k) {
        sum += dice_score(r.masks[l][k], node_mask(s, h, ids[k]));
        ++n;
      }
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

nlohmann::json IterationReport::to_json() const {
  return {{"iteration", iteration},
          {"selected_count", selected_count},
          {"rejected_count", rejected_count},
          {"mean_conf_selected", mean_conf_selected},
          {"mean_conf_rejected", mean_conf_rejected},
          {"high_conf_fraction", high_conf_fraction},
          {"confidence_histogram", confidence_histogram},
          {"labeled_size", labeled_size},
          {"unlabeled_size", unlabeled_size},
          {"test_size", test_size},
          {"pools_conserved", pools_conserved},
          {"heldout_parent_dice", heldout_parent_dice},
          {"heldout_child_dice", heldout_child_dice},
          {"pseudo_label_dice", pseudo_label_dice},
          {"manifest_version", manifest_version}};
}

nlohmann::json EvolutionReport::to_json() const {
  nlohmann::json its = nlohmann::json::array();
  for (const auto& r : iterations) its.push_back(r.to_json());
  return {{"baseline", baseline.to_json()}, {"iterations", its}};
}

std::string EvolutionReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "iteration,selected_count,rejected_count,mean_conf_selected,mean_conf_rejected,high_conf_fraction,"
         "labeled_size,unlabeled_size,test_size,heldout_parent_dice,heldout_child_dice,pseudo_label_dice\n";
  for (const auto& r : iterations)
    out << r.iteration << ',' << r.selected_count << ',' << r.rejected_count << ',' << r.mean_conf_selected
        << ',' << r.mean_conf_rejected << ',' << r.high_conf_fraction << ',' << r.labeled_size << ','
        << r.unlabeled_size << ',' << r.test_size << ',' << r.heldout_parent_dice << ','
        << r.heldout_child_dice << ',' << r.pseudo_label_dice << '\n';
  return out.str();
}

namespace {

double mean_confidence(std::span<const PseudoLabelRecord> rs) {
  if (rs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rs) s += r.record_confidence();
  return s / static_cast<double>(rs.size());
}

std::multiset<std::string> pool_multiset(const DatasetManifest& m) {
  const auto ids = m.all_ids();
  return {ids.begin(), ids.end()};
}

void score_heldout(IterationReport& r, const Model& model, std::span<const Sample> test, ExecPolicy policy) {
  if (test.empty()) return;
  const EvalReport e = evaluate([&](const Sample& s) { return model.predict(s.image); }, test,
                                model.hierarchy(), policy);
  r.heldout_parent_dice = e.level_dice.at(0);
  r.heldout_child_dice = e.level_dice.size() > 1 ? e.level_dice.at(1) : 0.0;
}

void monitor(IterationReport& r, std::span<const PseudoLabelRecord> records, double threshold) {
  r.confidence_histogram.assign(10, 0.0);
  if (records.empty()) return;
  std::size_t high = 0;
  for (const auto& rec : records) {
    const double c = rec.record_confidence();
    high += c >= threshold;
    const auto bin = std::min<std::size_t>(9, static_cast<std::size_t>(std::max(0.0, c) * 10.0));
    r.confidence_histogram[bin] += 1.0;
  }
  for (double& b : r.confidence_histogram) b /= static_cast<double>(records.size());
  r.high_conf_fraction = static_cast<double>(high) / static_cast<double>(records.size());
}

}  // namespace

EvolutionResult run_evolution(Model& model, const DatasetManifest& manifest, const EvolveConfig& ecfg,
                              const TrainConfig& tcfg, const LossConfig& lcfg,
                              const EvolveOptions& options) {
  ecfg.validate();
  tcfg.validate();
  lcfg.validate();
  manifest.check_disjoint();
  const ConceptHierarchy& h = model.hierarchy();
  const std::filesystem::path work =
      options.work_dir.empty() ? std::filesystem::path(manifest.root_path) : options.work_dir;

  EvolutionResult result;
  result.manifest = manifest;
  if (!options.work_dir.empty()) result.manifest.pseudo_root = options.work_dir.string();
  const auto initial_pools = pool_multiset(manifest);

  const std::vector<Sample> test = load_pool(manifest, manifest.test_ids);
  // The monitoring set is read from the dataset root, so it is the ground truth.
  const std::vector<Sample> monitor_set = load_pool(manifest, manifest.unlabeled_ids);
  std::map<std::string, const Sample*> unlabeled_by_id;
  for (const auto& s : monitor_set) unlabeled_by_id[s.sample_id] = &s;
  std::set<std::string> held_back;
  if (ecfg.dedup_enabled) {
    std::vector<Sample> everything = load_pool(manifest, manifest.labeled_ids);
    everything.insert(everything.end(), test.begin(), test.end());
    everything.insert(everything.end(), monitor_set.begin(), monitor_set.end());
    for (const auto& id : duplicate_ids(everything))
      if (unlabeled_by_id.count(id)) held_back.insert(id);
  }

  IterationReport& base = result.report.baseline;
  base.labeled_size = manifest.labeled_ids.size();
  base.unlabeled_size = manifest.unlabeled_ids.size();
  base.test_size = manifest.test_ids.size();
  base.manifest_version = manifest.version;
  score_heldout(base, model, test, options.policy);

  int step = 0;
  for (int k = 1; k <= ecfg.iterations; ++k) {
    IterationReport rep;
    rep.iteration = k;
    const std::vector<PseudoLabelRecord> monitored = generate_pseudo_labels(model, monitor_set, k, options.policy);
    monitor(rep, monitored, ecfg.high_conf_threshold);

    std::vector<PseudoLabelRecord> candidates;
    std::set<std::string> pending(result.manifest.unlabeled_ids.begin(), result.manifest.unlabeled_ids.end());
    for (const auto& rec : monitored)
      if (pending.count(rec.sample_id) && !held_back.count(rec.sample_id))
        candidates.push_back(resolve_overlaps(rec));

    Selection sel = select_top_confidence(std::move(candidates), ecfg.select_ratio);
    rep.selected_count = sel.selected.size();
    rep.rejected_count = sel.rejected.size() + held_back.size();
    rep.mean_conf_selected = mean_confidence(sel.selected);
    rep.mean_conf_rejected = mean_confidence(sel.rejected);
    rep.pseudo_label_dice = pseudo_label_dice(sel.selected, monitor_set, h);

    const std::filesystem::path pseudo_dir = work / pseudo_root_name(k);
    for (const auto& rec : sel.selected)
      write_sample(pseudo_sample(*unlabeled_by_id.at(rec.sample_id), rec, h), pseudo_dir);
    result.manifest = integrate(result.manifest, sel.selected, k);
    result.manifest.save_versioned(work);

    rep.pools_conserved = pool_multiset(result.manifest) == initial_pools;
    if (!rep.pools_conserved) throw PoolConsistencyError("pools changed size during evolution");
    rep.labeled_size = result.manifest.labeled_ids.size();
    rep.unlabeled_size = result.manifest.unlabeled_ids.size();
    rep.test_size = result.manifest.test_ids.size();
    rep.manifest_version = result.manifest.version;

    TrainConfig round_cfg = tcfg;
    round_cfg.epochs = ecfg.epochs_per_iteration;
    round_cfg.seed = tcfg.seed + static_cast<std::uint64_t>(k);
    const std::vector<Sample> pool = load_pool(result.manifest, result.manifest.labeled_ids);
    FitOptions fo;
    fo.policy = options.policy;
    fo.step_offset = step;
    TrainLog log = fit(model, pool, round_cfg, lcfg, fo);
    step += static_cast<int>(log.rows.size());
    result.log.rows.insert(result.log.rows.end(), log.rows.begin(), log.rows.end());

    score_heldout(rep, model, test, options.policy);
    if (!options.checkpoint_path.empty())
      save_checkpoint(options.checkpoint_path, model, {{"evolve_iteration", k}});
    result.report.iterations.push_back(std::move(rep));
  }
  return result;
}

}  // namespace hcep
