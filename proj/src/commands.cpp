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

#include "hcep/commands.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <ostream>

#include "hcep/checkpoint.hpp"
#include "hcep/errors.hpp"
#include "hcep/evolve.hpp"
#include "hcep/kernels.hpp"
#include "hcep/metrics.hpp"
#include "hcep/plot.hpp"
#include "hcep/train.hpp"

namespace hcep {

namespace fs = std::filesystem;

namespace {

class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".hcep.lock") {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      if (errno == EEXIST) throw IoError("another command holds " + path_.string());
      throw IoError("cannot create " + path_.string() + ": " + std::strerror(errno));
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    if (::write(fd_, pid.data(), pid.size()) < 0) {
      // The lock itself is the file; its content is informational.
    }
  }
  ~DirLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

void write_config(const RunConfig& cfg, const fs::path& dir) {
  atomic_write(dir / "config.json", cfg.to_json().dump(2) + "\n");
}

DatasetManifest load_manifest(const RunConfig& cfg) {
  const fs::path p = fs::path(cfg.dataset_root) / "manifest.json";
  if (!fs::exists(p)) throw MissingInputError("no manifest at " + p.string() + " (run gen-data first)");
  return DatasetManifest::load(p);
}

Model load_model(const fs::path& path, const ConceptHierarchy& h) {
  if (!fs::exists(path)) throw MissingInputError("checkpoint not found: " + path.string());
  return load_checkpoint(path, h);
}

}  // namespace

RunConfig resolve_config(const std::string& command, const CommandOptions& opts) {
  RunConfig cfg = opts.config.empty() ? RunConfig{} : RunConfig::load(opts.config);
  if (opts.seed) cfg.set_seed(*opts.seed);
  if (!opts.out.empty()) {
    if (command == "gen-data")
      cfg.dataset_root = opts.out.string();
    else
      cfg.output_dir = opts.out.string();
  }
  cfg.validate();
  return cfg;
}

void cmd_gen_data(const CommandOptions& opts, std::ostream& log) {
  const RunConfig cfg = resolve_config("gen-data", opts);
  const ConceptHierarchy h = cfg.hierarchy();
  const fs::path root(cfg.dataset_root);
  DirLock lock(root);
  write_config(cfg, root);
  h.save(root / "hierarchy.json");
  const std::vector<Sample> samples = generate_scenes(cfg.scene, h, cfg.scene.seed, cfg.num_samples,
                                                      ExecPolicy::parallel);
  std::vector<std::string> ids;
  for (const auto& s : samples) {
    write_sample(s, root);
    ids.push_back(s.sample_id);
  }
  DatasetManifest m = split_pools(ids, cfg.fractions, cfg.split_seed());
  m.root_path = root.string();
  m.hierarchy_spec_path = (root / "hierarchy.json").string();
  m.save_versioned();
  log << "wrote " << samples.size() << " samples to " << root.string() << " (labeled "
      << m.labeled_ids.size() << ", unlabeled " << m.unlabeled_ids.size() << ", test " << m.test_ids.size()
      << ")\n";
}

void cmd_train(const CommandOptions& opts, std::ostream& log) {
  const RunConfig cfg = resolve_config("train", opts);
  const ConceptHierarchy h = cfg.hierarchy();
  const DatasetManifest m = load_manifest(cfg);
  const fs::path out(cfg.output_dir);
  DirLock lock(out);
  write_config(cfg, out);
  Model model = opts.checkpoint.empty() ? Model::create(cfg.net, h) : load_model(opts.checkpoint, h);
  const std::vector<Sample> pool = load_pool(m, m.labeled_ids);
  FitOptions fo;
  fo.checkpoint_path = out / "checkpoint.bin";
  fo.on_epoch = [&](int epoch, const LossReport& r) {
    log << "epoch " << epoch + 1 << "/" << cfg.train.epochs << " loss " << r.total << "\n" << std::flush;
  };
  const TrainLog tl = fit(model, pool, cfg.train, cfg.loss, fo);
  atomic_write(out / "train_log.csv", tl.to_csv());
  save_checkpoint(out / "checkpoint.bin", model, {{"epoch", cfg.train.epochs}});
  log << "checkpoint written to " << (out / "checkpoint.bin").string() << "\n";
}

void cmd_evolve(const CommandOptions& opts, std::ostream& log) {
  const RunConfig cfg = resolve_config("evolve", opts);
  const ConceptHierarchy h = cfg.hierarchy();
  const DatasetManifest m = load_manifest(cfg);
  const fs::path out(cfg.output_dir);
  const fs::path init = opts.checkpoint.empty() ? out / "checkpoint.bin" : opts.checkpoint;
  Model model = load_model(init, h);
  DirLock lock(out);
  write_config(cfg, out);
  const fs::path work = out / "evolve";
  fs::remove_all(work);
  EvolveOptions eo;
  eo.work_dir = work;
  const EvolutionResult r = run_evolution(model, m, cfg.evolve, cfg.train, cfg.loss, eo);
  atomic_write(out / "evolve_report.json", r.report.to_json().dump(2) + "\n");
  atomic_write(out / "evolve_report.csv", r.report.to_csv());
  atomic_write(out / "evolve_log.csv", r.log.to_csv());
  save_checkpoint(out / "checkpoint_evolved.bin", model, {{"evolve_iterations", cfg.evolve.iterations}});
  for (const auto& it : r.report.iterations)
    log << "iteration " << it.iteration << ": selected " << it.selected_count << ", high-confidence share "
        << it.high_conf_fraction << ", held-out child dice " << it.heldout_child_dice << "\n";
}

void cmd_eval(const CommandOptions& opts, std::ostream& log) {
  const RunConfig cfg = resolve_config("eval", opts);
  const ConceptHierarchy h = cfg.hierarchy();
  const DatasetManifest m = load_manifest(cfg);
  const fs::path out(cfg.output_dir);
  const fs::path ckpt = opts.checkpoint.empty() ? out / "checkpoint.bin" : opts.checkpoint;
  const Model model = load_model(ckpt, h);
  DirLock lock(out);
  write_config(cfg, out);
  const std::vector<Sample> test = load_pool(m, m.test_ids);
  const std::vector<Prediction> preds = batch_predict(model, test, ExecPolicy::parallel);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < test.size(); ++i) index[test[i].sample_id] = i;
  const EvalReport rep = evaluate([&](const Sample& s) { return preds[index.at(s.sample_id)]; }, test, h);
  atomic_write(out / "eval_report.json", rep.to_json(h).dump(2) + "\n");
  atomic_write(out / "eval_report.csv", rep.to_csv(h));
  for (std::size_t i = 0; i < test.size(); ++i)
    for (int l = 0; l < h.num_levels(); ++l)
      write_label_map(export_label_map(preds[i].logits[static_cast<std::size_t>(l)], h.level(l), test[i].size),
                      out / "predictions" / test[i].sample_id / ("level_" + std::to_string(l) + ".png"));
  log << "evaluated " << test.size() << " samples:";
  for (std::size_t l = 0; l < rep.level_dice.size(); ++l) log << " level " << l << " dice " << rep.level_dice[l];
  log << ", confidence spearman " << rep.confidence_spearman << "\n";
}

void cmd_plot(const CommandOptions& opts, std::ostream& log) {
  const RunConfig cfg = resolve_config("plot", opts);
  const fs::path dir(cfg.output_dir);
  if (!fs::exists(dir / "evolve_report.json"))
    throw MissingInputError("no evolution report in " + dir.string());
  DirLock lock(dir);
  for (const auto& p : write_figures(dir)) log << "wrote " << p.string() << "\n";
}

int run_command(const std::string& command, const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  try {
    if (command == "gen-data") {
      cmd_gen_data(opts, log);
    } else if (command == "train") {
      cmd_train(opts, log);
    } else if (command == "evolve") {
      cmd_evolve(opts, log);
    } else if (command == "eval") {
      cmd_eval(opts, log);
    } else if (command == "plot") {
      cmd_plot(opts, log);
    } else {
      err << "error: unknown command '" << command << "'\n";
      return kExitConfig;
    }
    return kExitOk;
  } catch (const MissingInputError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitMissingInput;
  } catch (const IoError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitIo;
  } catch (const ConfigError& ex) {
    err << "config error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const HierarchyError& ex) {
    err << "config error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitIo;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace hcep
