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

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"
#include "hcep/commands.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace hcep;
namespace fs = std::filesystem;

namespace {

nlohmann::json tiny_config(const fs::path& root) {
  return {{"dataset_root", (root / "data").string()},
          {"output_dir", (root / "run").string()},
          {"num_samples", 12},
          {"fractions", {{"labeled", 0.5}, {"unlabeled", 0.25}, {"test", 0.25}}},
          {"scene", {{"image_size", 16}, {"seed", 5}}},
          {"net", {{"image_size", 16}, {"embed_dim", 16}, {"encoder_blocks", 1}, {"heads", 2}}},
          {"train", {{"epochs", 1}, {"batch_size", 3}}},
          {"evolve", {{"iterations", 2}, {"epochs_per_iteration", 1}}}};
}

fs::path write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream(p) << j.dump(2);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Relative path -> contents for every regular file under `dir`.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return out;
}

int run(const std::string& cmd, const fs::path& config, const fs::path& out = {}) {
  CommandOptions o;
  o.config = config;
  o.out = out;
  std::ostringstream log, err;
  return run_command(cmd, o, log, err);
}

int shell(const std::string& args) {
  const std::string line = std::string(HCEP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(line.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("gen-data writes every sample and reproduces byte-identical output") {
  testing::TempDir dir("cli_gen");
  const auto cfg = write_json(dir.path / "cfg.json", tiny_config(dir.path));
  REQUIRE(run("gen-data", cfg) == kExitOk);
  int samples = 0;
  for (const auto& e : fs::directory_iterator(dir.path / "data")) samples += e.is_directory();
  CHECK(samples == 12);
  CHECK(fs::exists(dir.path / "data" / "manifest.json"));
  CHECK(fs::exists(dir.path / "data" / "config.json"));
  const auto first = tree(dir.path / "data");
  fs::remove_all(dir.path / "data");
  REQUIRE(run("gen-data", cfg) == kExitOk);
  CHECK(tree(dir.path / "data") == first);
}

TEST_CASE("train, evolve, eval and plot produce their artifacts") {
  testing::TempDir dir("cli_flow");
  const auto cfg = write_json(dir.path / "cfg.json", tiny_config(dir.path));
  REQUIRE(run("gen-data", cfg) == kExitOk);
  REQUIRE(run("train", cfg) == kExitOk);
  const fs::path run_dir = dir.path / "run";
  CHECK(fs::exists(run_dir / "checkpoint.bin"));
  CHECK(fs::exists(run_dir / "train_log.csv"));
  CHECK(nlohmann::json::parse(slurp(run_dir / "config.json")) == RunConfig::load(cfg).to_json());
  REQUIRE(run("evolve", cfg) == kExitOk);
  CHECK(fs::exists(run_dir / "checkpoint_evolved.bin"));
  const auto report = nlohmann::json::parse(slurp(run_dir / "evolve_report.json"));
  CHECK(report.at("iterations").size() == 2);
  REQUIRE(run("eval", cfg) == kExitOk);
  CHECK(fs::exists(run_dir / "eval_report.json"));
  CHECK(fs::exists(run_dir / "eval_report.csv"));
  REQUIRE(run("plot", cfg) == kExitOk);
  // One header plus one row per iteration.
  const std::string conf = slurp(run_dir / "figures" / "confidence_evolution.csv");
  CHECK(std::count(conf.begin(), conf.end(), '\n') == 3);
  CHECK(fs::exists(run_dir / "figures" / "category_dice.csv"));
  CHECK(fs::exists(run_dir / "figures" / "hausdorff.svg"));
}

TEST_CASE("train and evolve are byte-identical across repeated runs") {
  testing::TempDir dir("cli_det");
  const auto cfg = write_json(dir.path / "cfg.json", tiny_config(dir.path));
  REQUIRE(run("gen-data", cfg) == kExitOk);
  REQUIRE(run("train", cfg, dir.path / "a") == kExitOk);
  REQUIRE(run("train", cfg, dir.path / "b") == kExitOk);
  CHECK(slurp(dir.path / "a" / "checkpoint.bin") == slurp(dir.path / "b" / "checkpoint.bin"));
  CHECK(slurp(dir.path / "a" / "train_log.csv") == slurp(dir.path / "b" / "train_log.csv"));
  REQUIRE(run("evolve", cfg, dir.path / "a") == kExitOk);
  REQUIRE(run("evolve", cfg, dir.path / "b") == kExitOk);
  CHECK(slurp(dir.path / "a" / "checkpoint_evolved.bin") == slurp(dir.path / "b" / "checkpoint_evolved.bin"));
  CHECK(slurp(dir.path / "a" / "evolve_report.json") == slurp(dir.path / "b" / "evolve_report.json"));
}

TEST_CASE("exit codes") {
  testing::TempDir dir("cli_exit");
  auto j = tiny_config(dir.path);
  const auto cfg = write_json(dir.path / "cfg.json", j);
  j["num_samples"] = 0;
  const auto bad = write_json(dir.path / "bad.json", j);
  std::ofstream(dir.path / "broken.json") << "{ not json";
  fs::create_directories(dir.path / "empty");

  CHECK(run("gen-data", bad) == kExitConfig);
  CHECK(run("gen-data", dir.path / "broken.json") == kExitConfig);
  CHECK(run("gen-data", dir.path / "missing.json") == kExitMissingInput);
  CHECK(run("bogus", cfg) == kExitConfig);
  CHECK(run("train", cfg) == kExitMissingInput);
  CHECK(run("plot", cfg, dir.path / "empty") == kExitMissingInput);

  CHECK(shell("--help") == 0);
  CHECK(shell("gen-data --config " + bad.string()) == kExitConfig);
  CHECK(shell("plot --config " + cfg.string() + " --out " + (dir.path / "empty").string()) == kExitMissingInput);
  CHECK(shell("gen-data --config " + cfg.string()) == kExitOk);
  CHECK(fs::exists(dir.path / "data" / "manifest.json"));
}
