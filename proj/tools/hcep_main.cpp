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

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hcep/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical concept segmentation with evolving pseudo-labels"};
  app.require_subcommand(1);
  hcep::CommandOptions opts;
  std::uint64_t seed = 0;

  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "JSON run configuration");
    sub->add_option("--seed", seed, "global seed (overrides the config)");
    sub->add_option("--out", opts.out, name == "gen-data" ? "dataset root" : "run directory");
    sub->add_option("--checkpoint", opts.checkpoint, "input checkpoint");
    return sub;
  };
  add("gen-data", "render the synthetic dataset and its pool manifest");
  add("train", "fit the model on the labeled pool");
  add("evolve", "run confidence-driven pseudo-labeling rounds");
  add("eval", "score a checkpoint on the test pool");
  add("plot", "write figure data for a run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : hcep::kExitConfig;
  }
  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) opts.seed = seed;
  return hcep::run_command(sub->get_name(), opts, std::cout, std::cerr);
}
