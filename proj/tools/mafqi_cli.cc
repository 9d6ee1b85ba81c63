// Copyright 2026 The MA-FQI Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "commands.h"
#include "config.h"

int main(int argc, char** argv) {
  using namespace mafqi::cli;
  CLI::App app{"Multi-agent fitted Q-iteration experiments"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int jobs = 1;
  for (const char* name : {"gen-game", "solve", "run", "bounds"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "INI experiment config")->required();
    sub->add_option("--seed", seed, "overrides MAFQI_SEED and the config seed");
    sub->add_option("--out", out, "output directory; overrides MAFQI_OUT and the config");
    sub->add_option("--jobs", jobs, "fan out seeds seed..seed+jobs-1 into out/seed_<s>")
        ->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    apply_overrides(cfg, environment_overrides(), Overrides{seed, out});
  } catch (const mafqi::MissingArtifactError& e) {
    std::cerr << "mafqi " << command << ": " << e.what() << "\n";
    return kExitMissingArtifact;
  } catch (const mafqi::ConfigError& e) {
    std::cerr << "mafqi " << command << ": config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return dispatch_jobs(command, cfg, jobs);
}
