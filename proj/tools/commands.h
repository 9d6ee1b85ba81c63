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

#ifndef MAFQI_TOOLS_COMMANDS_H_
#define MAFQI_TOOLS_COMMANDS_H_

#include <filesystem>
#include <string>

#include "config.h"

namespace mafqi::cli {

// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitMissingArtifact = 3,
  kExitDivergence = 4,
};

// Name of the stage that was running when a command failed.
struct StageTracker {
  std::string stage = "setup";
};

// Every command writes under cfg.out and finishes by refreshing
// manifest.json there.
void cmd_gen_game(const ExperimentConfig& cfg, StageTracker& stage);
void cmd_solve(const ExperimentConfig& cfg, StageTracker& stage);
void cmd_run(const ExperimentConfig& cfg, StageTracker& stage);
void cmd_bounds(const ExperimentConfig& cfg, StageTracker& stage);

// Runs `command` and maps exceptions onto exit codes, reporting the failing
// stage on stderr.
int dispatch(const std::string& command, const ExperimentConfig& cfg);
// `jobs` seeds cfg.seed .. cfg.seed + jobs - 1, each in out/seed_<s>.
// Returns the worst exit code.
int dispatch_jobs(const std::string& command, const ExperimentConfig& cfg, int jobs);

std::string sha256_file(const std::filesystem::path& path);
// manifest.json: every regular file below `dir` (except the manifest) with
// its size and SHA-256, sorted by relative path.
void write_manifest(const std::filesystem::path& dir);

}  // namespace mafqi::cli

#endif  // MAFQI_TOOLS_COMMANDS_H_
