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

#ifndef MAFQI_TOOLS_CONFIG_H_
#define MAFQI_TOOLS_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mafqi/fqi.h"
#include "mafqi/game.h"

namespace mafqi::cli {

inline constexpr int kConfigSchemaVersion = 1;

struct GameSection {
  GameKind kind = GameKind::kDecomposable;
  std::string file;  // existing game JSON; overrides generation
  int agents = 2;
  int state_dim = 1;
  std::vector<int> actions{2, 2};
  double gamma = 0.9;
  double r_max = 1.0;
  int quadrature_resolution = 32;  // reverse_engineered
  double coupling = 0.3;           // generic

  GameSpec spec() const;
};

struct OracleSection {
  int resolution = 32;  // 0 disables the oracle
  double tol = 1e-10;
};

struct AnalysisSection {
  std::vector<std::string> bounds;
  double delta = 0.1;
  double phi = 0.0;  // 0 selects 1 / (1 - gamma)^2
  std::string input;  // run directory read by `bounds`; defaults to out
  int rademacher_draws = 1000;
  int rademacher_candidates = 500;
  int rademacher_samples = 256;
  int rademacher_dim = 3;
  double rademacher_path_norm = 4.0;
  int generalization_seeds = 20;
  int generalization_samples = 512;
  int l2_linf_cases = 20;
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  std::uint64_t seed = 0;
  std::string out = "out";
  GameSection game;
  OracleSection oracle;
  FqiConfig fqi;
  AnalysisSection analysis;
};

// INI text with top-level schema_version, seed, out and sections [game],
// [oracle], [fqi], [analysis]. Unknown keys and bad values raise
// ConfigError naming the key path, e.g. "fqi.epochs".
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Precedence: flag, then environment (MAFQI_SEED, MAFQI_OUT), then file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};
Overrides environment_overrides();
void apply_overrides(ExperimentConfig& cfg, const Overrides& env, const Overrides& flags);

std::vector<std::string> known_bounds();

}  // namespace mafqi::cli

#endif  // MAFQI_TOOLS_CONFIG_H_
