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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "commands.h"
#include "config.h"
#include "json.hpp"

namespace mafqi::cli {
namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("mafqi_cli_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string expect_config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  ADD_FAILURE() << "no ConfigError for:\n" << text;
  return "";
}

const char* kTiny =
    "schema_version = 1\nseed = 3\n"
    "[game]\nkind = decomposable\nagents = 2\nactions = 2\ngamma = 0.9\n"
    "[oracle]\nresolution = 8\n"
    "[fqi]\niterations = 2\nsamples = 128\nwidth = 8\nepochs = 3\n"
    "[analysis]\nbounds = policy_gap, cumulative_recursion, error_propagation\n";

TEST(ConfigTest, ParsesSectionsAndDefaults) {
  const ExperimentConfig cfg = parse_config(kTiny);
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.game.kind, GameKind::kDecomposable);
  EXPECT_EQ(cfg.game.spec().actions_per_agent, (std::vector<int>{2, 2}));
  EXPECT_EQ(cfg.oracle.resolution, 8);
  EXPECT_EQ(cfg.fqi.iterations, 2);
  EXPECT_EQ(cfg.fqi.fit.epochs, 3);
  EXPECT_EQ(cfg.analysis.bounds.size(), 3u);
  EXPECT_EQ(cfg.out, "out");
}

TEST(ConfigTest, ErrorsNameTheField) {
  EXPECT_NE(expect_config_error("schema_version = 1\n[fqi]\nepocs = 3\n").find("fqi.epocs"),
            std::string::npos);
  EXPECT_NE(expect_config_error("schema_version = 1\n[fqi]\nsamples = many\n").find("fqi.samples"),
            std::string::npos);
  EXPECT_NE(expect_config_error("schema_version = 1\n[gmae]\nkind = generic\n").find("gmae"),
            std::string::npos);
  EXPECT_NE(expect_config_error("seed = 1\n").find("schema_version"), std::string::npos);
  EXPECT_NE(expect_config_error("schema_version = 2\n").find("schema_version"), std::string::npos);
  EXPECT_NE(expect_config_error("schema_version = 1\n[analysis]\nbounds = nope\n")
                .find("analysis.bounds"),
            std::string::npos);
  EXPECT_NE(expect_config_error("schema_version = 1\n[game]\ngamma = 1.5\n").find("gamma"),
            std::string::npos);
  EXPECT_NE(expect_config_error("schema_version = 1\n[game]\nkind = chess\n").find("game.kind"),
            std::string::npos);
}

TEST(ConfigTest, OverridePrecedence) {
  ExperimentConfig cfg = parse_config(kTiny);
  apply_overrides(cfg, Overrides{7, "env"}, Overrides{});
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.out, "env");
  apply_overrides(cfg, Overrides{7, "env"}, Overrides{9, "flag"});
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.out, "flag");

  ::setenv("MAFQI_SEED", "42", 1);
  ::setenv("MAFQI_OUT", "/tmp/x", 1);
  const Overrides env = environment_overrides();
  EXPECT_EQ(env.seed, 42u);
  EXPECT_EQ(env.out, "/tmp/x");
  ::setenv("MAFQI_SEED", "forty", 1);
  EXPECT_THROW(environment_overrides(), ConfigError);
  ::unsetenv("MAFQI_SEED");
  ::unsetenv("MAFQI_OUT");
}

TEST(ManifestTest, KnownDigest) {
  TempDir dir;
  std::ofstream(dir.path() / "abc.txt") << "abc";
  EXPECT_EQ(sha256_file(dir.path() / "abc.txt"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  fs::create_directories(dir.path() / "sub");
  std::ofstream(dir.path() / "sub" / "b.txt") << "";
  write_manifest(dir.path());
  const nlohmann::json doc = nlohmann::json::parse(read_file(dir.path() / "manifest.json"));
  ASSERT_EQ(doc["files"].size(), 2u);
  EXPECT_EQ(doc["files"][0]["path"], "abc.txt");
  EXPECT_EQ(doc["files"][1]["path"], "sub/b.txt");
  EXPECT_EQ(doc["files"][1]["sha256"],
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(CommandTest, RunIsReproducible) {
  TempDir dir;
  ExperimentConfig cfg = parse_config(kTiny);
  cfg.out = (dir.path() / "a").string();
  ASSERT_EQ(dispatch("run", cfg), kExitOk);
  cfg.out = (dir.path() / "b").string();
  ASSERT_EQ(dispatch("run", cfg), kExitOk);
  for (const char* f : {"convergence.csv", "diagnostics.csv", "bounds.jsonl", "critic.ckpt",
                        "manifest.json"}) {
    EXPECT_EQ(read_file(dir.path() / "a" / f), read_file(dir.path() / "b" / f)) << f;
  }
  const std::string csv = read_file(dir.path() / "a" / "convergence.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "k,train_loss,eps_k,sup_err,l1_mu_err,path_norm_max,wall_seconds");
}

TEST(CommandTest, ZeroIterationsWritesHeaderOnly) {
  TempDir dir;
  ExperimentConfig cfg = parse_config(kTiny);
  cfg.fqi.iterations = 0;
  cfg.out = dir.path().string();
  ASSERT_EQ(dispatch("run", cfg), kExitOk);
  EXPECT_EQ(read_file(dir.path() / "convergence.csv"),
            "k,train_loss,eps_k,sup_err,l1_mu_err,path_norm_max,wall_seconds\n");
}

TEST(CommandTest, GenGameIsByteIdenticalAndRecordsProvenance) {
  TempDir dir;
  ExperimentConfig cfg = parse_config(kTiny);
  cfg.out = (dir.path() / "a").string();
  ASSERT_EQ(dispatch("gen-game", cfg), kExitOk);
  cfg.out = (dir.path() / "b").string();
  ASSERT_EQ(dispatch("gen-game", cfg), kExitOk);
  const std::string a = read_file(dir.path() / "a" / "game.json");
  EXPECT_EQ(a, read_file(dir.path() / "b" / "game.json"));
  const nlohmann::json doc = nlohmann::json::parse(a);
  EXPECT_EQ(doc["decomposition"], true);
  EXPECT_EQ(doc["provenance"]["seed"], 3);

  cfg.game.kind = GameKind::kReverseEngineered;
  cfg.game.gamma = 0.05;
  cfg.out = (dir.path() / "re").string();
  ASSERT_EQ(dispatch("gen-game", cfg), kExitOk);
  const nlohmann::json re = nlohmann::json::parse(read_file(dir.path() / "re" / "game.json"));
  EXPECT_EQ(re["spec"]["kind"], "reverse_engineered");
  EXPECT_LT(re["provenance"]["audit"]["bellman_residual_sup"].get<double>(), 1e-3);

  // The saved game drives a later run.
  cfg = parse_config(kTiny);
  cfg.game.file = (dir.path() / "a" / "game.json").string();
  cfg.out = (dir.path() / "from_file").string();
  EXPECT_EQ(dispatch("solve", cfg), kExitOk);
  EXPECT_TRUE(fs::exists(dir.path() / "from_file" / "qstar.bin"));
}

TEST(CommandTest, ExitCodes) {
  TempDir dir;
  ExperimentConfig cfg = parse_config(kTiny);
  cfg.out = (dir.path() / "bounds").string();
  EXPECT_EQ(dispatch("bounds", cfg), kExitMissingArtifact);
  cfg.game.file = (dir.path() / "missing.json").string();
  EXPECT_EQ(dispatch("run", cfg), kExitMissingArtifact);

  cfg = parse_config(kTiny);
  cfg.out = (dir.path() / "solve").string();
  cfg.oracle.resolution = 0;
  EXPECT_EQ(dispatch("solve", cfg), kExitConfig);
  EXPECT_EQ(dispatch("teleport", cfg), kExitConfig);

  cfg = parse_config(kTiny);
  cfg.out = (dir.path() / "diverge").string();
  cfg.fqi.fit.step_size = 1e150;
  cfg.fqi.fit.path_norm_budget = 1e300;
  cfg.fqi.fit.penalty = 0.0;
  EXPECT_EQ(dispatch("run", cfg), kExitDivergence);
}

TEST(CommandTest, BoundsSummary) {
  TempDir dir;
  ExperimentConfig cfg = parse_config(kTiny);
  cfg.out = dir.path().string();
  ASSERT_EQ(dispatch("run", cfg), kExitOk);
  cfg.analysis.bounds.push_back("rademacher");
  cfg.analysis.rademacher_draws = 100;
  cfg.analysis.rademacher_candidates = 20;
  ASSERT_EQ(dispatch("bounds", cfg), kExitOk);
  std::istringstream csv(read_file(dir.path() / "bounds_summary.csv"));
  std::string line;
  std::getline(csv, line);
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("policy_gap,3,3,0,0,1,", 0), 0u) << line;

  cfg.analysis.bounds.clear();
  ASSERT_EQ(dispatch("bounds", cfg), kExitOk);
  EXPECT_EQ(read_file(dir.path() / "bounds_summary.csv"),
            "name,checks,holds,violated,not_applicable,hold_rate,worst_margin\n");
}

TEST(CommandTest, JobsUseSeedSubdirectories) {
  TempDir dir;
  ExperimentConfig cfg = parse_config(kTiny);
  cfg.out = dir.path().string();
  ASSERT_EQ(dispatch_jobs("gen-game", cfg, 2), kExitOk);
  EXPECT_TRUE(fs::exists(dir.path() / "seed_3" / "game.json"));
  EXPECT_TRUE(fs::exists(dir.path() / "seed_4" / "game.json"));
  EXPECT_NE(read_file(dir.path() / "seed_3" / "game.json"),
            read_file(dir.path() / "seed_4" / "game.json"));
  EXPECT_TRUE(fs::exists(dir.path() / "manifest.json"));
}

}  // namespace
}  // namespace mafqi::cli
