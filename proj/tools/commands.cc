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

#include "commands.h"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include <openssl/evp.h>

#include "mafqi/analysis.h"
#include "mafqi/experiments.h"
#include "mafqi/game_io.h"
#include "mafqi/oracle.h"

namespace fs = std::filesystem;

namespace mafqi::cli {
namespace {

constexpr const char* kManifest = "manifest.json";

bool wants(const ExperimentConfig& cfg, const std::string& bound) {
  const auto& b = cfg.analysis.bounds;
  return std::find(b.begin(), b.end(), bound) != b.end();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw InputError("write failed for " + path.string());
}

Game generate_game(const ExperimentConfig& cfg) {
  const GameSpec spec = cfg.game.spec();
  Rng rng = derive_stream(cfg.seed, 100, 0);
  switch (spec.kind) {
    case GameKind::kDecomposable:
      return random_decomposable_game(spec, rng);
    case GameKind::kReverseEngineered:
      return random_reverse_engineered_game(spec, cfg.game.quadrature_resolution, rng);
    case GameKind::kGeneric:
      break;
  }
  const double coupling = cfg.game.coupling;
  if (!(std::abs(coupling) < spec.r_max)) {
    throw ConfigError("game.coupling: must be smaller than r_max in magnitude");
  }
  CoupledReward reward;
  reward.coupling = coupling;
  for (int i = 0; i < spec.num_agents; ++i) {
    reward.locals.push_back(random_local_function(
        spec.state_dim, spec.actions_per_agent[i],
        (spec.r_max - std::abs(coupling)) / spec.num_agents, rng));
  }
  return make_generic_game(std::move(reward), {}, random_coupled_kernel(spec, rng), spec);
}

Game load_game(const ExperimentConfig& cfg) {
  if (cfg.game.file.empty()) return generate_game(cfg);
  std::ifstream in(cfg.game.file);
  if (!in) throw MissingArtifactError("game file not found: " + cfg.game.file);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("game.file: " + std::string(e.what()));
  }
  return game_from_json(doc);
}

// ||T Q* - Q*||_inf on the oracle grid for the analytic Q* of a
// reverse-engineered game.
double reverse_engineered_audit(const Game& game, int resolution) {
  const TabularGame tg = discretize(game, resolution);
  QTable q(tg.num_nodes(), tg.num_actions());
  for (int a = 0; a < tg.num_actions(); ++a) {
    const std::vector<int> joint = game.spec().decode_action(a);
    for (int node = 0; node < tg.num_nodes(); ++node) {
      q(node, a) = game.qstar(tg.nodes().col(node), joint);
    }
  }
  return (bellman_apply(q, tg) - q).cwiseAbs().maxCoeff();
}

std::vector<BoundReport> standalone_suites(const ExperimentConfig& cfg, StageTracker& stage) {
  const AnalysisSection& a = cfg.analysis;
  std::vector<BoundReport> reports;
  if (wants(cfg, "rademacher")) {
    stage.stage = "rademacher";
    Rng data_rng = derive_stream(cfg.seed, 21, 0);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Eigen::MatrixXd x(a.rademacher_dim, a.rademacher_samples);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = unit(data_rng);
    RademacherConfig rc;
    rc.path_norm = a.rademacher_path_norm;
    rc.candidates = a.rademacher_candidates;
    rc.sign_draws = a.rademacher_draws;
    Rng rng = derive_stream(cfg.seed, 21, 1);
    reports.push_back(empirical_rademacher(x, rc, rng));
  }
  if (wants(cfg, "generalization")) {
    stage.stage = "generalization";
    TeacherStudentConfig ts;
    ts.train = a.generalization_samples;
    for (int j = 0; j < a.generalization_seeds; ++j) {
      reports.push_back(teacher_student_bound(ts, mix_seed(cfg.seed) + j, a.delta));
    }
  }
  if (wants(cfg, "l2_linf")) {
    stage.stage = "l2_linf";
    Rng rng = derive_stream(cfg.seed, 23, 0);
    for (int j = 0; j < a.l2_linf_cases; ++j) {
      const int dim = 1 + j % 2;
      const int res = dim == 1 ? 2048 : 256;
      const TentMixture f = random_interior_tents(dim, rng);
      reports.push_back(lipschitz_l2_linf_check(f.on_grid(res), res, dim, f.lipschitz()));
    }
  }
  return reports;
}

void write_reports(const fs::path& dir, const std::string& stem,
                   const std::vector<BoundReport>& reports) {
  write_jsonl((dir / (stem + ".jsonl")).string(), reports);
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256: digest init failed");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return hex.str();
}

void write_manifest(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), dir);
    if (rel == kManifest) continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  nlohmann::json doc;
  doc["files"] = nlohmann::json::array();
  for (const fs::path& rel : files) {
    doc["files"].push_back({{"path", rel.generic_string()},
                            {"bytes", fs::file_size(dir / rel)},
                            {"sha256", sha256_file(dir / rel)}});
  }
  write_text(dir / kManifest, doc.dump(2) + "\n");
}

void cmd_gen_game(const ExperimentConfig& cfg, StageTracker& stage) {
  stage.stage = "game";
  const Game game = load_game(cfg);
  nlohmann::json doc = game_to_json(game);
  nlohmann::json provenance;
  provenance["seed"] = cfg.seed;
  provenance["schema_version"] = kGameSchemaVersion;
  provenance["config_schema_version"] = cfg.schema_version;
  provenance["checks"] = {{"kernel_validation", "passed"}, {"reward_bound", "passed"}};
  if (game.reward_family() == RewardFamily::kReverseEngineered) {
    stage.stage = "audit";
    const int res = cfg.oracle.resolution > 0 ? cfg.oracle.resolution : 32;
    provenance["audit"] = {{"resolution", res},
                           {"bellman_residual_sup", reverse_engineered_audit(game, res)}};
  }
  doc["provenance"] = provenance;
  stage.stage = "write";
  write_text(fs::path(cfg.out) / "game.json", doc.dump(2) + "\n");
  write_manifest(cfg.out);
}

void cmd_solve(const ExperimentConfig& cfg, StageTracker& stage) {
  if (cfg.oracle.resolution < 1) throw ConfigError("oracle.resolution: solve needs a grid");
  stage.stage = "game";
  const Game game = load_game(cfg);
  stage.stage = "discretize";
  const TabularGame tg = discretize(game, cfg.oracle.resolution);
  stage.stage = "value_iteration";
  SolveStats stats;
  const QTable qstar = value_iteration(tg, cfg.oracle.tol, &stats);
  stage.stage = "write";
  const fs::path out(cfg.out);
  write_qtable_binary((out / "qstar.bin").string(), qstar);
  write_qtable_csv((out / "qstar.csv").string(), qstar);
  nlohmann::json info = {{"resolution", cfg.oracle.resolution},
                         {"tol", cfg.oracle.tol},
                         {"iterations", stats.iterations},
                         {"residual", stats.residual},
                         {"q_max", tg.q_max()},
                         {"renormalization_error", tg.renormalization_error()}};
  write_text(out / "solve.json", info.dump(2) + "\n");
  write_manifest(out);
}

void cmd_run(const ExperimentConfig& cfg, StageTracker& stage) {
  stage.stage = "game";
  const Game game = load_game(cfg);
  const GameSpec& spec = game.spec();
  FqiConfig fqi = cfg.fqi;
  fqi.seed = cfg.seed;

  std::optional<TabularGame> tg;
  QTable qstar;
  if (cfg.oracle.resolution > 0) {
    stage.stage = "oracle";
    tg = discretize(game, cfg.oracle.resolution);
    qstar = value_iteration(*tg, cfg.oracle.tol);
  }

  stage.stage = "mafqi";
  std::vector<BoundReport> reports;
  IterationObserver observe;
  if (tg && wants(cfg, "policy_gap")) {
    observe = [&](int k, const AdditiveCritic& q) {
      BoundReport r = check_policy_gap(qstar, critic_on_grid(q, *tg), *tg);
      r.inputs["k"] = k;
      reports.push_back(std::move(r));
    };
  }
  const MafqiResult result =
      run_mafqi(game, fqi, tg ? &*tg : nullptr, tg ? &qstar : nullptr, observe);

  stage.stage = "analysis";
  if (wants(cfg, "policy_gap") && !tg) {
    reports.push_back(not_applicable("policy_gap", "needs an oracle grid"));
  }
  if (wants(cfg, "cumulative_recursion")) {
    reports.push_back(tg ? check_cumulative_recursion(result.report, spec.gamma,
                                                      spec.num_agents, spec.r_max)
                         : not_applicable("cumulative_recursion", "needs an oracle grid"));
  }
  if (wants(cfg, "error_propagation")) {
    const double phi = cfg.analysis.phi > 0.0 ? cfg.analysis.phi : default_phi(spec.gamma);
    reports.push_back(error_propagation_report(result.report, spec.gamma, spec.r_max, phi));
  }

  stage.stage = "write";
  const fs::path out(cfg.out);
  result.report.write_csv((out / "convergence.csv").string());
  write_text(out / "diagnostics.csv", result.report.diagnostics_csv());
  write_reports(out, "bounds", reports);
  if (const auto* net = dynamic_cast<const DecomposedQ*>(result.critic.get())) {
    save_checkpoint((out / "critic.ckpt").string(), *net);
  }
  write_manifest(out);
}

void cmd_bounds(const ExperimentConfig& cfg, StageTracker& stage) {
  stage.stage = "artifacts";
  std::vector<BoundReport> reports;
  const std::vector<std::string> from_run = {"policy_gap", "cumulative_recursion",
                                             "error_propagation"};
  const bool needs_run = std::any_of(from_run.begin(), from_run.end(),
                                     [&](const std::string& b) { return wants(cfg, b); });
  if (needs_run) {
    const fs::path input = cfg.analysis.input.empty() ? fs::path(cfg.out) : fs::path(cfg.analysis.input);
    const fs::path file = input / "bounds.jsonl";
    if (!fs::exists(file)) throw MissingArtifactError("missing run artifact " + file.string());
    for (BoundReport& r : read_jsonl(file.string())) {
      if (wants(cfg, r.name)) reports.push_back(std::move(r));
    }
  }
  for (BoundReport& r : standalone_suites(cfg, stage)) reports.push_back(std::move(r));
  stage.stage = "write";
  const fs::path out(cfg.out);
  write_reports(out, "bound_suites", reports);
  write_text(out / "bounds_summary.csv", summary_csv(reports));
  write_manifest(out);
}

int dispatch(const std::string& command, const ExperimentConfig& cfg) {
  StageTracker stage;
  auto fail = [&](int code, const std::string& what) {
    std::cerr << "mafqi " << command << ": failed in stage '" << stage.stage << "': " << what
              << "\n";
    return code;
  };
  try {
    fs::create_directories(cfg.out);
    if (command == "gen-game") {
      cmd_gen_game(cfg, stage);
    } else if (command == "solve") {
      cmd_solve(cfg, stage);
    } else if (command == "run") {
      cmd_run(cfg, stage);
    } else if (command == "bounds") {
      cmd_bounds(cfg, stage);
    } else {
      throw ConfigError("unknown command '" + command + "'");
    }
  } catch (const ConfigError& e) {
    return fail(kExitConfig, e.what());
  } catch (const MissingArtifactError& e) {
    return fail(kExitMissingArtifact, e.what());
  } catch (const DivergenceError& e) {
    return fail(kExitDivergence, e.what());
  } catch (const std::exception& e) {
    return fail(kExitFailure, e.what());
  }
  return kExitOk;
}

int dispatch_jobs(const std::string& command, const ExperimentConfig& cfg, int jobs) {
  if (jobs <= 1) return dispatch(command, cfg);
  std::atomic<int> next{0};
  std::atomic<int> worst{kExitOk};
  auto worker = [&] {
    for (int j = next++; j < jobs; j = next++) {
      ExperimentConfig local = cfg;
      local.seed = cfg.seed + static_cast<std::uint64_t>(j);
      local.out = (fs::path(cfg.out) / ("seed_" + std::to_string(local.seed))).string();
      const int code = dispatch(command, local);
      int seen = worst.load();
      while (code > seen && !worst.compare_exchange_weak(seen, code)) {
      }
    }
  };
  const int threads =
      std::clamp(static_cast<int>(std::thread::hardware_concurrency()), 1, jobs);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  try {
    write_manifest(cfg.out);
  } catch (const std::exception& e) {
    std::cerr << "mafqi " << command << ": manifest: " << e.what() << "\n";
    return std::max(worst.load(), static_cast<int>(kExitFailure));
  }
  return worst.load();
}

}  // namespace mafqi::cli
