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

// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "json.hpp"
#include "mafqi/analysis.h"
#include "mafqi/barron.h"
#include "mafqi/experiments.h"
#include "mafqi/mc_projection.h"
#include "mafqi/oracle.h"

namespace fs = std::filesystem;
using namespace mafqi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return buf;
}

double sup(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

QTable random_table(const TabularGame& tg, double scale, Rng& rng) {
  std::uniform_real_distribution<double> unit(-scale, scale);
  QTable q(tg.num_nodes(), tg.num_actions());
  for (Eigen::Index k = 0; k < q.size(); ++k) q.data()[k] = unit(rng);
  return q;
}

SeparableWeights random_weights(const TabularGame& tg, Rng& rng) {
  SeparableWeights w;
  for (int i = 0; i < tg.spec().num_agents; ++i) {
    Eigen::VectorXd m(tg.local_size(i));
    for (Eigen::Index k = 0; k < m.size(); ++k) m[k] = 0.1 + uniform01(rng);
    w.marginals.push_back(m / m.sum());
  }
  return w;
}

Game table_game(GameSpec spec, const Eigen::VectorXd& table) {
  CoupledReward reward;
  reward.table = table;
  const int dim = spec.joint_state_dim();
  return make_generic_game(reward, {}, MixtureKernel::uniform(dim, dim, spec.num_joint_actions()),
                           spec);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
  }
  return sxy / sxx;
}

// Policy-gap reports from criteria 7 and 8.
std::vector<BoundReport> g_policy_gaps;

Outcome decomposability_forward() {
  double worst = 0.0;
  for (std::uint64_t g = 0; g < 5; ++g) {
    Rng rng = derive_stream(g, 1, 0);
    const TabularGame tg = discretize(
        random_decomposable_game(small_spec(2, 1, 0.9, GameKind::kDecomposable), rng), 16);
    for (int t = 0; t < 50; ++t) {
      const ProjectionResult r =
          tq_decomposability_residual(random_table(tg, tg.q_max(), rng), tg);
      worst = std::max({worst, r.residual_l2, r.residual_sup});
    }
  }
  return {worst <= 1e-8, fmt("worst residual %.3e over 250 tables (limit 1e-8)", worst)};
}

Outcome decomposability_witness() {
  GameSpec spec = small_spec(2, 1, 0.5, GameKind::kGeneric);
  Eigen::VectorXd table(4);
  table << 1.0, 0.0, 0.0, 1.0;
  const TabularGame tg = discretize(table_game(spec, table), 1);
  const ProjectionResult r = tq_decomposability_residual(QTable::Zero(1, 4), tg);
  const double sq = r.residual_l2 * r.residual_l2;
  return {std::abs(sq - 0.25) <= 1e-10, fmt("residual^2 = %.15f (target 0.25 +- 1e-10)", sq)};
}

Outcome projection_correctness() {
  Rng rng = derive_stream(0, 3, 0);
  const TabularGame tg = discretize(
      random_decomposable_game(small_spec(2, 1, 0.5, GameKind::kDecomposable), rng), 32);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const QTable q = random_table(tg, tg.q_max(), rng);
    const SeparableWeights w = t % 2 == 0 ? SeparableWeights::uniform(tg) : random_weights(tg, rng);
    worst = std::max(worst, sup(exact_decomposable_projection(q, tg, w).projected -
                                lstsq_decomposable_projection(q, tg, w)));
  }
  // Monte-Carlo projection of x1 x2: the projection is x1/2 + x2/2 - 1/4.
  GameSpec spec = small_spec(2, 1, 0.5, GameKind::kGeneric);
  spec.actions_per_agent = {1, 1};
  auto product = [](const ConstVecRef& s, std::span<const int>) { return s[0] * s[1]; };
  std::vector<double> ns, errs;
  for (int n : {100, 400, 1600, 6400}) {
    double total = 0.0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      McProjectionConfig cfg;
      cfg.samples_per_marginal = n;
      cfg.seed = mix_seed(seed ^ 3);
      const McProjection p(product, spec, {}, cfg);
      for (double x : {0.25, 0.75}) {
        for (double y : {0.25, 0.75}) {
          const std::vector<int> a = {0, 0};
          const double e = p(Eigen::Vector2d(x, y), a) - (x / 2 + y / 2 - 0.25);
          total += e * e;
          ++count;
        }
      }
    }
    ns.push_back(n);
    errs.push_back(std::sqrt(total / count));
  }
  const double slope = loglog_slope(ns, errs);
  const bool ok = worst <= 1e-8 && std::abs(slope + 0.5) <= 0.15;
  return {ok, fmt("closed form vs normal equations %.3e (limit 1e-8); MC slope %.3f "
                  "(target -0.5 +- 0.15)",
                  worst, slope)};
}

Outcome projection_lipschitz() {
  int violations = 0;
  double worst_ratio = 0.0;
  for (int n : {2, 3}) {
    Rng rng = derive_stream(n, 4, 0);
    GameSpec spec = small_spec(n, 1, 0.5, GameKind::kDecomposable);
    const TabularGame tg = discretize(random_decomposable_game(spec, rng), 4);
    for (int t = 0; t < 100; ++t) {
      const QTable q1 = random_table(tg, 2.0, rng);
      const QTable q2 = random_table(tg, 2.0, rng);
      const SeparableWeights w = random_weights(tg, rng);
      const double lhs = sup(exact_decomposable_projection(q1, tg, w).projected -
                             exact_decomposable_projection(q2, tg, w).projected);
      const double d = sup(q1 - q2);
      worst_ratio = std::max(worst_ratio, lhs / d / (2 * n - 1));
      if (lhs > (2 * n - 1) * d + 1e-12) ++violations;
    }
  }
  return {violations == 0,
          fmt("%d violations over 200 pairs; worst ratio to (2N-1) %.3f", violations, worst_ratio)};
}

Outcome contraction_and_dominance() {
  std::vector<TabularGame> games;
  {
    Rng rng = derive_stream(0, 5, 0);
    games.push_back(discretize(
        random_decomposable_game(small_spec(2, 1, 0.9, GameKind::kDecomposable), rng), 8));
    GameSpec mixed = small_spec(2, 1, 0.8, GameKind::kDecomposable);
    mixed.actions_per_agent = {2, 3};
    games.push_back(discretize(random_decomposable_game(mixed, rng), 6));
    games.push_back(discretize(
        random_reverse_engineered_game(small_spec(2, 1, 0.05, GameKind::kReverseEngineered), 8,
                                       rng),
        8));
  }
  int contraction = 0, dominance = 0;
  Rng rng = derive_stream(0, 5, 1);
  for (const TabularGame& tg : games) {
    for (int t = 0; t < 100; ++t) {
      const QTable q1 = random_table(tg, tg.q_max(), rng);
      const QTable q2 = random_table(tg, tg.q_max(), rng);
      if (sup(bellman_apply(q1, tg) - bellman_apply(q2, tg)) > tg.gamma() * sup(q1 - q2) + 1e-12) {
        ++contraction;
      }
    }
    std::uniform_int_distribution<int> pick(0, tg.num_actions() - 1);
    for (int t = 0; t < 50; ++t) {
      const QTable q = random_table(tg, tg.q_max(), rng);
      TabularPolicy pi(tg.num_nodes());
      for (int& a : pi) a = pick(rng);
      const Eigen::MatrixXd gap = tg.expect(q.rowwise().maxCoeff()) - tg.expect(policy_values(q, pi));
      if (gap.minCoeff() < -1e-12) ++dominance;
    }
  }
  return {contraction == 0 && dominance == 0,
          fmt("contraction violations %d/300, dominance violations %d/150", contraction,
              dominance)};
}

Outcome exact_fit_reduction() {
  const double gamma = 0.9;
  Rng rng = derive_stream(0, 6, 0);
  const Game game =
      random_decomposable_game(small_spec(2, 1, gamma, GameKind::kDecomposable), rng);
  const TabularGame tg = discretize(game, 16);
  const QTable qstar = value_iteration(tg, 1e-13);
  ExactTabularFitter fitter(tg);
  FqiConfig cfg;
  cfg.iterations = 40;
  cfg.samples = 1;
  std::vector<QTable> iterates;
  const MafqiResult r = run_mafqi(game, cfg, fitter, &tg, &qstar,
                                  [&](int, const AdditiveCritic& q) {
                                    iterates.push_back(critic_on_grid(q, tg));
                                  });
  double worst = 0.0;
  QTable vi = QTable::Zero(tg.num_nodes(), tg.num_actions());
  for (int k = 0; k <= 20; ++k) {
    worst = std::max(worst, sup(iterates[k] - vi));
    vi = bellman_apply(vi, tg);
  }
  std::vector<double> errs;
  for (const IterationRecord& row : r.report.rows) errs.push_back(row.sup_err);
  const LogDecayFit fit = fit_log_decay(errs, 1);  // k = 2..K
  const double rel = std::abs(fit.slope - std::log(gamma)) / std::abs(std::log(gamma));
  return {worst <= 1e-8 && rel <= 0.1,
          fmt("max |Q_k - T^k 0| %.3e for k<=20 (limit 1e-8); slope %.5f vs log gamma %.5f "
              "(rel %.3f, limit 0.1), R^2 %.4f",
              worst, fit.slope, std::log(gamma), rel, fit.r_squared)};
}

Outcome decomposable_convergence() {
  int good = 0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Game game = decomposable_game(seed);
    const DecomposableSetup setup = decomposable_setup(seed);
    const TabularGame tg = discretize(game, setup.resolution);
    OracleRun run = run_with_oracle(game, tg, setup.fqi, 1e-10);
    const double ratio = run.result.report.rows.back().policy_sup_err / game.spec().q_max();
    if (ratio <= 0.1) ++good;
    per_seed += fmt(" %.4f", ratio);
    for (BoundReport& b : run.policy_gaps) g_policy_gaps.push_back(std::move(b));
  }
  return {good >= 4, fmt("%d/5 seeds with ||Q*-Q^pi_K||/q_max <= 0.1 (need 4); ratios:%s", good,
                         per_seed.c_str())};
}

Outcome nondecomposable_convergence() {
  int holds = 0;
  std::string notes;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Game game = nondecomposable_game(seed);
    const NonDecomposableSetup setup = nondecomposable_setup(seed);
    const TabularGame tg = discretize(game, setup.resolution);
    OracleRun run = run_with_oracle(game, tg, setup.fqi, 1e-12);
    const ConvergenceReport& rep = run.result.report;
    const std::vector<int> breaks = monotonicity_breaks(rep, 3, 0.05);
    const BoundReport rec = check_cumulative_recursion(rep, game.spec().gamma,
                                                       game.spec().num_agents, game.spec().r_max);
    const bool ok = breaks.empty() && rec.holds;
    if (ok) ++holds;
    std::string b;
    for (int k : breaks) {
      const double ratio = rep.rows[k - 1].sup_err / rep.rows[k - 2].sup_err;
      b += fmt(" k=%d(x%.3f)", k, ratio);
    }
    notes += fmt(" [s%d sup %.4f rhs %.4f%s]", static_cast<int>(seed), rec.lhs, rec.rhs,
                 b.empty() ? "" : (" breaks" + b).c_str());
    for (BoundReport& r : run.policy_gaps) g_policy_gaps.push_back(std::move(r));
  }
  return {holds == 10, fmt("hold rate %d/10 (need 10);", holds) + notes};
}

Outcome policy_gap_everywhere() {
  int violated = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const BoundReport& r : g_policy_gaps) {
    if (!r.holds) ++violated;
    worst = std::min(worst, r.margin);
  }
  return {!g_policy_gaps.empty() && violated == 0,
          fmt("%d violations over %zu iterates; worst margin %.4e", violated,
              g_policy_gaps.size(), worst)};
}

Outcome barron_construction() {
  FrequencyMixture f;
  f.dim = 1;
  f.constant = -1.0;
  f.terms.push_back(CosineTerm{1.0, Eigen::VectorXd::Constant(1, 1.0), 0.0});
  const double gamma = spectral_norm_gamma(f);
  bool ok = std::abs(gamma - 1.0) < 1e-15;
  std::string detail = fmt("gamma(f) = %.3f;", gamma);
  int norm_violations = 0;
  for (int m : {16, 64, 256}) {
    int good = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng rng = derive_stream(seed, 10, m);
      const BarronApproximation b = barron_monte_carlo_net(f, m, rng);
      double mse = 0.0;
      const int points = 1024;
      for (int k = 0; k < points; ++k) {
        const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, -1.0 + 2.0 * (k + 0.5) / points);
        const double e = f(x) - b(x);
        mse += e * e / points;
      }
      if (mse <= 16.0 * gamma * gamma / m) ++good;
      if (b.sampled_path_norm() > 4.0 * gamma + 1e-12) ++norm_violations;
    }
    ok = ok && good >= 45;
    detail += fmt(" m=%d: %d/50 within 16/m;", m, good);
  }
  ok = ok && norm_violations == 0;
  detail += fmt(" path-norm violations %d/150", norm_violations);
  return {ok, detail};
}

Outcome rademacher() {
  Rng data_rng = derive_stream(0, 11, 0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::MatrixXd x(3, 256);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = unit(data_rng);
  RademacherConfig cfg;  // Q = 4, 500 candidates, 1000 draws
  Rng rng = derive_stream(0, 11, 1);
  RademacherEstimate est;
  const BoundReport r = empirical_rademacher(x, cfg, rng, &est);
  return {r.holds, fmt("estimate %.4f +- %.4f <= bound %.4f", est.estimate, est.ci_half_width,
                       r.rhs)};
}

Outcome generalization() {
  TeacherStudentConfig ts;
  ts.train = 512;
  int holds = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const BoundReport r = teacher_student_bound(ts, mix_seed(seed ^ 12), 0.1);
    if (r.holds) ++holds;
    worst = std::min(worst, r.margin);
  }
  return {holds >= 90, fmt("holds in %d/100 seeds (need 90); worst margin %.4f", holds, worst)};
}

Outcome l2_linf() {
  const int res = 8192;
  const double x0 = (4096 + 0.5) / res, h = 0.5, slope = 2.0;
  Eigen::VectorXd tent(res);
  for (int j = 0; j < res; ++j) {
    tent[j] = std::max(0.0, h - slope * std::abs((j + 0.5) / res - x0));
  }
  const BoundReport eq = lipschitz_l2_linf_check(tent, res, 1, slope);
  const double exact = 2.0 * h * h * h / (3.0 * slope);
  const double eq_err = std::max(std::abs(eq.rhs - exact), std::abs(eq.lhs - exact));
  int violations = 0;
  Rng rng = derive_stream(0, 13, 0);
  for (int t = 0; t < 50; ++t) {
    const int dim = t < 25 ? 1 : 2;
    const int grid = dim == 1 ? 2048 : 256;
    const TentMixture f = random_interior_tents(dim, rng);
    const BoundReport r = lipschitz_l2_linf_check(f.on_grid(grid), grid, dim, f.lipschitz());
    if (r.verdict != Verdict::kHolds) ++violations;
  }
  return {eq_err <= 1e-6 && eq.holds && violations == 0,
          fmt("tent |quadrature - 2h^3/(3L)| %.3e (limit 1e-6); %d/50 mixtures not holding",
              eq_err, violations)};
}

int sh(const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); }

Outcome determinism() {
  const fs::path root =
      fs::temp_directory_path() / ("mafqi_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(root);
  const fs::path config = root / "tiny.ini";
  std::ofstream(config) << "schema_version = 1\nseed = 5\n"
                           "[game]\nkind = decomposable\nagents = 2\nactions = 2\ngamma = 0.9\n"
                           "[oracle]\nresolution = 16\n"
                           "[fqi]\niterations = 3\nsamples = 256\nwidth = 16\nepochs = 5\n"
                           "[analysis]\nbounds = policy_gap, cumulative_recursion, "
                           "error_propagation, rademacher, generalization, l2_linf\n"
                           "rademacher_draws = 200\nrademacher_candidates = 50\n"
                           "generalization_seeds = 2\nl2_linf_cases = 4\n";
  auto invoke_all = [&](const fs::path& out) {
    int code = 0;
    for (const char* cmd : {"gen-game", "solve", "run", "bounds"}) {
      code |= sh(std::string(MAFQI_CLI_PATH) + " " + cmd + " --config " + config.string() +
                 " --out " + out.string());
    }
    code |= sh(std::string(MAFQI_CLI_PATH) + " run --jobs 2 --config " + config.string() +
               " --out " + (out / "jobs").string());
    return code;
  };
  const int code_a = invoke_all(root / "a");
  const int code_b = invoke_all(root / "b");
  auto manifest = [](const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    return in ? nlohmann::json::parse(in) : nlohmann::json();
  };
  const nlohmann::json ma = manifest(root / "a"), mb = manifest(root / "b");
  const std::size_t files = ma.is_null() ? 0 : ma["files"].size();
  const bool ok = code_a == 0 && code_b == 0 && !ma.is_null() && ma == mb && files >= 10;
  fs::remove_all(root);
  return {ok, fmt("exit codes %d/%d; %zu hashed files, manifests %s", code_a, code_b, files,
                  ma == mb ? "identical" : "differ")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "decomposable games: T Q is additive", 30, decomposability_forward},
      {2, "XNOR witness residual", 1, decomposability_witness},
      {3, "projection correctness and MC rate", 60, projection_correctness},
      {4, "projection Lipschitz (2N-1)", 10, projection_lipschitz},
      {5, "contraction and greedy dominance", 10, contraction_and_dominance},
      {6, "exact-fit reduction to value iteration", 30, exact_fit_reduction},
      {7, "decomposable convergence", 600, decomposable_convergence},
      {8, "non-decomposable convergence", 600, nondecomposable_convergence},
      {9, "policy-gap lemma on every iterate", 1e9, policy_gap_everywhere},
      {10, "Barron construction", 120, barron_construction},
      {11, "Rademacher bound", 60, rademacher},
      {12, "posterior generalization bound", 300, generalization},
      {13, "Lipschitz L2/Linf lemma", 60, l2_linf},
      {14, "determinism of CLI outputs", 60, determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("[%s] criterion %d: %s: %s (%.1f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.title,
                o.detail.c_str(), secs, in_time ? "" : ", over time limit");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
