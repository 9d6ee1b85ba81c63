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

#ifndef MAFQI_FQI_H_
#define MAFQI_FQI_H_

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mafqi/fit.h"
#include "mafqi/game.h"
#include "mafqi/network.h"
#include "mafqi/oracle.h"

namespace mafqi {

// Separable sampling distribution: states uniform on the joint box, agent
// i's action drawn from action_probs[i] (uniform when empty).
struct SigmaSpec {
  std::vector<Eigen::VectorXd> action_probs;

  Eigen::VectorXd probs(const GameSpec& spec, int agent) const;
  // The same distribution on a grid, as per-agent marginals.
  SeparableWeights on_grid(const TabularGame& tg) const;
};

// Transition tuples in columns.
struct Transitions {
  Eigen::MatrixXd states;
  Eigen::MatrixXi actions;
  Eigen::VectorXd rewards;
  Eigen::MatrixXd next;

  Eigen::Index size() const { return rewards.size(); }
};

Transitions sample_sigma(const Game& game, const SigmaSpec& sigma, int n, Rng& rng);

// Y_j = R_j + gamma Q(s'_j, igm_argmax(Q, s'_j)), clamped to +-q_max when
// `clamp` is set.
Eigen::VectorXd compute_targets(const AdditiveCritic& q, const Transitions& batch, double gamma,
                                double q_max, bool clamp = true);

// Per-agent tables on a grid; states are mapped to their grid cell.
class TabularCritic : public AdditiveCritic {
 public:
  TabularCritic(const GameSpec& spec, int resolution, std::vector<Eigen::VectorXd> locals);

  int num_agents() const override { return static_cast<int>(locals_.size()); }
  int state_dim() const override { return state_dim_; }
  Eigen::VectorXd local_values(int agent, const ConstVecRef& s_i) const override;
  const std::vector<Eigen::VectorXd>& locals() const { return locals_; }

 private:
  int state_dim_;
  int resolution_;
  int local_nodes_;
  std::vector<int> actions_;
  std::vector<Eigen::VectorXd> locals_;
};

// Q_tot at every grid node and joint action.
QTable critic_on_grid(const AdditiveCritic& q, const TabularGame& tg);

struct FitStep {
  std::unique_ptr<AdditiveCritic> critic;
  double train_loss = 0.0;
};

// Regression step of the algorithm: produces the next critic from the
// previous one and the regression targets.
class CriticFitter {
 public:
  virtual ~CriticFitter() = default;
  // An additive critic that is identically zero.
  virtual std::unique_ptr<AdditiveCritic> initial(const GameSpec& spec, Rng& rng) = 0;
  virtual FitStep fit(const AdditiveCritic& previous, const Transitions& batch,
                      const Eigen::VectorXd& targets, std::uint64_t seed) = 0;
};

// Per-agent two-layer networks trained by fit_least_squares.
class NetworkFitter : public CriticFitter {
 public:
  NetworkFitter(int width, FitConfig fit, bool warm_start = true, double step_decay = 0.0)
      : width_(width), fit_(fit), warm_start_(warm_start), step_decay_(step_decay) {}

  std::unique_ptr<AdditiveCritic> initial(const GameSpec& spec, Rng& rng) override;
  FitStep fit(const AdditiveCritic& previous, const Transitions& batch,
              const Eigen::VectorXd& targets, std::uint64_t seed) override;

 private:
  int width_;
  FitConfig fit_;
  bool warm_start_;
  double step_decay_;
  int calls_ = 0;
  GameSpec spec_;
};

// Test hook: ignores the samples and returns Proj(T Q_prev) computed
// exactly on the grid, so the iterates are those of projected value
// iteration (plain value iteration on decomposable games).
class ExactTabularFitter : public CriticFitter {
 public:
  explicit ExactTabularFitter(const TabularGame& tg) : tg_(tg) {}

  std::unique_ptr<AdditiveCritic> initial(const GameSpec& spec, Rng& rng) override;
  FitStep fit(const AdditiveCritic& previous, const Transitions& batch,
              const Eigen::VectorXd& targets, std::uint64_t seed) override;

 private:
  const TabularGame& tg_;
};

struct FqiConfig {
  int iterations = 10;
  int samples = 1024;
  int width = 64;
  SigmaSpec sigma;
  FitConfig fit;
  std::uint64_t seed = 0;
  bool target_clamp = true;
  bool warm_start = true;
  // Outer schedule: iteration k trains with fit.step_size * k^(-step_decay).
  double step_decay = 0.0;
  // Wall-clock times make reports non-reproducible, so they are opt-in.
  bool record_wall_time = false;

  void validate() const;
};

struct IterationRecord {
  int k = 0;
  double train_loss = 0.0;
  // ||Q_k - T Q_{k-1}||_sigma.
  double eps_k = 0.0;
  // ||Q_k - Proj(T Q_{k-1})||_inf on the grid (NaN without an oracle).
  double eps_proj_sup = std::numeric_limits<double>::quiet_NaN();
  // ||Q* - Q_k||_inf on the grid.
  double sup_err = std::numeric_limits<double>::quiet_NaN();
  // ||Q* - Q^{pi_k}||_{1,mu} with mu uniform on the grid, and its sup-norm
  // counterpart.
  double l1_mu_err = std::numeric_limits<double>::quiet_NaN();
  double policy_sup_err = std::numeric_limits<double>::quiet_NaN();
  double path_norm_max = 0.0;
  double wall_seconds = 0.0;
};

struct ConvergenceReport {
  // "grid" when eps_k is a grid quadrature, "heldout" for a fresh sigma
  // sample.
  std::string eps_estimator;
  std::vector<IterationRecord> rows;

  double eps_max() const;
  double eps_proj_max() const;
  // Frozen columns: k,train_loss,eps_k,sup_err,l1_mu_err,path_norm_max,wall_seconds.
  std::string to_csv() const;
  void write_csv(const std::string& path) const;
  // k,eps_estimator,eps_proj_sup,policy_sup_err.
  std::string diagnostics_csv() const;
};

// Product of the per-agent greedy rules s_i -> argmax_a Q_i(s_i, a).
class GreedyJointPolicy {
 public:
  explicit GreedyJointPolicy(std::shared_ptr<const AdditiveCritic> critic)
      : critic_(std::move(critic)) {}

  std::vector<int> operator()(const ConstVecRef& s) const { return critic_->igm_argmax(s); }
  // Joint action index at every grid node.
  TabularPolicy on_grid(const TabularGame& tg) const;

 private:
  std::shared_ptr<const AdditiveCritic> critic_;
};

struct MafqiResult {
  std::shared_ptr<const AdditiveCritic> critic;
  GreedyJointPolicy policy{nullptr};
  ConvergenceReport report;
};

// Called with k = 0..K and the critic Q_k.
using IterationObserver = std::function<void(int, const AdditiveCritic&)>;

// Algorithm loop. With `oracle` (and `qstar`) the report carries grid
// quadrature errors; otherwise eps_k is estimated on held-out samples.
MafqiResult run_mafqi(const Game& game, const FqiConfig& cfg, CriticFitter& fitter,
                      const TabularGame* oracle = nullptr, const QTable* qstar = nullptr,
                      const IterationObserver& observer = {});
MafqiResult run_mafqi(const Game& game, const FqiConfig& cfg, const TabularGame* oracle = nullptr,
                      const QTable* qstar = nullptr, const IterationObserver& observer = {});

// Shape of the path-norm budget 8 N c2 R_max / (1 - 4 N^2 gamma); infinite
// when 4 N^2 gamma >= 1. c2 is not specified and must be supplied.
double default_path_norm_budget(int num_agents, double r_max, double gamma, double c2);

}  // namespace mafqi

#endif  // MAFQI_FQI_H_
