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

#ifndef MAFQI_ORACLE_H_
#define MAFQI_ORACLE_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mafqi/game.h"

namespace mafqi {

// Dense Q-values on a tabular game: one row per grid node, one column per
// joint action.
using QTable = Eigen::MatrixXd;

// Policies are one joint-action index per node.
using TabularPolicy = std::vector<int>;

inline constexpr std::size_t kDefaultMaxEntries = std::size_t{1} << 27;

// Midpoint-grid discretization of a Game. Transition rows are stored densely
// for joint kernels, and per agent (row depends on (s_i, a_i) only) for
// decomposed kernels.
class TabularGame {
 public:
  // Hand-built table game; `transition` rows are indexed a * nodes + node.
  static TabularGame from_tables(GameSpec spec, int resolution, Eigen::MatrixXd rewards,
                                 Eigen::MatrixXd transition);

  const GameSpec& spec() const { return spec_; }
  int resolution() const { return resolution_; }
  int num_nodes() const { return static_cast<int>(nodes_.cols()); }
  int num_actions() const { return spec_.num_joint_actions(); }
  double gamma() const { return spec_.gamma; }
  double r_max() const { return spec_.r_max; }
  double q_max() const { return spec_.q_max(); }

  // Column k holds the joint state of node k.
  const Eigen::MatrixXd& nodes() const { return nodes_; }
  const Eigen::MatrixXd& rewards() const { return rewards_; }

  bool is_structured() const { return structured_; }
  // Midpoint mass of the density before renormalization, worst over rows.
  double renormalization_error() const { return renormalization_error_; }

  // E[v(s') | node, a] for every node and joint action (nodes x actions).
  Eigen::MatrixXd expect(const Eigen::VectorXd& v) const;
  // E[v(s') | node, policy(node)].
  Eigen::VectorXd expect_under(const Eigen::VectorXd& v, std::span<const int> policy) const;

  // Full row-stochastic matrix, row a * nodes + node.
  Eigen::MatrixXd dense_transition() const;
  // Per-agent transition block (structured games only): row a_i * L + l.
  const Eigen::MatrixXd& agent_transition(int agent) const { return agent_transition_[agent]; }

  // Per-agent local coordinates.
  int local_nodes() const { return local_nodes_; }
  int local_size(int agent) const { return local_nodes_ * spec_.actions_per_agent[agent]; }
  // Local index a_i * L + l_i of agent i at (node, joint action).
  int local_index(int agent, int node, int action) const {
    return local_index_[agent](node, action);
  }
  int local_node(int agent, int node) const { return local_node_[agent][node]; }

 private:
  friend TabularGame discretize(const Game& game, int resolution, std::size_t max_entries);
  void build_indices();

  GameSpec spec_;
  int resolution_ = 1;
  int local_nodes_ = 1;
  Eigen::MatrixXd nodes_;
  Eigen::MatrixXd rewards_;
  bool structured_ = false;
  Eigen::MatrixXd transition_;
  std::vector<Eigen::MatrixXd> agent_transition_;
  std::vector<Eigen::MatrixXi> local_index_;
  std::vector<std::vector<int>> local_node_;
  double renormalization_error_ = 0.0;
};

// Throws SizeError when the transition storage would exceed `max_entries`.
TabularGame discretize(const Game& game, int resolution,
                       std::size_t max_entries = kDefaultMaxEntries);

// [TQ](s,a) = R(s,a) + gamma E[max_a' Q(s',a')].
QTable bellman_apply(const QTable& q, const TabularGame& tg);

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;
};

// Returns Q with ||TQ - Q||_inf <= tol, starting from zero.
QTable value_iteration(const TabularGame& tg, double tol, SolveStats* stats = nullptr);
// Q^pi as the fixed point of R + gamma P^pi Q, to `tol` in sup norm.
QTable policy_eval(const TabularGame& tg, std::span<const int> policy, double tol = 1e-10,
                   SolveStats* stats = nullptr);

// Row-wise argmax with ties to the lowest joint-action index.
TabularPolicy greedy_policy(const QTable& q);
// Gathers Q(node, policy(node)).
Eigen::VectorXd policy_values(const QTable& q, std::span<const int> policy);

// Product weights over (node, joint action): marginal i lives on agent i's
// local index a_i * L + l_i and sums to one.
struct SeparableWeights {
  std::vector<Eigen::VectorXd> marginals;

  static SeparableWeights uniform(const TabularGame& tg);
  // Factorizes a joint weight table; throws PreconditionError when it is not
  // a product of per-agent marginals.
  static SeparableWeights from_joint(const Eigen::MatrixXd& joint, const TabularGame& tg,
                                     double tol = 1e-12);
  Eigen::MatrixXd joint(const TabularGame& tg) const;
};

struct ProjectionResult {
  QTable projected;
  // f_i on agent i's local index, and C = E_sigma[q]; projected =
  // sum_i f_i - (N - 1) C.
  std::vector<Eigen::VectorXd> components;
  double constant = 0.0;
  double residual_l2 = 0.0;   // sigma-weighted
  double residual_sup = 0.0;
};

// Closed-form least-squares projection onto additive tables.
ProjectionResult exact_decomposable_projection(const QTable& q, const TabularGame& tg,
                                               const SeparableWeights& sigma);
ProjectionResult exact_decomposable_projection(const QTable& q, const TabularGame& tg);
// Same projection through the weighted normal equations; the cross-check.
QTable lstsq_decomposable_projection(const QTable& q, const TabularGame& tg,
                                     const SeparableWeights& sigma);

// Projection residual of T q; zero for every q exactly when the game is
// decomposable.
ProjectionResult tq_decomposability_residual(const QTable& q, const TabularGame& tg);

// sum_i table_i(local index) as a full table.
QTable assemble_additive(const TabularGame& tg, std::span<const Eigen::VectorXd> locals);

double weighted_l2(const QTable& diff, const Eigen::MatrixXd& weights);

// Flat little-endian layout: "MAFQIQT1", rows (u64), cols (u64), row-major
// doubles.
void write_qtable_binary(const std::string& path, const QTable& q);
QTable read_qtable_binary(const std::string& path);
void write_qtable_csv(const std::string& path, const QTable& q);

}  // namespace mafqi

#endif  // MAFQI_ORACLE_H_
