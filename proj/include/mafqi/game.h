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

#ifndef MAFQI_GAME_H_
#define MAFQI_GAME_H_

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mafqi/common.h"

namespace mafqi {

enum class GameKind { kDecomposable, kReverseEngineered, kGeneric };

std::string to_string(GameKind kind);
GameKind game_kind_from_string(const std::string& name);

// Static description of a cooperative Markov game: N agents, each with a
// state in [0,1]^d and a finite action set.
struct GameSpec {
  int num_agents = 1;
  int state_dim = 1;
  std::vector<int> actions_per_agent{1};
  double gamma = 0.0;
  double r_max = 1.0;
  GameKind kind = GameKind::kGeneric;

  int joint_state_dim() const { return num_agents * state_dim; }
  int num_joint_actions() const;
  double q_max() const { return r_max / (1.0 - gamma); }

  // Joint actions are enumerated in mixed radix with agent 0 most
  // significant.
  int encode_action(std::span<const int> joint) const;
  std::vector<int> decode_action(int index) const;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// A per-agent function R_i(s_i, a_i) or Q_i(s_i, a_i): for every local
// action an affine term plus a finite cosine mixture.
struct CosineTerm {
  double amplitude = 0.0;
  Eigen::VectorXd frequency;
  double phase = 0.0;
};

struct LocalFunction {
  struct ActionPart {
    double bias = 0.0;
    Eigen::VectorXd linear;
    std::vector<CosineTerm> cosines;
  };

  int state_dim = 1;
  std::vector<ActionPart> parts;  // one per local action

  int num_actions() const { return static_cast<int>(parts.size()); }
  double operator()(const ConstVecRef& s, int action) const;
  // Certified bound on |f| over [0,1]^d.
  double sup_bound() const;

  static LocalFunction zero(int state_dim, int num_actions);
};

// Affine-plus-product map (x, a) -> [0,1]^out used for kernel centres:
// clamp(offset_a + W_a x + p_a * prod(x)).
struct ConditionalMap {
  int input_dim = 1;
  int output_dim = 1;
  std::vector<Eigen::VectorXd> offset;
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> product;

  int num_actions() const { return static_cast<int>(offset.size()); }
  Eigen::VectorXd operator()(const ConstVecRef& x, int action) const;

  static ConditionalMap constant(int input_dim, int num_actions,
                                 const Eigen::VectorXd& value);
  static ConditionalMap identity(int dim, int num_actions);
};

struct GaussianComponent {
  double weight = 0.0;
  ConditionalMap center;
  Eigen::VectorXd width;  // per output dimension, > 0
};

// Conditional density on [0,1]^out: a finite mixture of truncated product
// Gaussians plus a uniform part. A kernel built with point_mass() is
// deterministic and has no density.
class MixtureKernel {
 public:
  MixtureKernel() = default;
  MixtureKernel(int input_dim, int output_dim, int num_actions,
                double uniform_weight, std::vector<GaussianComponent> components);

  static MixtureKernel uniform(int input_dim, int output_dim, int num_actions);
  static MixtureKernel point_mass(ConditionalMap map);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  int num_actions() const { return num_actions_; }
  bool is_point_mass() const { return point_mass_; }
  double uniform_weight() const { return uniform_weight_; }
  const std::vector<GaussianComponent>& components() const { return components_; }

  double density(const ConstVecRef& y, const ConstVecRef& x, int action) const;
  Eigen::VectorXd sample(const ConstVecRef& x, int action, Rng& rng) const;

  // Row over the midpoint grid with `resolution` points per output
  // dimension (dimension 0 most significant), renormalized to sum to one.
  // `raw_mass` receives the midpoint-rule mass before renormalization.
  Eigen::VectorXd discretize_row(const ConstVecRef& x, int action, int resolution,
                                 double* raw_mass = nullptr) const;

  // Integral of the density over the box, by composite Gauss-Legendre along
  // each factor of the product structure.
  double normalization(const ConstVecRef& x, int action) const;

  // Parameter sanity plus the normalization audit on a midpoint grid of
  // `audit_points` per input dimension. Throws InvalidKernelError.
  void validate(int audit_points = 16, double tol = 1e-6) const;

 private:
  int input_dim_ = 1;
  int output_dim_ = 1;
  int num_actions_ = 1;
  double uniform_weight_ = 1.0;
  std::vector<GaussianComponent> components_;
  bool point_mass_ = false;
};

struct CoupledReward {
  // R(s,a) = table[a] + coupling * prod_j s_j + sum_i local_i(s_i, a_i)
  Eigen::VectorXd table;
  double coupling = 0.0;
  std::vector<LocalFunction> locals;
};

enum class RewardFamily { kDecomposed, kCoupled, kReverseEngineered };
enum class KernelFamily { kDecomposed, kJoint };

class Game {
 public:
  const GameSpec& spec() const { return spec_; }
  RewardFamily reward_family() const { return reward_family_; }
  KernelFamily kernel_family() const { return kernel_family_; }

  double reward(const ConstVecRef& s, std::span<const int> a) const;
  Eigen::VectorXd sample_next(const ConstVecRef& s, std::span<const int> a,
                              Rng& rng) const;
  bool has_density() const;
  // Joint transition density; throws UnsupportedError for point masses.
  double density(const ConstVecRef& s_next, const ConstVecRef& s,
                 std::span<const int> a) const;
  Eigen::VectorXd sample_initial(Rng& rng) const;

  bool has_decomposition() const {
    return reward_family_ == RewardFamily::kDecomposed &&
           kernel_family_ == KernelFamily::kDecomposed;
  }
  // Decomposed reward components (kDecomposed) or the per-agent Q* pieces
  // (kReverseEngineered).
  const std::vector<LocalFunction>& local_functions() const { return locals_; }
  const std::vector<MixtureKernel>& kernel_components() const {
    return agent_kernels_;
  }
  const MixtureKernel& joint_kernel() const { return joint_kernel_; }
  const CoupledReward& coupled_reward() const { return coupled_; }
  int quadrature_resolution() const { return quadrature_resolution_; }

  // Only meaningful for reverse-engineered games.
  double qstar(const ConstVecRef& s, std::span<const int> a) const;

  // Discretized next-state row for (s, a) at the given resolution, with
  // decomposed kernels discretized component by component.
  Eigen::VectorXd transition_row(const ConstVecRef& s, std::span<const int> a,
                                 int resolution, double* raw_mass = nullptr) const;

 private:
  friend Game make_decomposable_game(
      std::vector<std::pair<LocalFunction, MixtureKernel>> components,
      GameSpec spec);
  friend Game make_reverse_engineered_game(std::vector<LocalFunction> qstar,
                                           MixtureKernel kernel, GameSpec spec,
                                           int quadrature_resolution);
  friend Game make_generic_game(CoupledReward reward,
                                std::vector<MixtureKernel> agent_kernels,
                                MixtureKernel joint_kernel, GameSpec spec);

  double continuation_max_qstar(const ConstVecRef& s, std::span<const int> a) const;
  double max_qstar(const ConstVecRef& s) const;

  GameSpec spec_;
  RewardFamily reward_family_ = RewardFamily::kCoupled;
  KernelFamily kernel_family_ = KernelFamily::kJoint;
  std::vector<LocalFunction> locals_;
  CoupledReward coupled_;
  std::vector<MixtureKernel> agent_kernels_;
  MixtureKernel joint_kernel_;
  int quadrature_resolution_ = 0;
  Eigen::VectorXd qstar_node_max_;  // max_a Q*(node, a) on the quadrature grid
};

// Reward is the component sum; the kernel is the uniform mixture
// (1/N) sum_i density_i where each density_i lives on the joint box.
Game make_decomposable_game(
    std::vector<std::pair<LocalFunction, MixtureKernel>> components,
    GameSpec spec);

// Defines R := Q* - gamma E[max Q*(s')] so that `qstar` (one local function
// per agent) is the optimal Q-function. The expectation uses the midpoint
// grid at `quadrature_resolution`, or is exact for point-mass kernels.
Game make_reverse_engineered_game(std::vector<LocalFunction> qstar,
                                  MixtureKernel kernel, GameSpec spec,
                                  int quadrature_resolution = 32);

// Either `agent_kernels` (decomposed transition) or `joint_kernel` is used:
// a non-empty agent_kernels list takes precedence.
Game make_generic_game(CoupledReward reward,
                       std::vector<MixtureKernel> agent_kernels,
                       MixtureKernel joint_kernel, GameSpec spec);

Eigen::VectorXd sample_transition(const Game& game, const ConstVecRef& s,
                                  std::span<const int> a, Rng& rng);

// Random instances used by tests and the CLI generators.
LocalFunction random_local_function(int state_dim, int num_actions,
                                    double bound, Rng& rng);
MixtureKernel random_agent_kernel(const GameSpec& spec, int agent, Rng& rng);
MixtureKernel random_coupled_kernel(const GameSpec& spec, Rng& rng);
Game random_decomposable_game(GameSpec spec, Rng& rng);
Game random_reverse_engineered_game(GameSpec spec, int quadrature_resolution,
                                    Rng& rng);

// Midpoint grid with `points` per dimension over [0,1]^dim; column k is
// node k (dimension 0 most significant).
Eigen::MatrixXd midpoint_grid(int dim, int points);

}  // namespace mafqi

#endif  // MAFQI_GAME_H_
