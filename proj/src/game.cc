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

#include "mafqi/game.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace mafqi {
namespace {

constexpr double kMinWidth = 1e-2;
constexpr int kAuditPoints = 16;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

// Truncated N(mu, sigma^2) restricted to [0,1].
struct TruncatedNormal {
  double mu;
  double sigma;
  double mass;

  TruncatedNormal(double m, double s)
      : mu(m), sigma(s), mass(normal_cdf((1.0 - m) / s) - normal_cdf(-m / s)) {}

  double pdf(double y) const {
    if (y < 0.0 || y > 1.0) return 0.0;
    return normal_pdf((y - mu) / sigma) / (sigma * mass);
  }

  double sample(Rng& rng) const {
    std::normal_distribution<double> normal(mu, sigma);
    for (;;) {
      const double y = normal(rng);
      if (y >= 0.0 && y <= 1.0) return y;
    }
  }
};

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGlNodes = {
    -0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
    0.9061798459386640};
constexpr std::array<double, 5> kGlWeights = {
    0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
    0.4786286704993665, 0.2369268850561891};

template <typename F>
double integrate_unit_interval(F&& f, int panels = 256) {
  const double h = 1.0 / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * h;
    double panel = 0.0;
    for (std::size_t k = 0; k < kGlNodes.size(); ++k) {
      panel += kGlWeights[k] * f(mid + 0.5 * h * kGlNodes[k]);
    }
    total += 0.5 * h * panel;
  }
  return total;
}

std::string field_error(const std::string& path, const std::string& message) {
  return path + ": " + message;
}

// Visits every node of the midpoint audit grid over [0,1]^dim.
template <typename F>
void for_each_audit_node(int dim, int points, F&& f) {
  const Eigen::MatrixXd grid = midpoint_grid(dim, points);
  for (Eigen::Index k = 0; k < grid.cols(); ++k) f(grid.col(k));
}

}  // namespace

std::string to_string(GameKind kind) {
  switch (kind) {
    case GameKind::kDecomposable:
      return "decomposable";
    case GameKind::kReverseEngineered:
      return "reverse_engineered";
    case GameKind::kGeneric:
      return "generic";
  }
  return "generic";
}

GameKind game_kind_from_string(const std::string& name) {
  if (name == "decomposable") return GameKind::kDecomposable;
  if (name == "reverse_engineered") return GameKind::kReverseEngineered;
  if (name == "generic") return GameKind::kGeneric;
  throw ConfigError(field_error("game.kind", "unknown kind '" + name + "'"));
}

int GameSpec::num_joint_actions() const {
  int total = 1;
  for (int a : actions_per_agent) total *= a;
  return total;
}

int GameSpec::encode_action(std::span<const int> joint) const {
  int index = 0;
  for (int i = 0; i < num_agents; ++i) index = index * actions_per_agent[i] + joint[i];
  return index;
}

std::vector<int> GameSpec::decode_action(int index) const {
  std::vector<int> joint(num_agents);
  for (int i = num_agents - 1; i >= 0; --i) {
    joint[i] = index % actions_per_agent[i];
    index /= actions_per_agent[i];
  }
  return joint;
}

void GameSpec::validate() const {
  if (num_agents < 1) throw ConfigError(field_error("game.agents", "must be >= 1"));
  if (state_dim < 1) throw ConfigError(field_error("game.state_dim", "must be >= 1"));
  if (static_cast<int>(actions_per_agent.size()) != num_agents) {
    throw ConfigError(field_error("game.actions", "expected one entry per agent"));
  }
  for (int a : actions_per_agent) {
    if (a < 1) throw ConfigError(field_error("game.actions", "every entry must be >= 1"));
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ConfigError(field_error("game.gamma", "must lie in [0, 1)"));
  }
  if (!(r_max > 0.0) || !std::isfinite(r_max)) {
    throw ConfigError(field_error("game.r_max", "must be positive and finite"));
  }
}

double LocalFunction::operator()(const ConstVecRef& s, int action) const {
  const ActionPart& part = parts[action];
  double value = part.bias;
  if (part.linear.size() > 0) value += part.linear.dot(s);
  for (const CosineTerm& term : part.cosines) {
    value += term.amplitude * std::cos(term.frequency.dot(s) + term.phase);
  }
  return value;
}

double LocalFunction::sup_bound() const {
  double bound = 0.0;
  for (const ActionPart& part : parts) {
    double hi = part.bias;
    double lo = part.bias;
    for (Eigen::Index k = 0; k < part.linear.size(); ++k) {
      if (part.linear[k] > 0) hi += part.linear[k];
      else lo += part.linear[k];
    }
    double value = std::max(std::abs(hi), std::abs(lo));
    for (const CosineTerm& term : part.cosines) value += std::abs(term.amplitude);
    bound = std::max(bound, value);
  }
  return bound;
}

LocalFunction LocalFunction::zero(int state_dim, int num_actions) {
  LocalFunction f;
  f.state_dim = state_dim;
  f.parts.resize(num_actions);
  for (ActionPart& part : f.parts) part.linear = Eigen::VectorXd::Zero(state_dim);
  return f;
}

Eigen::VectorXd ConditionalMap::operator()(const ConstVecRef& x, int action) const {
  Eigen::VectorXd y = offset[action] + weight[action] * x;
  if (product[action].size() > 0 && !product[action].isZero(0.0)) {
    y += product[action] * x.prod();
  }
  return y.unaryExpr([](double v) { return clamp01(v); });
}

ConditionalMap ConditionalMap::constant(int input_dim, int num_actions,
                                        const Eigen::VectorXd& value) {
  ConditionalMap map;
  map.input_dim = input_dim;
  map.output_dim = static_cast<int>(value.size());
  for (int a = 0; a < num_actions; ++a) {
    map.offset.push_back(value);
    map.weight.push_back(Eigen::MatrixXd::Zero(map.output_dim, input_dim));
    map.product.push_back(Eigen::VectorXd::Zero(map.output_dim));
  }
  return map;
}

ConditionalMap ConditionalMap::identity(int dim, int num_actions) {
  ConditionalMap map = constant(dim, num_actions, Eigen::VectorXd::Zero(dim));
  for (auto& w : map.weight) w.setIdentity();
  return map;
}

MixtureKernel::MixtureKernel(int input_dim, int output_dim, int num_actions,
                             double uniform_weight,
                             std::vector<GaussianComponent> components)
    : input_dim_(input_dim),
      output_dim_(output_dim),
      num_actions_(num_actions),
      uniform_weight_(uniform_weight),
      components_(std::move(components)) {}

MixtureKernel MixtureKernel::uniform(int input_dim, int output_dim, int num_actions) {
  return MixtureKernel(input_dim, output_dim, num_actions, 1.0, {});
}

MixtureKernel MixtureKernel::point_mass(ConditionalMap map) {
  MixtureKernel kernel;
  kernel.input_dim_ = map.input_dim;
  kernel.output_dim_ = map.output_dim;
  kernel.num_actions_ = map.num_actions();
  kernel.uniform_weight_ = 0.0;
  kernel.components_.push_back({1.0, std::move(map), Eigen::VectorXd()});
  kernel.point_mass_ = true;
  return kernel;
}

double MixtureKernel::density(const ConstVecRef& y, const ConstVecRef& x,
                              int action) const {
  if (point_mass_) throw UnsupportedError("point-mass kernel has no density");
  if ((y.array() < 0.0).any() || (y.array() > 1.0).any()) return 0.0;
  double value = uniform_weight_;
  for (const GaussianComponent& c : components_) {
    const Eigen::VectorXd mu = c.center(x, action);
    double prod = c.weight;
    for (int j = 0; j < output_dim_; ++j) {
      prod *= TruncatedNormal(mu[j], c.width[j]).pdf(y[j]);
    }
    value += prod;
  }
  return value;
}

Eigen::VectorXd MixtureKernel::sample(const ConstVecRef& x, int action, Rng& rng) const {
  if (point_mass_) return components_.front().center(x, action);
  double u = uniform01(rng);
  if (u < uniform_weight_ || components_.empty()) {
    Eigen::VectorXd y(output_dim_);
    for (int j = 0; j < output_dim_; ++j) y[j] = uniform01(rng);
    return y;
  }
  u -= uniform_weight_;
  std::size_t pick = components_.size() - 1;
  for (std::size_t c = 0; c < components_.size(); ++c) {
    if (u < components_[c].weight) {
      pick = c;
      break;
    }
    u -= components_[c].weight;
  }
  const GaussianComponent& c = components_[pick];
  const Eigen::VectorXd mu = c.center(x, action);
  Eigen::VectorXd y(output_dim_);
  for (int j = 0; j < output_dim_; ++j) y[j] = TruncatedNormal(mu[j], c.width[j]).sample(rng);
  return y;
}

Eigen::VectorXd MixtureKernel::discretize_row(const ConstVecRef& x, int action,
                                              int resolution, double* raw_mass) const {
  Eigen::Index size = 1;
  for (int j = 0; j < output_dim_; ++j) size *= resolution;
  Eigen::VectorXd row = Eigen::VectorXd::Zero(size);
  if (point_mass_) {
    const Eigen::VectorXd y = components_.front().center(x, action);
    Eigen::Index index = 0;
    for (int j = 0; j < output_dim_; ++j) {
      const int cell = std::min(resolution - 1, static_cast<int>(y[j] * resolution));
      index = index * resolution + cell;
    }
    row[index] = 1.0;
    if (raw_mass != nullptr) *raw_mass = 1.0;
    return row;
  }
  row.setConstant(uniform_weight_);
  Eigen::VectorXd mids(resolution);
  for (int k = 0; k < resolution; ++k) mids[k] = (k + 0.5) / resolution;
  for (const GaussianComponent& c : components_) {
    const Eigen::VectorXd mu = c.center(x, action);
    // Kronecker product of the per-dimension factors.
    Eigen::VectorXd factor = Eigen::VectorXd::Constant(1, c.weight);
    for (int j = 0; j < output_dim_; ++j) {
      const TruncatedNormal tn(mu[j], c.width[j]);
      Eigen::VectorXd v(resolution);
      for (int k = 0; k < resolution; ++k) v[k] = tn.pdf(mids[k]);
      Eigen::VectorXd next(factor.size() * resolution);
      for (Eigen::Index p = 0; p < factor.size(); ++p) {
        next.segment(p * resolution, resolution) = factor[p] * v;
      }
      factor.swap(next);
    }
    row += factor;
  }
  const double total = row.sum();
  if (raw_mass != nullptr) *raw_mass = total / static_cast<double>(size);
  return row / total;
}

double MixtureKernel::normalization(const ConstVecRef& x, int action) const {
  if (point_mass_) return 1.0;
  double total = uniform_weight_;
  for (const GaussianComponent& c : components_) {
    const Eigen::VectorXd mu = c.center(x, action);
    double prod = c.weight;
    for (int j = 0; j < output_dim_; ++j) {
      const TruncatedNormal tn(mu[j], c.width[j]);
      prod *= integrate_unit_interval([&](double y) { return tn.pdf(y); });
    }
    total += prod;
  }
  return total;
}

void MixtureKernel::validate(int audit_points, double tol) const {
  if (point_mass_) return;
  if (uniform_weight_ < 0.0) throw InvalidKernelError("negative uniform weight");
  double weight_sum = uniform_weight_;
  for (const GaussianComponent& c : components_) {
    if (c.weight < 0.0) throw InvalidKernelError("negative component weight");
    if (c.width.size() != output_dim_ || (c.width.array() < kMinWidth).any()) {
      throw InvalidKernelError("component widths must be >= 0.01 in every dimension");
    }
    if (c.center.num_actions() != num_actions_ || c.center.input_dim != input_dim_ ||
        c.center.output_dim != output_dim_) {
      throw InvalidKernelError("component centre map has the wrong shape");
    }
    weight_sum += c.weight;
  }
  if (std::abs(weight_sum - 1.0) > tol) {
    throw InvalidKernelError("mixture weights sum to " + std::to_string(weight_sum));
  }
  for_each_audit_node(input_dim_, audit_points, [&](const ConstVecRef& x) {
    for (int a = 0; a < num_actions_; ++a) {
      const double z = normalization(x, a);
      if (std::abs(z - 1.0) > tol) {
        std::ostringstream msg;
        msg << "density integrates to " << z << " at an audit node (action " << a << ")";
        throw InvalidKernelError(msg.str());
      }
    }
  });
}

double Game::reward(const ConstVecRef& s, std::span<const int> a) const {
  const int d = spec_.state_dim;
  switch (reward_family_) {
    case RewardFamily::kDecomposed: {
      double total = 0.0;
      for (int i = 0; i < spec_.num_agents; ++i) total += locals_[i](s.segment(i * d, d), a[i]);
      return total;
    }
    case RewardFamily::kCoupled: {
      double total = coupled_.coupling * s.prod();
      if (coupled_.table.size() > 0) total += coupled_.table[spec_.encode_action(a)];
      for (std::size_t i = 0; i < coupled_.locals.size(); ++i) {
        total += coupled_.locals[i](s.segment(i * d, d), a[i]);
      }
      return total;
    }
    case RewardFamily::kReverseEngineered:
      return qstar(s, a) - spec_.gamma * continuation_max_qstar(s, a);
  }
  return 0.0;
}

double Game::qstar(const ConstVecRef& s, std::span<const int> a) const {
  const int d = spec_.state_dim;
  double total = 0.0;
  for (int i = 0; i < spec_.num_agents; ++i) total += locals_[i](s.segment(i * d, d), a[i]);
  return total;
}

double Game::max_qstar(const ConstVecRef& s) const {
  const int d = spec_.state_dim;
  double total = 0.0;
  for (int i = 0; i < spec_.num_agents; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (int b = 0; b < spec_.actions_per_agent[i]; ++b) {
      best = std::max(best, locals_[i](s.segment(i * d, d), b));
    }
    total += best;
  }
  return total;
}

double Game::continuation_max_qstar(const ConstVecRef& s, std::span<const int> a) const {
  if (spec_.gamma == 0.0) return 0.0;
  if (joint_kernel_.is_point_mass()) {
    return max_qstar(joint_kernel_.components().front().center(s, spec_.encode_action(a)));
  }
  return transition_row(s, a, quadrature_resolution_).dot(qstar_node_max_);
}

Eigen::VectorXd Game::sample_next(const ConstVecRef& s, std::span<const int> a,
                                  Rng& rng) const {
  if (kernel_family_ == KernelFamily::kJoint) {
    return joint_kernel_.sample(s, spec_.encode_action(a), rng);
  }
  const int n = spec_.num_agents;
  const int d = spec_.state_dim;
  int pick = 0;
  if (n > 1) pick = std::uniform_int_distribution<int>(0, n - 1)(rng);
  return agent_kernels_[pick].sample(s.segment(pick * d, d), a[pick], rng);
}

bool Game::has_density() const {
  if (kernel_family_ == KernelFamily::kJoint) return !joint_kernel_.is_point_mass();
  return std::none_of(agent_kernels_.begin(), agent_kernels_.end(),
                      [](const MixtureKernel& k) { return k.is_point_mass(); });
}

double Game::density(const ConstVecRef& s_next, const ConstVecRef& s,
                     std::span<const int> a) const {
  if (kernel_family_ == KernelFamily::kJoint) {
    return joint_kernel_.density(s_next, s, spec_.encode_action(a));
  }
  const int d = spec_.state_dim;
  double total = 0.0;
  for (int i = 0; i < spec_.num_agents; ++i) {
    total += agent_kernels_[i].density(s_next, s.segment(i * d, d), a[i]);
  }
  return total / spec_.num_agents;
}

Eigen::VectorXd Game::sample_initial(Rng& rng) const {
  Eigen::VectorXd s(spec_.joint_state_dim());
  for (Eigen::Index j = 0; j < s.size(); ++j) s[j] = uniform01(rng);
  return s;
}

Eigen::VectorXd Game::transition_row(const ConstVecRef& s, std::span<const int> a,
                                     int resolution, double* raw_mass) const {
  if (kernel_family_ == KernelFamily::kJoint) {
    return joint_kernel_.discretize_row(s, spec_.encode_action(a), resolution, raw_mass);
  }
  const int d = spec_.state_dim;
  double mass = 0.0;
  Eigen::VectorXd row;
  for (int i = 0; i < spec_.num_agents; ++i) {
    double m = 1.0;
    Eigen::VectorXd part =
        agent_kernels_[i].discretize_row(s.segment(i * d, d), a[i], resolution, &m);
    if (i == 0) {
      row = std::move(part);
    } else {
      row += part;
    }
    mass += m;
  }
  if (raw_mass != nullptr) *raw_mass = mass / spec_.num_agents;
  return row / spec_.num_agents;
}

namespace {

void check_reward_bound(const Game& game, double limit, bool reverse_engineered) {
  const GameSpec& spec = game.spec();
  const int actions = spec.num_joint_actions();
  for_each_audit_node(spec.joint_state_dim(), kAuditPoints, [&](const ConstVecRef& s) {
    for (int ja = 0; ja < actions; ++ja) {
      const std::vector<int> a = spec.decode_action(ja);
      const double r = game.reward(s, a);
      if (std::abs(r) > limit) {
        std::ostringstream msg;
        msg << "|reward| = " << std::abs(r) << " exceeds r_max = " << limit
            << " on the audit grid";
        if (reverse_engineered) msg << " (rescale qstar)";
        throw BoundViolationError(msg.str());
      }
    }
  });
}

}  // namespace

Game make_decomposable_game(
    std::vector<std::pair<LocalFunction, MixtureKernel>> components, GameSpec spec) {
  spec.kind = GameKind::kDecomposable;
  spec.validate();
  const int n = spec.num_agents;
  if (static_cast<int>(components.size()) != n) {
    throw ConfigError("game.components: expected " + std::to_string(n) +
                      " component pairs, got " + std::to_string(components.size()));
  }
  Game game;
  game.spec_ = spec;
  game.reward_family_ = RewardFamily::kDecomposed;
  game.kernel_family_ = KernelFamily::kDecomposed;
  for (int i = 0; i < n; ++i) {
    auto& [reward, kernel] = components[i];
    if (reward.state_dim != spec.state_dim || reward.num_actions() != spec.actions_per_agent[i]) {
      throw ConfigError("game.components[" + std::to_string(i) + "].reward: shape mismatch");
    }
    if (kernel.input_dim() != spec.state_dim || kernel.num_actions() != spec.actions_per_agent[i] ||
        kernel.output_dim() != spec.joint_state_dim()) {
      throw ConfigError("game.components[" + std::to_string(i) + "].kernel: shape mismatch");
    }
    kernel.validate(kAuditPoints);
    const double limit = spec.r_max / n;
    for_each_audit_node(spec.state_dim, kAuditPoints, [&](const ConstVecRef& x) {
      for (int a = 0; a < reward.num_actions(); ++a) {
        if (std::abs(reward(x, a)) > limit * (1.0 + 1e-12)) {
          throw BoundViolationError("agent " + std::to_string(i) +
                                    " reward exceeds r_max / N on the audit grid");
        }
      }
    });
    game.locals_.push_back(std::move(reward));
    game.agent_kernels_.push_back(std::move(kernel));
  }
  return game;
}

Game make_reverse_engineered_game(std::vector<LocalFunction> qstar, MixtureKernel kernel,
                                  GameSpec spec, int quadrature_resolution) {
  spec.kind = GameKind::kReverseEngineered;
  spec.validate();
  const int n = spec.num_agents;
  if (static_cast<int>(qstar.size()) != n) {
    throw ConfigError("game.qstar: expected one local function per agent");
  }
  if (kernel.input_dim() != spec.joint_state_dim() ||
      kernel.output_dim() != spec.joint_state_dim() ||
      kernel.num_actions() != spec.num_joint_actions()) {
    throw ConfigError("game.kernel: shape mismatch with the joint spaces");
  }
  if (quadrature_resolution < 1) {
    throw ConfigError("game.quadrature_resolution: must be >= 1");
  }
  kernel.validate(kAuditPoints);
  Game game;
  game.spec_ = spec;
  game.reward_family_ = RewardFamily::kReverseEngineered;
  game.kernel_family_ = KernelFamily::kJoint;
  game.locals_ = std::move(qstar);
  game.joint_kernel_ = std::move(kernel);
  game.quadrature_resolution_ = quadrature_resolution;
  double qbound = 0.0;
  for (const LocalFunction& f : game.locals_) qbound += f.sup_bound();
  if (qbound > spec.q_max()) {
    throw BoundViolationError("qstar bound exceeds q_max (rescale qstar)");
  }
  const Eigen::MatrixXd nodes = midpoint_grid(spec.joint_state_dim(), quadrature_resolution);
  game.qstar_node_max_.resize(nodes.cols());
  for (Eigen::Index k = 0; k < nodes.cols(); ++k) {
    game.qstar_node_max_[k] = game.max_qstar(nodes.col(k));
  }
  check_reward_bound(game, spec.r_max, true);
  return game;
}

Game make_generic_game(CoupledReward reward, std::vector<MixtureKernel> agent_kernels,
                       MixtureKernel joint_kernel, GameSpec spec) {
  spec.kind = GameKind::kGeneric;
  spec.validate();
  Game game;
  game.spec_ = spec;
  game.reward_family_ = RewardFamily::kCoupled;
  if (reward.table.size() != 0 && reward.table.size() != spec.num_joint_actions()) {
    throw ConfigError("game.reward.table: expected one entry per joint action");
  }
  game.coupled_ = std::move(reward);
  if (!agent_kernels.empty()) {
    if (static_cast<int>(agent_kernels.size()) != spec.num_agents) {
      throw ConfigError("game.kernel.components: expected one kernel per agent");
    }
    for (const MixtureKernel& k : agent_kernels) k.validate(kAuditPoints);
    game.kernel_family_ = KernelFamily::kDecomposed;
    game.agent_kernels_ = std::move(agent_kernels);
  } else {
    if (joint_kernel.input_dim() != spec.joint_state_dim() ||
        joint_kernel.output_dim() != spec.joint_state_dim() ||
        joint_kernel.num_actions() != spec.num_joint_actions()) {
      throw ConfigError("game.kernel: shape mismatch with the joint spaces");
    }
    joint_kernel.validate(kAuditPoints);
    game.kernel_family_ = KernelFamily::kJoint;
    game.joint_kernel_ = std::move(joint_kernel);
  }
  check_reward_bound(game, spec.r_max, false);
  return game;
}

Eigen::VectorXd sample_transition(const Game& game, const ConstVecRef& s,
                                  std::span<const int> a, Rng& rng) {
  return game.sample_next(s, a, rng);
}

Eigen::MatrixXd midpoint_grid(int dim, int points) {
  Eigen::Index count = 1;
  for (int j = 0; j < dim; ++j) count *= points;
  Eigen::MatrixXd grid(dim, count);
  for (Eigen::Index k = 0; k < count; ++k) {
    Eigen::Index rest = k;
    for (int j = dim - 1; j >= 0; --j) {
      grid(j, k) = (static_cast<double>(rest % points) + 0.5) / points;
      rest /= points;
    }
  }
  return grid;
}

LocalFunction random_local_function(int state_dim, int num_actions, double bound, Rng& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  LocalFunction f = LocalFunction::zero(state_dim, num_actions);
  for (auto& part : f.parts) {
    part.bias = 0.3 * unit(rng);
    for (int k = 0; k < state_dim; ++k) part.linear[k] = 0.5 * unit(rng);
    const int terms = 1 + static_cast<int>(uniform01(rng) * 2.0);
    for (int t = 0; t < terms; ++t) {
      CosineTerm term;
      term.amplitude = 0.4 * unit(rng);
      term.frequency = Eigen::VectorXd(state_dim);
      for (int k = 0; k < state_dim; ++k) term.frequency[k] = 4.0 * unit(rng);
      term.phase = std::numbers::pi * unit(rng);
      part.cosines.push_back(std::move(term));
    }
  }
  const double scale = 0.95 * bound / f.sup_bound();
  for (auto& part : f.parts) {
    part.bias *= scale;
    part.linear *= scale;
    for (auto& term : part.cosines) term.amplitude *= scale;
  }
  return f;
}

namespace {

ConditionalMap random_map(int input_dim, int output_dim, int num_actions, double slope,
                          double product_coef, Rng& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  ConditionalMap map =
      ConditionalMap::constant(input_dim, num_actions, Eigen::VectorXd::Zero(output_dim));
  for (int a = 0; a < num_actions; ++a) {
    for (int j = 0; j < output_dim; ++j) {
      map.offset[a][j] = 0.5 + 0.3 * unit(rng);
      for (int k = 0; k < input_dim; ++k) map.weight[a](j, k) = slope * unit(rng);
      map.product[a][j] = product_coef * unit(rng);
    }
  }
  return map;
}

std::vector<GaussianComponent> random_components(int input_dim, int output_dim,
                                                 int num_actions, int count, double mass,
                                                 double product_coef, Rng& rng) {
  std::vector<GaussianComponent> components;
  for (int c = 0; c < count; ++c) {
    GaussianComponent comp;
    comp.weight = mass / count;
    comp.center = random_map(input_dim, output_dim, num_actions, 0.6, product_coef, rng);
    comp.width = Eigen::VectorXd(output_dim);
    for (int j = 0; j < output_dim; ++j) comp.width[j] = 0.1 + 0.2 * uniform01(rng);
    components.push_back(std::move(comp));
  }
  return components;
}

}  // namespace

MixtureKernel random_agent_kernel(const GameSpec& spec, int agent, Rng& rng) {
  const int d = spec.state_dim;
  const int actions = spec.actions_per_agent[agent];
  auto components = random_components(d, spec.joint_state_dim(), actions, 2, 0.9, 0.0, rng);
  return MixtureKernel(d, spec.joint_state_dim(), actions, 0.1, std::move(components));
}

MixtureKernel random_coupled_kernel(const GameSpec& spec, Rng& rng) {
  const int dim = spec.joint_state_dim();
  auto components = random_components(dim, dim, spec.num_joint_actions(), 2, 0.9, 0.8, rng);
  return MixtureKernel(dim, dim, spec.num_joint_actions(), 0.1, std::move(components));
}

Game random_decomposable_game(GameSpec spec, Rng& rng) {
  spec.validate();
  std::vector<std::pair<LocalFunction, MixtureKernel>> components;
  for (int i = 0; i < spec.num_agents; ++i) {
    LocalFunction reward = random_local_function(spec.state_dim, spec.actions_per_agent[i],
                                                 spec.r_max / spec.num_agents, rng);
    components.emplace_back(std::move(reward), random_agent_kernel(spec, i, rng));
  }
  return make_decomposable_game(std::move(components), spec);
}

Game random_reverse_engineered_game(GameSpec spec, int quadrature_resolution, Rng& rng) {
  spec.validate();
  // |Q*| <= 0.9 r_max keeps |R| <= r_max for gamma <= 0.1 / 0.9.
  const double per_agent = 0.9 * spec.r_max / (1.0 + spec.gamma) / spec.num_agents;
  std::vector<LocalFunction> qstar;
  for (int i = 0; i < spec.num_agents; ++i) {
    qstar.push_back(
        random_local_function(spec.state_dim, spec.actions_per_agent[i], per_agent, rng));
  }
  return make_reverse_engineered_game(std::move(qstar), random_coupled_kernel(spec, rng),
                                      spec, quadrature_resolution);
}

}  // namespace mafqi
