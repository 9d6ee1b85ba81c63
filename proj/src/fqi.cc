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

#include "mafqi/fqi.h"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mafqi {
namespace {

// Stream tags for derive_stream.
constexpr std::uint64_t kSampleStream = 1;
constexpr std::uint64_t kFitStream = 2;
constexpr std::uint64_t kHeldoutStream = 3;
constexpr std::uint64_t kInitStream = 4;

int sample_index(const Eigen::VectorXd& p, Rng& rng) {
  double u = uniform01(rng);
  for (Eigen::Index k = 0; k + 1 < p.size(); ++k) {
    if (u < p[k]) return static_cast<int>(k);
    u -= p[k];
  }
  return static_cast<int>(p.size() - 1);
}

void put_number(std::ostream& os, double v) {
  if (std::isnan(v)) {
    os << "nan";
  } else {
    os << v;
  }
}

}  // namespace

Eigen::VectorXd SigmaSpec::probs(const GameSpec& spec, int agent) const {
  const int a = spec.actions_per_agent[agent];
  if (action_probs.empty()) return Eigen::VectorXd::Constant(a, 1.0 / a);
  if (static_cast<int>(action_probs.size()) != spec.num_agents) {
    throw ConfigError("fqi.sigma: need one action distribution per agent");
  }
  const Eigen::VectorXd& p = action_probs[agent];
  if (p.size() != a || (p.array() < 0.0).any() || std::abs(p.sum() - 1.0) > 1e-9) {
    throw ConfigError("fqi.sigma: agent " + std::to_string(agent) +
                      " action probabilities must be a distribution over its actions");
  }
  return p;
}

SeparableWeights SigmaSpec::on_grid(const TabularGame& tg) const {
  SeparableWeights w;
  const int L = tg.local_nodes();
  for (int i = 0; i < tg.spec().num_agents; ++i) {
    const Eigen::VectorXd p = probs(tg.spec(), i);
    Eigen::VectorXd m(tg.local_size(i));
    for (Eigen::Index a = 0; a < p.size(); ++a) {
      m.segment(a * L, L).setConstant(p[a] / L);
    }
    w.marginals.push_back(std::move(m));
  }
  return w;
}

Transitions sample_sigma(const Game& game, const SigmaSpec& sigma, int n, Rng& rng) {
  if (n < 1) throw ConfigError("fqi.samples: must be positive");
  const GameSpec& spec = game.spec();
  std::vector<Eigen::VectorXd> probs;
  for (int i = 0; i < spec.num_agents; ++i) probs.push_back(sigma.probs(spec, i));

  Transitions t;
  t.states.resize(spec.joint_state_dim(), n);
  t.actions.resize(spec.num_agents, n);
  t.rewards.resize(n);
  t.next.resize(spec.joint_state_dim(), n);
  std::vector<int> a(spec.num_agents);
  for (int j = 0; j < n; ++j) {
    t.states.col(j) = game.sample_initial(rng);
    for (int i = 0; i < spec.num_agents; ++i) {
      a[i] = sample_index(probs[i], rng);
      t.actions(i, j) = a[i];
    }
    t.rewards[j] = game.reward(t.states.col(j), a);
    t.next.col(j) = game.sample_next(t.states.col(j), a, rng);
  }
  return t;
}

Eigen::VectorXd compute_targets(const AdditiveCritic& q, const Transitions& batch, double gamma,
                                double q_max, bool clamp) {
  const int d = q.state_dim();
  Eigen::VectorXd y(batch.size());
  for (Eigen::Index j = 0; j < batch.size(); ++j) {
    double best = 0.0;
    for (int i = 0; i < q.num_agents(); ++i) {
      best += q.local_values(i, batch.next.col(j).segment(i * d, d)).maxCoeff();
    }
    y[j] = batch.rewards[j] + gamma * best;
    if (clamp) y[j] = std::clamp(y[j], -q_max, q_max);
  }
  return y;
}

TabularCritic::TabularCritic(const GameSpec& spec, int resolution,
                             std::vector<Eigen::VectorXd> locals)
    : state_dim_(spec.state_dim),
      resolution_(resolution),
      local_nodes_(1),
      actions_(spec.actions_per_agent),
      locals_(std::move(locals)) {
  if (resolution < 1) throw ConfigError("oracle.resolution: must be positive");
  for (int j = 0; j < state_dim_; ++j) local_nodes_ *= resolution_;
  if (static_cast<int>(locals_.size()) != spec.num_agents) {
    throw ShapeError("tabular critic: one table per agent expected");
  }
  for (int i = 0; i < spec.num_agents; ++i) {
    if (locals_[i].size() != static_cast<Eigen::Index>(local_nodes_) * actions_[i]) {
      throw ShapeError("tabular critic: table " + std::to_string(i) + " has the wrong size");
    }
  }
}

Eigen::VectorXd TabularCritic::local_values(int agent, const ConstVecRef& s_i) const {
  int l = 0;
  for (int j = 0; j < state_dim_; ++j) {
    const int cell = std::clamp(static_cast<int>(std::floor(s_i[j] * resolution_)), 0,
                                resolution_ - 1);
    l = l * resolution_ + cell;
  }
  Eigen::VectorXd v(actions_[agent]);
  for (int a = 0; a < actions_[agent]; ++a) v[a] = locals_[agent][a * local_nodes_ + l];
  return v;
}

QTable critic_on_grid(const AdditiveCritic& q, const TabularGame& tg) {
  const GameSpec& spec = tg.spec();
  if (q.num_agents() != spec.num_agents || q.state_dim() != spec.state_dim) {
    throw ShapeError("critic does not match the tabular game");
  }
  const int L = tg.local_nodes();
  const Eigen::MatrixXd local = midpoint_grid(spec.state_dim, tg.resolution());
  std::vector<Eigen::VectorXd> tables;
  for (int i = 0; i < spec.num_agents; ++i) {
    Eigen::VectorXd t(tg.local_size(i));
    for (int l = 0; l < L; ++l) {
      const Eigen::VectorXd v = q.local_values(i, local.col(l));
      for (Eigen::Index a = 0; a < v.size(); ++a) t[a * L + l] = v[a];
    }
    tables.push_back(std::move(t));
  }
  return assemble_additive(tg, tables);
}

std::unique_ptr<AdditiveCritic> NetworkFitter::initial(const GameSpec& spec, Rng& rng) {
  spec_ = spec;
  calls_ = 0;
  return std::make_unique<DecomposedQ>(DecomposedQ::zero_function(
      spec.state_dim, spec.actions_per_agent, width_, spec.q_max() / spec.num_agents, rng));
}

FitStep NetworkFitter::fit(const AdditiveCritic& previous, const Transitions& batch,
                           const Eigen::VectorXd& targets, std::uint64_t seed) {
  const auto* prev = dynamic_cast<const DecomposedQ*>(&previous);
  DecomposedQ init;
  if (warm_start_ && prev != nullptr) {
    init = *prev;
  } else {
    Rng rng(mix_seed(seed ^ 0x9e3779b97f4a7c15ULL));
    init = DecomposedQ::zero_function(spec_.state_dim, spec_.actions_per_agent, width_,
                                      spec_.q_max() / spec_.num_agents, rng);
  }
  FitConfig cfg = fit_;
  cfg.seed = seed;
  ++calls_;
  if (step_decay_ > 0.0) cfg.step_size *= std::pow(static_cast<double>(calls_), -step_decay_);
  FitResult r = fit_least_squares(RegressionData{batch.states, batch.actions, targets}, cfg, init);
  FitStep step;
  step.train_loss = r.train_loss;
  step.critic = std::make_unique<DecomposedQ>(std::move(r.critic));
  return step;
}

std::unique_ptr<AdditiveCritic> ExactTabularFitter::initial(const GameSpec& spec, Rng&) {
  std::vector<Eigen::VectorXd> zeros;
  for (int i = 0; i < spec.num_agents; ++i) {
    zeros.push_back(Eigen::VectorXd::Zero(tg_.local_size(i)));
  }
  return std::make_unique<TabularCritic>(tg_.spec(), tg_.resolution(), std::move(zeros));
}

FitStep ExactTabularFitter::fit(const AdditiveCritic& previous, const Transitions&,
                                const Eigen::VectorXd&, std::uint64_t) {
  const QTable target = bellman_apply(critic_on_grid(previous, tg_), tg_);
  ProjectionResult proj = exact_decomposable_projection(target, tg_);
  // Fold -(N-1) C into agent 0 so the sum of tables is the projection.
  proj.components[0].array() -= (tg_.spec().num_agents - 1) * proj.constant;
  FitStep step;
  step.train_loss = proj.residual_l2 * proj.residual_l2;
  step.critic =
      std::make_unique<TabularCritic>(tg_.spec(), tg_.resolution(), std::move(proj.components));
  return step;
}

void FqiConfig::validate() const {
  if (iterations < 0) throw ConfigError("fqi.iterations: must be non-negative");
  if (samples < 1) throw ConfigError("fqi.samples: must be positive");
  if (width < 1) throw ConfigError("fqi.width: must be positive");
  if (!(step_decay >= 0.0)) throw ConfigError("fqi.step_decay: must be non-negative");
  fit.validate();
}

double ConvergenceReport::eps_max() const {
  double m = 0.0;
  for (const IterationRecord& r : rows) m = std::max(m, r.eps_k);
  return m;
}

double ConvergenceReport::eps_proj_max() const {
  double m = 0.0;
  for (const IterationRecord& r : rows) {
    if (!std::isnan(r.eps_proj_sup)) m = std::max(m, r.eps_proj_sup);
  }
  return m;
}

std::string ConvergenceReport::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "k,train_loss,eps_k,sup_err,l1_mu_err,path_norm_max,wall_seconds\n";
  for (const IterationRecord& r : rows) {
    os << r.k;
    for (double v : {r.train_loss, r.eps_k, r.sup_err, r.l1_mu_err, r.path_norm_max,
                     r.wall_seconds}) {
      os << ',';
      put_number(os, v);
    }
    os << '\n';
  }
  return os.str();
}

std::string ConvergenceReport::diagnostics_csv() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "k,eps_estimator,eps_proj_sup,policy_sup_err\n";
  for (const IterationRecord& r : rows) {
    os << r.k << ',' << eps_estimator << ',';
    put_number(os, r.eps_proj_sup);
    os << ',';
    put_number(os, r.policy_sup_err);
    os << '\n';
  }
  return os.str();
}

TabularPolicy GreedyJointPolicy::on_grid(const TabularGame& tg) const {
  return greedy_policy(critic_on_grid(*critic_, tg));
}

void ConvergenceReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out << to_csv();
  if (!out) throw InputError("write failed for " + path);
}

MafqiResult run_mafqi(const Game& game, const FqiConfig& cfg, CriticFitter& fitter,
                      const TabularGame* oracle, const QTable* qstar,
                      const IterationObserver& observer) {
  cfg.validate();
  const GameSpec& spec = game.spec();
  if (qstar != nullptr && oracle == nullptr) {
    throw PreconditionError("run_mafqi: an oracle Q* needs the tabular game");
  }
  if (oracle != nullptr && qstar != nullptr &&
      (qstar->rows() != oracle->num_nodes() || qstar->cols() != oracle->num_actions())) {
    throw ShapeError("run_mafqi: Q* does not match the tabular game");
  }
  const auto start = std::chrono::steady_clock::now();

  Rng init_rng = derive_stream(cfg.seed, 0, kInitStream);
  std::unique_ptr<AdditiveCritic> current = fitter.initial(spec, init_rng);
  if (observer) observer(0, *current);

  MafqiResult result;
  result.report.eps_estimator = oracle != nullptr ? "grid" : "heldout";
  Eigen::MatrixXd sigma_grid;
  if (oracle != nullptr) sigma_grid = cfg.sigma.on_grid(*oracle).joint(*oracle);

  for (int k = 1; k <= cfg.iterations; ++k) {
    Rng sample_rng = derive_stream(cfg.seed, k, kSampleStream);
    const Transitions batch = sample_sigma(game, cfg.sigma, cfg.samples, sample_rng);
    const Eigen::VectorXd targets =
        compute_targets(*current, batch, spec.gamma, spec.q_max(), cfg.target_clamp);
    FitStep step = fitter.fit(*current, batch, targets,
                              mix_seed(cfg.seed ^ mix_seed(k * 131 + kFitStream)));

    IterationRecord row;
    row.k = k;
    row.train_loss = step.train_loss;
    row.path_norm_max = step.critic->path_norm_max();
    if (oracle != nullptr) {
      const QTable tq = bellman_apply(critic_on_grid(*current, *oracle), *oracle);
      const QTable next = critic_on_grid(*step.critic, *oracle);
      row.eps_k = weighted_l2(next - tq, sigma_grid);
      const ProjectionResult proj =
          exact_decomposable_projection(tq, *oracle, cfg.sigma.on_grid(*oracle));
      row.eps_proj_sup = (next - proj.projected).cwiseAbs().maxCoeff();
      if (qstar != nullptr) {
        row.sup_err = (*qstar - next).cwiseAbs().maxCoeff();
        const QTable qpi = policy_eval(*oracle, greedy_policy(next));
        const Eigen::ArrayXXd gap = (*qstar - qpi).cwiseAbs().array();
        row.l1_mu_err = gap.mean();
        row.policy_sup_err = gap.maxCoeff();
      }
    } else {
      Rng held_rng = derive_stream(cfg.seed, k, kHeldoutStream);
      const Transitions held = sample_sigma(game, cfg.sigma, cfg.samples, held_rng);
      const Eigen::VectorXd y =
          compute_targets(*current, held, spec.gamma, spec.q_max(), cfg.target_clamp);
      double total = 0.0;
      std::vector<int> a(spec.num_agents);
      for (Eigen::Index j = 0; j < held.size(); ++j) {
        for (int i = 0; i < spec.num_agents; ++i) a[i] = held.actions(i, j);
        const double e = (*step.critic)(held.states.col(j), a) - y[j];
        total += e * e;
      }
      row.eps_k = std::sqrt(total / static_cast<double>(held.size()));
    }
    if (cfg.record_wall_time) {
      row.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    result.report.rows.push_back(row);
    current = std::move(step.critic);
    if (observer) observer(k, *current);
  }
  result.critic = std::move(current);
  result.policy = GreedyJointPolicy(result.critic);
  return result;
}

MafqiResult run_mafqi(const Game& game, const FqiConfig& cfg, const TabularGame* oracle,
                      const QTable* qstar, const IterationObserver& observer) {
  NetworkFitter fitter(cfg.width, cfg.fit, cfg.warm_start, cfg.step_decay);
  return run_mafqi(game, cfg, fitter, oracle, qstar, observer);
}

double default_path_norm_budget(int num_agents, double r_max, double gamma, double c2) {
  const double denom = 1.0 - 4.0 * num_agents * num_agents * gamma;
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return 8.0 * num_agents * c2 * r_max / denom;
}

}  // namespace mafqi
