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

#include "mafqi/mc_projection.h"

#include <cmath>
#include <string>

namespace mafqi {
namespace {

McEstimate mean_and_error(const Eigen::VectorXd& v) {
  const double n = static_cast<double>(v.size());
  const double mean = v.mean();
  const double var = (v.array() - mean).square().sum() / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

}  // namespace

McProjection::McProjection(JointFunction f, GameSpec spec,
                           std::vector<Eigen::VectorXd> action_probs, McProjectionConfig cfg)
    : f_(std::move(f)), spec_(std::move(spec)), cfg_(cfg) {
  spec_.validate();
  const int n = cfg_.samples_per_marginal;
  if (n < 2) throw PreconditionError("mc projection: samples_per_marginal must be at least 2");
  if (static_cast<std::size_t>(n) > cfg_.eval_budget) {
    throw PreconditionError("mc projection: eval_budget is below samples_per_marginal");
  }
  const int agents = spec_.num_agents;
  if (!action_probs.empty() && static_cast<int>(action_probs.size()) != agents) {
    throw ShapeError("mc projection: one action distribution per agent expected");
  }
  std::vector<std::discrete_distribution<int>> pick;
  for (int i = 0; i < agents; ++i) {
    const int k = spec_.actions_per_agent[i];
    if (action_probs.empty()) {
      const std::vector<double> ones(k, 1.0);
      pick.emplace_back(ones.begin(), ones.end());
      continue;
    }
    const Eigen::VectorXd& p = action_probs[i];
    if (p.size() != k || (p.array() < 0.0).any() || !(p.sum() > 0.0)) {
      throw PreconditionError("mc projection: bad action distribution for agent " +
                              std::to_string(i));
    }
    pick.emplace_back(p.data(), p.data() + p.size());
  }

  Rng rng(cfg_.seed);
  draw_states_.resize(spec_.joint_state_dim(), n);
  draw_actions_.resize(agents, n);
  for (int j = 0; j < n; ++j) {
    for (Eigen::Index r = 0; r < draw_states_.rows(); ++r) draw_states_(r, j) = uniform01(rng);
    for (int i = 0; i < agents; ++i) draw_actions_(i, j) = pick[i](rng);
  }

  Eigen::VectorXd vals(n);
  std::vector<int> a(agents);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < agents; ++i) a[i] = draw_actions_(i, j);
    vals[j] = call(draw_states_.col(j), a);
  }
  constant_ = mean_and_error(vals);
}

double McProjection::call(const ConstVecRef& s, std::span<const int> a) const {
  if (evaluations_ >= cfg_.eval_budget) {
    throw SizeError("mc projection: eval_budget of " + std::to_string(cfg_.eval_budget) +
                    " evaluations exhausted");
  }
  ++evaluations_;
  return f_(s, a);
}

McEstimate McProjection::component(int agent, const ConstVecRef& s_i, int a_i) const {
  const int d = spec_.state_dim;
  const Eigen::Index n = draw_states_.cols();
  if (s_i.size() != d) throw ShapeError("mc projection: local state has the wrong dimension");
  Eigen::VectorXd s(spec_.joint_state_dim());
  std::vector<int> a(spec_.num_agents);
  Eigen::VectorXd vals(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    s = draw_states_.col(j);
    s.segment(agent * d, d) = s_i;
    for (int i = 0; i < spec_.num_agents; ++i) a[i] = draw_actions_(i, j);
    a[agent] = a_i;
    vals[j] = call(s, a);
  }
  return mean_and_error(vals);
}

Eigen::VectorXd McProjection::local_values(int agent, const ConstVecRef& s_i) const {
  const int k = spec_.actions_per_agent[agent];
  Eigen::VectorXd out(k);
  for (int a = 0; a < k; ++a) out[a] = component(agent, s_i, a).value;
  if (agent == 0) out.array() -= (spec_.num_agents - 1) * constant_.value;
  return out;
}

McEstimate McProjection::value(const ConstVecRef& s, std::span<const int> a) const {
  const int d = spec_.state_dim;
  const double extra = spec_.num_agents - 1;
  McEstimate out{-extra * constant_.value,
                 extra * extra * constant_.standard_error * constant_.standard_error};
  for (int i = 0; i < spec_.num_agents; ++i) {
    const McEstimate c = component(i, s.segment(i * d, d), a[i]);
    out.value += c.value;
    out.standard_error += c.standard_error * c.standard_error;
  }
  out.standard_error = std::sqrt(out.standard_error);
  return out;
}

}  // namespace mafqi
