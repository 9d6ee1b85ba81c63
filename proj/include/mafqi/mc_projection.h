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

#ifndef MAFQI_MC_PROJECTION_H_
#define MAFQI_MC_PROJECTION_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mafqi/game.h"
#include "mafqi/network.h"

namespace mafqi {

using JointFunction = std::function<double(const ConstVecRef&, std::span<const int>)>;

struct McProjectionConfig {
  int samples_per_marginal = 1000;
  std::uint64_t seed = 0;
  // Cap on calls to f over the lifetime of the projection.
  std::size_t eval_budget = std::numeric_limits<std::size_t>::max();
};

struct McEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

// Projection of a black-box joint function onto additive functions under a
// separable sigma (uniform states, per-agent action distributions):
//   Proj f = sum_i f_i(s_i, a_i) - (N - 1) C,
//   f_i = E[f | x_i], C = E[f].
// The expectations reuse one stored set of n_mc joint draws, so an
// additive f is reproduced up to rounding. local_values folds -(N-1) C into
// agent 0. Evaluation is not thread-safe (it counts calls).
class McProjection : public AdditiveCritic {
 public:
  // `action_probs` may be empty (uniform actions).
  McProjection(JointFunction f, GameSpec spec, std::vector<Eigen::VectorXd> action_probs,
               McProjectionConfig cfg);

  int num_agents() const override { return spec_.num_agents; }
  int state_dim() const override { return spec_.state_dim; }
  Eigen::VectorXd local_values(int agent, const ConstVecRef& s_i) const override;

  McEstimate component(int agent, const ConstVecRef& s_i, int a_i) const;
  McEstimate constant() const { return constant_; }
  // Projected value; the error combines component errors as if independent.
  McEstimate value(const ConstVecRef& s, std::span<const int> a) const;
  std::size_t evaluations() const { return evaluations_; }

 private:
  double call(const ConstVecRef& s, std::span<const int> a) const;

  JointFunction f_;
  GameSpec spec_;
  McProjectionConfig cfg_;
  Eigen::MatrixXd draw_states_;   // joint states in columns
  Eigen::MatrixXi draw_actions_;  // N x n_mc
  McEstimate constant_;
  mutable std::size_t evaluations_ = 0;
};

}  // namespace mafqi

#endif  // MAFQI_MC_PROJECTION_H_
