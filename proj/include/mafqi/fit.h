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

#ifndef MAFQI_FIT_H_
#define MAFQI_FIT_H_

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mafqi/network.h"

namespace mafqi {

// Regression samples in columns: joint states (N d x n), joint actions
// (N x n) and targets.
struct RegressionData {
  Eigen::MatrixXd states;
  Eigen::MatrixXi actions;
  Eigen::VectorXd targets;

  Eigen::Index size() const { return targets.size(); }
};

struct FitConfig {
  int epochs = 60;
  int batch_size = 64;
  double step_size = 0.05;
  // Cosine decay ends at step_size * final_step_fraction.
  double final_step_fraction = 0.02;
  double path_norm_budget = 1e3;
  double penalty = 1e-2;
  std::uint64_t seed = 0;
  // Stop once the truncated training MSE drops below this.
  double early_stop_tol = 0.0;

  // Throws ConfigError naming the field.
  void validate() const;
};

struct FitResult {
  DecomposedQ critic;
  double train_loss = 0.0;  // MSE of the truncated outputs
  std::vector<double> epoch_losses;
  // Epochs whose loss rose by more than 1e-9; diagnostic only.
  int monotonicity_violations = 0;
};

// Mini-batch gradient descent on the squared loss of the additive critic,
// starting from `init`, with penalty lambda * max(0, path_norm - B)^2 per
// agent. Output weights are rescaled at the end so every head has path norm
// at most B. Deterministic given cfg.seed.
FitResult fit_least_squares(const RegressionData& data, const FitConfig& cfg,
                            const DecomposedQ& init);

double mean_squared_error(const AdditiveCritic& q, const RegressionData& data);
double mean_squared_error(const DecomposedQ& q, const RegressionData& data);

// Truncated Q_tot on the columns of (states, actions).
Eigen::VectorXd predict(const DecomposedQ& q, const Eigen::MatrixXd& states,
                        const Eigen::MatrixXi& actions);

}  // namespace mafqi

#endif  // MAFQI_FIT_H_
