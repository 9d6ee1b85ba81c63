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

#ifndef MAFQI_EXPERIMENTS_H_
#define MAFQI_EXPERIMENTS_H_

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mafqi/analysis.h"
#include "mafqi/fqi.h"

namespace mafqi {

// N agents on [0,1]^d with two actions each, r_max = 1.
GameSpec small_spec(int num_agents, int state_dim, double gamma, GameKind kind);

// Oracle-backed MA-FQI run. The policy-gap check is evaluated for the
// critic of every iterate k = 0..K.
struct OracleRun {
  QTable qstar;
  MafqiResult result;
  std::vector<BoundReport> policy_gaps;
};

OracleRun run_with_oracle(const Game& game, const TabularGame& tg, const FqiConfig& cfg,
                          double vi_tol = 1e-12);

// Decomposable convergence run: gamma 0.9, width 64, K = 30, n = 4096,
// oracle resolution 64.
struct DecomposableSetup {
  int resolution = 64;
  FqiConfig fqi;
};
DecomposableSetup decomposable_setup(std::uint64_t seed);
Game decomposable_game(std::uint64_t seed);

// Reverse-engineered game with decomposable Q*: gamma 0.05, K = 10,
// n = 4096, oracle resolution 32.
struct NonDecomposableSetup {
  int resolution = 32;
  FqiConfig fqi;
};
NonDecomposableSetup nondecomposable_setup(std::uint64_t seed);
Game nondecomposable_game(std::uint64_t seed);

// Iterations k > first whose sup error exceeds (1 + band) times that of
// iteration k - 1. Rows are the report rows (k = 1..K).
std::vector<int> monotonicity_breaks(const ConvergenceReport& report, int first, double band);

// Teacher-student regression: a random truncated teacher on [0,1]^d, a
// single-head student fitted on n samples and scored on a fresh sample.
struct TeacherStudentConfig {
  int dim = 1;
  int teacher_width = 8;
  int student_width = 32;
  int train = 512;
  int fresh = 20000;
  double bound = 1.0;  // |teacher|, |student| <= bound
  double noise = 0.1;
  FitConfig fit;
};

struct TeacherStudentRun {
  TwoLayerNet student;
  Eigen::MatrixXd train_x;
  Eigen::VectorXd train_y;
  Eigen::MatrixXd fresh_x;
  Eigen::VectorXd fresh_y;
};

TeacherStudentRun teacher_student(const TeacherStudentConfig& cfg, std::uint64_t seed);
BoundReport teacher_student_bound(const TeacherStudentConfig& cfg, std::uint64_t seed,
                                  double delta);

// Sum of tents with an interior peak: the Lipschitz constant is certified by
// the sum of slopes and the radius condition holds by construction.
struct TentMixture {
  int dim = 1;
  std::vector<Eigen::VectorXd> centers;
  std::vector<double> heights;
  std::vector<double> slopes;

  double operator()(const ConstVecRef& x) const;
  double lipschitz() const;
  Eigen::VectorXd on_grid(int resolution) const;
};
TentMixture random_interior_tents(int dim, Rng& rng);

}  // namespace mafqi

#endif  // MAFQI_EXPERIMENTS_H_
