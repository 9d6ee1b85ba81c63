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

#include "mafqi/experiments.h"

#include <algorithm>
#include <random>

#include "mafqi/fit.h"

namespace mafqi {

GameSpec small_spec(int num_agents, int state_dim, double gamma, GameKind kind) {
  GameSpec spec;
  spec.num_agents = num_agents;
  spec.state_dim = state_dim;
  spec.actions_per_agent.assign(num_agents, 2);
  spec.gamma = gamma;
  spec.r_max = 1.0;
  spec.kind = kind;
  return spec;
}

OracleRun run_with_oracle(const Game& game, const TabularGame& tg, const FqiConfig& cfg,
                          double vi_tol) {
  OracleRun run;
  run.qstar = value_iteration(tg, vi_tol);
  auto observe = [&](int k, const AdditiveCritic& q) {
    BoundReport r = check_policy_gap(run.qstar, critic_on_grid(q, tg), tg);
    r.inputs["k"] = k;
    run.policy_gaps.push_back(std::move(r));
  };
  run.result = run_mafqi(game, cfg, &tg, &run.qstar, observe);
  return run;
}

DecomposableSetup decomposable_setup(std::uint64_t seed) {
  DecomposableSetup s;
  s.fqi.iterations = 30;
  s.fqi.samples = 4096;
  s.fqi.width = 64;
  s.fqi.seed = seed;
  s.fqi.fit.epochs = 50;
  s.fqi.fit.step_size = 0.1;
  return s;
}

Game decomposable_game(std::uint64_t seed) {
  Rng rng = derive_stream(seed, 7, 0);
  return random_decomposable_game(small_spec(2, 1, 0.9, GameKind::kDecomposable), rng);
}

NonDecomposableSetup nondecomposable_setup(std::uint64_t seed) {
  NonDecomposableSetup s;
  s.fqi.iterations = 10;
  s.fqi.samples = 4096;
  s.fqi.width = 64;
  s.fqi.seed = seed;
  s.fqi.fit.epochs = 50;
  s.fqi.fit.step_size = 0.1;
  return s;
}

Game nondecomposable_game(std::uint64_t seed) {
  Rng rng = derive_stream(seed, 8, 0);
  return random_reverse_engineered_game(small_spec(2, 1, 0.05, GameKind::kReverseEngineered), 32,
                                        rng);
}

std::vector<int> monotonicity_breaks(const ConvergenceReport& report, int first, double band) {
  std::vector<int> breaks;
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    const IterationRecord& prev = report.rows[i - 1];
    const IterationRecord& row = report.rows[i];
    if (row.k <= first) continue;
    if (row.sup_err > (1.0 + band) * prev.sup_err) breaks.push_back(row.k);
  }
  return breaks;
}

TeacherStudentRun teacher_student(const TeacherStudentConfig& cfg, std::uint64_t seed) {
  Rng teacher_rng = derive_stream(seed, 12, 0);
  const TwoLayerNet teacher =
      random_net(cfg.dim, cfg.teacher_width, 1, cfg.bound, teacher_rng);
  Rng data_rng = derive_stream(seed, 12, 1);
  std::normal_distribution<double> noise(0.0, cfg.noise);
  auto draw = [&](int n, Eigen::MatrixXd& x, Eigen::VectorXd& y) {
    x.resize(cfg.dim, n);
    y.resize(n);
    for (int j = 0; j < n; ++j) {
      for (int r = 0; r < cfg.dim; ++r) x(r, j) = uniform01(data_rng);
      const double v = teacher(x.col(j), 0) + (cfg.noise > 0.0 ? noise(data_rng) : 0.0);
      y[j] = std::clamp(v, -cfg.bound, cfg.bound);
    }
  };
  TeacherStudentRun run;
  draw(cfg.train, run.train_x, run.train_y);
  draw(cfg.fresh, run.fresh_x, run.fresh_y);

  Rng init_rng = derive_stream(seed, 12, 2);
  const std::vector<int> actions{1};
  const DecomposedQ init =
      DecomposedQ::zero_function(cfg.dim, actions, cfg.student_width, cfg.bound, init_rng);
  RegressionData data{run.train_x, Eigen::MatrixXi::Zero(1, cfg.train), run.train_y};
  FitConfig fit = cfg.fit;
  fit.seed = mix_seed(seed ^ 12);
  run.student = fit_least_squares(data, fit, init).critic.agent(0);
  return run;
}

BoundReport teacher_student_bound(const TeacherStudentConfig& cfg, std::uint64_t seed,
                                  double delta) {
  const TeacherStudentRun run = teacher_student(cfg, seed);
  BoundReport r = generalization_gap_check(run.student, run.train_x, run.train_y, run.fresh_x,
                                           run.fresh_y, squared_loss_bound(cfg.bound),
                                           squared_loss_lipschitz(cfg.bound), delta);
  r.inputs["seed"] = static_cast<double>(seed);
  return r;
}

double TentMixture::operator()(const ConstVecRef& x) const {
  double total = 0.0;
  for (std::size_t j = 0; j < centers.size(); ++j) {
    total += std::max(0.0, heights[j] - slopes[j] * (x - centers[j]).norm());
  }
  return total;
}

double TentMixture::lipschitz() const {
  double total = 0.0;
  for (double s : slopes) total += s;
  return total;
}

Eigen::VectorXd TentMixture::on_grid(int resolution) const {
  const Eigen::MatrixXd nodes = midpoint_grid(dim, resolution);
  Eigen::VectorXd v(nodes.cols());
  for (Eigen::Index k = 0; k < nodes.cols(); ++k) v[k] = (*this)(nodes.col(k));
  return v;
}

TentMixture random_interior_tents(int dim, Rng& rng) {
  // Centres in [0.4, 0.6]^d, heights <= 0.1 and slopes >= 1 keep the
  // support, hence the maximizer, in [0.3, 0.7]^d, and ||f||_inf / L <= 0.1.
  std::uniform_real_distribution<double> centre(0.4, 0.6), height(0.02, 0.1), slope(1.0, 4.0);
  std::uniform_int_distribution<int> count(1, 3);
  TentMixture f;
  f.dim = dim;
  const int m = count(rng);
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd c(dim);
    for (int r = 0; r < dim; ++r) c[r] = centre(rng);
    f.centers.push_back(c);
    f.heights.push_back(height(rng));
    f.slopes.push_back(slope(rng));
  }
  return f;
}

}  // namespace mafqi
