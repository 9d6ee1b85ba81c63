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

#include "mafqi/oracle.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

namespace mafqi {
namespace {

GameSpec make_spec(int n, std::vector<int> actions, double gamma, double r_max = 1.0) {
  GameSpec spec;
  spec.num_agents = n;
  spec.state_dim = 1;
  spec.actions_per_agent = std::move(actions);
  spec.gamma = gamma;
  spec.r_max = r_max;
  return spec;
}

Game table_game(const GameSpec& spec, const std::vector<double>& table) {
  CoupledReward reward;
  reward.table = Eigen::Map<const Eigen::VectorXd>(table.data(), static_cast<Eigen::Index>(table.size()));
  const int dim = spec.joint_state_dim();
  return make_generic_game(reward, {}, MixtureKernel::uniform(dim, dim, spec.num_joint_actions()),
                           spec);
}

// One state, two actions with rewards (0, 1).
TabularGame single_node_game(double gamma) {
  return discretize(table_game(make_spec(1, {2}, gamma), {0.0, 1.0}), 1);
}

TabularGame xnor_game(double gamma = 0.5) {
  return discretize(table_game(make_spec(2, {2, 2}, gamma), {1.0, 0.0, 0.0, 1.0}), 1);
}

QTable random_table(const TabularGame& tg, double scale, Rng& rng) {
  std::uniform_real_distribution<double> unit(-scale, scale);
  QTable q(tg.num_nodes(), tg.num_actions());
  for (Eigen::Index k = 0; k < q.size(); ++k) q.data()[k] = unit(rng);
  return q;
}

TabularPolicy random_policy(const TabularGame& tg, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, tg.num_actions() - 1);
  TabularPolicy pi(tg.num_nodes());
  for (int& a : pi) a = pick(rng);
  return pi;
}

SeparableWeights random_weights(const TabularGame& tg, Rng& rng) {
  SeparableWeights w;
  for (int i = 0; i < tg.spec().num_agents; ++i) {
    Eigen::VectorXd m(tg.local_size(i));
    for (Eigen::Index k = 0; k < m.size(); ++k) m[k] = 0.1 + uniform01(rng);
    w.marginals.push_back(m / m.sum());
  }
  return w;
}

double sup(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

TEST(DiscretizeTest, IdentityKernelGivesIdentityMatrix) {
  const GameSpec spec = make_spec(2, {2, 2}, 0.5);
  const Game game = make_generic_game(
      CoupledReward{}, {}, MixtureKernel::point_mass(ConditionalMap::identity(2, 4)), spec);
  const TabularGame tg = discretize(game, 4);
  const Eigen::MatrixXd p = tg.dense_transition();
  for (int a = 0; a < 4; ++a) {
    EXPECT_EQ(p.middleRows(a * 16, 16), Eigen::MatrixXd::Identity(16, 16));
  }
}

TEST(DiscretizeTest, UniformKernelRowsAreUniform) {
  const TabularGame tg = discretize(table_game(make_spec(2, {2, 2}, 0.5), {0, 0, 0, 0}), 4);
  const Eigen::MatrixXd p = tg.dense_transition();
  ASSERT_EQ(p.cols(), 16);
  EXPECT_LE((p.array() - 1.0 / 16.0).abs().maxCoeff(), 1e-15);
}

TEST(DiscretizeTest, DecomposableRowsAverageComponents) {
  Rng rng(21);
  const Game game = random_decomposable_game(make_spec(2, {2, 3}, 0.9), rng);
  const TabularGame tg = discretize(game, 6);
  ASSERT_TRUE(tg.is_structured());
  const Eigen::MatrixXd p = tg.dense_transition();
  for (int ja = 0; ja < tg.num_actions(); ++ja) {
    const std::vector<int> a = game.spec().decode_action(ja);
    for (int node = 0; node < tg.num_nodes(); ++node) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(tg.num_nodes());
      for (int i = 0; i < 2; ++i) {
        row += game.kernel_components()[i].discretize_row(tg.nodes().col(node).segment(i, 1),
                                                          a[i], 6);
      }
      row /= 2.0;
      EXPECT_LE((p.row(ja * tg.num_nodes() + node).transpose() - row).cwiseAbs().maxCoeff(),
                1e-12);
    }
  }
  EXPECT_LE(((p.rowwise().sum().array()) - 1.0).abs().maxCoeff(), 1e-9);
  EXPECT_GE(p.minCoeff(), 0.0);
  EXPECT_LE(sup(tg.rewards()), game.spec().r_max);
}

TEST(DiscretizeTest, StructuredExpectationMatchesDenseProduct) {
  Rng rng(22);
  const TabularGame tg = discretize(random_decomposable_game(make_spec(2, {2, 2}, 0.9), rng), 8);
  const Eigen::VectorXd v = Eigen::VectorXd::Random(tg.num_nodes());
  const Eigen::VectorXd flat = tg.dense_transition() * v;
  const Eigen::MatrixXd dense = Eigen::Map<const Eigen::MatrixXd>(flat.data(), tg.num_nodes(),
                                                                  tg.num_actions());
  EXPECT_LE(sup(tg.expect(v) - dense), 1e-12);
}

TEST(DiscretizeTest, MemoryCapIsSizeError) {
  Rng rng(23);
  const Game game = random_reverse_engineered_game(make_spec(2, {2, 2}, 0.05), 8, rng);
  EXPECT_THROW(discretize(game, 64, 1000), SizeError);
}

TEST(BellmanTest, ZeroTableGivesRewards) {
  Rng rng(31);
  const TabularGame tg = discretize(random_decomposable_game(make_spec(2, {2, 2}, 0.9), rng), 8);
  const QTable zero = QTable::Zero(tg.num_nodes(), tg.num_actions());
  EXPECT_EQ(bellman_apply(zero, tg), tg.rewards());
}

TEST(BellmanTest, SingleNodeFixedPoint) {
  const TabularGame tg = single_node_game(0.5);
  QTable q(1, 2);
  q << 1.0, 2.0;
  const QTable tq = bellman_apply(q, tg);
  EXPECT_DOUBLE_EQ(tq(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(tq(0, 1), 2.0);
}

TEST(BellmanTest, ShapeMismatchThrows) {
  const TabularGame tg = single_node_game(0.5);
  EXPECT_THROW(bellman_apply(QTable::Zero(2, 2), tg), ShapeError);
}

TEST(BellmanTest, ContractionOnRandomPairs) {
  Rng rng(32);
  const TabularGame tg = discretize(random_decomposable_game(make_spec(2, {2, 2}, 0.9), rng), 8);
  for (int t = 0; t < 100; ++t) {
    const QTable q1 = random_table(tg, 10.0, rng);
    const QTable q2 = random_table(tg, 10.0, rng);
    EXPECT_LE(sup(bellman_apply(q1, tg) - bellman_apply(q2, tg)),
              tg.gamma() * sup(q1 - q2) + 1e-12);
  }
}

TEST(BellmanTest, GreedyBackupDominatesPolicyBackup) {
  Rng rng(33);
  const TabularGame tg = discretize(random_decomposable_game(make_spec(2, {2, 3}, 0.9), rng), 6);
  for (int t = 0; t < 50; ++t) {
    const QTable q = random_table(tg, 5.0, rng);
    const TabularPolicy pi = random_policy(tg, rng);
    const Eigen::MatrixXd greedy = tg.expect(q.rowwise().maxCoeff());
    const Eigen::MatrixXd under = tg.expect(policy_values(q, pi));
    EXPECT_GE((greedy - under).minCoeff(), -1e-12);
  }
}

TEST(ValueIterationTest, ConstantRewardGeometricSeries) {
  const GameSpec spec = make_spec(2, {2, 2}, 0.9);
  const TabularGame tg = discretize(table_game(spec, {1, 1, 1, 1}), 4);
  SolveStats stats;
  const double tol = 1e-9;
  const QTable q = value_iteration(tg, tol, &stats);
  EXPECT_LE((q.array() - 10.0).abs().maxCoeff(), 10 * tol);
  EXPECT_LE(sup(bellman_apply(q, tg) - q), tol);
  const double bound = std::ceil(std::log(2.0 * tg.q_max() / tol) / std::log(1.0 / 0.9)) + 1;
  EXPECT_LE(stats.iterations, bound);
}

TEST(ValueIterationTest, SingleNodeSolve) {
  const QTable q = value_iteration(single_node_game(0.5), 1e-12);
  EXPECT_NEAR(q(0, 0), 1.0, 1e-11);
  EXPECT_NEAR(q(0, 1), 2.0, 1e-11);
}

TEST(ValueIterationTest, ZeroDiscountStopsAtOnce) {
  SolveStats stats;
  const TabularGame tg = xnor_game(0.0);
  EXPECT_EQ(value_iteration(tg, 1e-9, &stats), tg.rewards());
  EXPECT_EQ(stats.iterations, 1);
}

TEST(ValueIterationTest, ReverseEngineeredGameRecoversQstar) {
  Rng rng(41);
  const GameSpec spec = make_spec(2, {2, 2}, 0.05);
  const Game game = random_reverse_engineered_game(spec, 12, rng);
  const TabularGame tg = discretize(game, 12);
  const QTable q = value_iteration(tg, 1e-12);
  double err = 0.0;
  for (int ja = 0; ja < tg.num_actions(); ++ja) {
    const std::vector<int> a = spec.decode_action(ja);
    for (int node = 0; node < tg.num_nodes(); ++node) {
      err = std::max(err, std::abs(q(node, ja) - game.qstar(tg.nodes().col(node), a)));
    }
  }
  EXPECT_LE(err, 1e-10);
}

// Q* = s1 a1 + s2 a2 with the deterministic move s' = (s1 s2, s1 s2).
TEST(ValueIterationTest, PointMassProductKernel) {
  const GameSpec spec = make_spec(2, {2, 2}, 0.5, 2.0);
  LocalFunction f = LocalFunction::zero(1, 2);
  f.parts[1].linear[0] = 1.0;
  ConditionalMap map = ConditionalMap::constant(2, 4, Eigen::VectorXd::Zero(2));
  for (auto& p : map.product) p.setOnes();
  const Game game =
      make_reverse_engineered_game({f, f}, MixtureKernel::point_mass(map), spec, 8);
  for (int r : {8, 16, 32}) {
    const TabularGame tg = discretize(game, r);
    const QTable q = value_iteration(tg, 1e-12);
    double err = 0.0;
    for (int ja = 0; ja < tg.num_actions(); ++ja) {
      const std::vector<int> a = spec.decode_action(ja);
      for (int node = 0; node < tg.num_nodes(); ++node) {
        err = std::max(err, std::abs(q(node, ja) - game.qstar(tg.nodes().col(node), a)));
      }
    }
    // Each backup reads max Q* at a node within 1/r of the true successor in
    // each coordinate; max Q* has slope 1 per coordinate.
    EXPECT_LE(err, spec.gamma / (1.0 - spec.gamma) * 2.0 / r + 1e-10) << "resolution " << r;
  }
}

TEST(PolicyEvalTest, GreedyPolicyOfQstarIsOptimal) {
  Rng rng(51);
  const TabularGame tg = discretize(random_decomposable_game(make_spec(2, {2, 2}, 0.9), rng), 8);
  const QTable qstar = value_iteration(tg, 1e-11);
  const QTable qpi = policy_eval(tg, greedy_policy(qstar));
  EXPECT_LE(sup(qpi - qstar), 1e-8);
}

TEST(PolicyEvalTest, SingleNodeConstantAction) {
  const QTable q = policy_eval(single_node_game(0.5), TabularPolicy{0});
  EXPECT_NEAR(q(0, 0), 0.0, 1e-10);
  EXPECT_NEAR(q(0, 1), 1.0, 1e-10);
}

TEST(PolicyEvalTest, RandomPoliciesAreDominated) {
  Rng rng(52);
  const TabularGame tg = discretize(random_decomposable_game(make_spec(2, {2, 3}, 0.8), rng), 6);
  const QTable qstar = value_iteration(tg, 1e-11);
  for (int t = 0; t < 20; ++t) {
    const QTable qpi = policy_eval(tg, random_policy(tg, rng));
    EXPECT_LE((qpi - qstar).maxCoeff(), 1e-8);
  }
}

TEST(GreedyPolicyTest, TiesGoToLowestIndex) {
  QTable q(2, 3);
  q << 1.0, 1.0, 0.5, 0.0, 2.0, 2.0;
  const TabularPolicy pi = greedy_policy(q);
  EXPECT_EQ(pi[0], 0);
  EXPECT_EQ(pi[1], 1);
}

TEST(ProjectionTest, DecomposableTableIsFixed) {
  Rng rng(61);
  const TabularGame tg = discretize(random_decomposable_game(make_spec(2, {2, 3}, 0.5), rng), 8);
  std::vector<Eigen::VectorXd> locals;
  for (int i = 0; i < 2; ++i) locals.push_back(Eigen::VectorXd::Random(tg.local_size(i)));
  const QTable q = assemble_additive(tg, locals);
  const ProjectionResult p = exact_decomposable_projection(q, tg, random_weights(tg, rng));
  EXPECT_LE(sup(p.projected - q), 1e-10);
  EXPECT_LE(p.residual_l2, 1e-10);
}

TEST(ProjectionTest, XnorProjectsToOneHalf) {
  const TabularGame tg = xnor_game();
  const ProjectionResult p = exact_decomposable_projection(tg.rewards(), tg);
  EXPECT_LE((p.projected.array() - 0.5).abs().maxCoeff(), 1e-15);
  EXPECT_NEAR(p.residual_l2 * p.residual_l2, 0.25, 1e-12);
  EXPECT_NEAR(p.residual_sup, 0.5, 1e-15);
}

TEST(ProjectionTest, ProductFunctionMatchesMarginalIntegrals) {
  const TabularGame tg = discretize(table_game(make_spec(2, {1, 1}, 0.5), {0.0}), 32);
  QTable q(tg.num_nodes(), 1);
  for (int node = 0; node < tg.num_nodes(); ++node) {
    q(node, 0) = tg.nodes()(0, node) * tg.nodes()(1, node);
  }
  const ProjectionResult p = exact_decomposable_projection(q, tg);
  EXPECT_NEAR(p.constant, 0.25, 1e-14);
  for (int node = 0; node < tg.num_nodes(); ++node) {
    const double x1 = tg.nodes()(0, node);
    const double x2 = tg.nodes()(1, node);
    EXPECT_NEAR(p.projected(node, 0), x1 / 2 + x2 / 2 - 0.25, 1e-12);
  }
  EXPECT_LE(sup(lstsq_decomposable_projection(q, tg, SeparableWeights::uniform(tg)) -
                p.projected),
            1e-8);
}

TEST(ProjectionTest, ClosedFormAgreesWithNormalEquations) {
  Rng rng(62);
  const TabularGame tg = discretize(random_decomposable_game(make_spec(2, {2, 2}, 0.5), rng), 16);
  for (int t = 0; t < 10; ++t) {
    const QTable q = random_table(tg, 3.0, rng);
    const SeparableWeights w = random_weights(tg, rng);
    const ProjectionResult p = exact_decomposable_projection(q, tg, w);
    EXPECT_LE(sup(lstsq_decomposable_projection(q, tg, w) - p.projected), 1e-8);
  }
}

TEST(ProjectionTest, IdempotentAndLipschitz) {
  Rng rng(63);
  for (int n : {2, 3}) {
    const GameSpec spec = make_spec(n, std::vector<int>(n, 2), 0.5);
    const TabularGame tg = discretize(table_game(spec, std::vector<double>(1 << n, 0.0)), 4);
    for (int t = 0; t < 50; ++t) {
      const QTable q1 = random_table(tg, 2.0, rng);
      const QTable q2 = random_table(tg, 2.0, rng);
      const SeparableWeights w = random_weights(tg, rng);
      const QTable p1 = exact_decomposable_projection(q1, tg, w).projected;
      const QTable p2 = exact_decomposable_projection(q2, tg, w).projected;
      EXPECT_LE(sup(exact_decomposable_projection(p1, tg, w).projected - p1), 1e-10);
      EXPECT_LE(sup(p1 - p2), (2 * n - 1) * sup(q1 - q2) + 1e-12);
    }
  }
}

TEST(ProjectionTest, NonProductWeightsAreRejected) {
  const TabularGame tg = xnor_game();
  Eigen::MatrixXd w(1, 4);
  w << 0.4, 0.1, 0.1, 0.4;
  EXPECT_THROW(SeparableWeights::from_joint(w, tg), PreconditionError);
  w << 0.12, 0.28, 0.18, 0.42;
  const SeparableWeights ok = SeparableWeights::from_joint(w, tg);
  EXPECT_NEAR(ok.marginals[0][1], 0.6, 1e-15);
  EXPECT_NEAR(ok.marginals[1][1], 0.7, 1e-15);
}

TEST(DecomposabilityResidualTest, DecomposableGamesAnyTable) {
  Rng rng(71);
  for (int g = 0; g < 3; ++g) {
    const TabularGame tg =
        discretize(random_decomposable_game(make_spec(2, {2, 2}, 0.9), rng), 16);
    for (int t = 0; t < 20; ++t) {
      EXPECT_LE(tq_decomposability_residual(random_table(tg, tg.q_max(), rng), tg).residual_l2,
                1e-8);
    }
  }
}

TEST(DecomposabilityResidualTest, XnorWitness) {
  const TabularGame tg = xnor_game();
  const ProjectionResult r =
      tq_decomposability_residual(QTable::Zero(1, 4), tg);
  EXPECT_NEAR(r.residual_l2 * r.residual_l2, 0.25, 1e-10);
}

TEST(DecomposabilityResidualTest, ZeroDiscountHidesKernel) {
  Rng rng(72);
  const GameSpec spec = make_spec(2, {2, 2}, 0.0);
  CoupledReward reward;
  reward.locals = {random_local_function(1, 2, 0.4, rng), random_local_function(1, 2, 0.4, rng)};
  const Game game = make_generic_game(reward, {}, random_coupled_kernel(spec, rng), spec);
  const TabularGame tg = discretize(game, 8);
  for (int t = 0; t < 10; ++t) {
    EXPECT_LE(tq_decomposability_residual(random_table(tg, 1.0, rng), tg).residual_l2, 1e-8);
  }
}

TEST(DecomposabilityResidualTest, GenericGameHasWitness) {
  Rng rng(73);
  const GameSpec spec = make_spec(2, {2, 2}, 0.9);
  CoupledReward reward;
  reward.coupling = 0.3;
  const Game game = make_generic_game(reward, {}, random_coupled_kernel(spec, rng), spec);
  const TabularGame tg = discretize(game, 8);
  double best = 0.0;
  for (int t = 0; t < 100; ++t) {
    best = std::max(best, tq_decomposability_residual(random_table(tg, tg.q_max(), rng), tg)
                              .residual_l2);
  }
  EXPECT_GT(best, 1e-3);
}

TEST(QTableIoTest, BinaryRoundTripIsExact) {
  Rng rng(81);
  QTable q(7, 3);
  for (Eigen::Index k = 0; k < q.size(); ++k) q.data()[k] = uniform01(rng) - 0.5;
  q(2, 1) = -0.0;
  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "mafqi_qtable_test.bin").string();
  write_qtable_binary(path, q);
  const QTable back = read_qtable_binary(path);
  ASSERT_EQ(back.rows(), 7);
  ASSERT_EQ(back.cols(), 3);
  EXPECT_EQ(std::memcmp(back.data(), q.data(), sizeof(double) * q.size()), 0);
  EXPECT_EQ(std::filesystem::file_size(path), 8u + 16u + 8u * 21u);
  std::filesystem::remove(path);
  EXPECT_THROW(read_qtable_binary(path), MissingArtifactError);
  const std::string csv = (dir / "mafqi_qtable_test.csv").string();
  write_qtable_csv(csv, q);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "node,a0,a1,a2");
  std::filesystem::remove(csv);
}

}  // namespace
}  // namespace mafqi
