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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "mafqi/barron.h"
#include "mafqi/fit.h"
#include "mafqi/mc_projection.h"
#include "mafqi/network.h"
#include "mafqi/oracle.h"

namespace mafqi {
namespace {

// Q_i(s_i, a_i) = values[i][a_i] regardless of the state.
class ConstantCritic : public AdditiveCritic {
 public:
  explicit ConstantCritic(std::vector<Eigen::VectorXd> values) : values_(std::move(values)) {}
  int num_agents() const override { return static_cast<int>(values_.size()); }
  int state_dim() const override { return 1; }
  Eigen::VectorXd local_values(int agent, const ConstVecRef&) const override {
    return values_[agent];
  }

 private:
  std::vector<Eigen::VectorXd> values_;
};

GameSpec spec_n(int n, int actions) {
  GameSpec spec;
  spec.num_agents = n;
  spec.state_dim = 1;
  spec.actions_per_agent.assign(n, actions);
  spec.gamma = 0.5;
  return spec;
}

RegressionData teacher_data(const TwoLayerNet& teacher, int n, Rng& rng) {
  const DecomposedQ tq(teacher.input_dim(), {teacher});
  RegressionData data;
  data.states.resize(teacher.input_dim(), n);
  data.actions.resize(1, n);
  data.targets.resize(n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < teacher.input_dim(); ++k) data.states(k, j) = uniform01(rng);
    const std::vector<int> a = {j % teacher.num_heads()};
    data.actions(0, j) = a[0];
    data.targets[j] = tq(data.states.col(j), a);
  }
  return data;
}

TEST(PathNormTest, ZeroNetIsZero) {
  EXPECT_EQ(path_norm(TwoLayerNet(3, 8, 2)), 0.0);
}

TEST(PathNormTest, SingleNeuron) {
  TwoLayerNet net(2, 1, 1);
  net.head(0).a[0] = 2.0;
  net.head(0).b.row(0) << 1.0, -1.0;
  net.head(0).c[0] = 0.5;
  EXPECT_DOUBLE_EQ(path_norm(net), 5.0);
}

TEST(PathNormTest, MaximizedOverHeads) {
  TwoLayerNet net(1, 1, 2);
  net.head(0).a[0] = 1.0;
  net.head(0).b(0, 0) = 1.0;
  net.head(1).a[0] = -3.0;
  net.head(1).b(0, 0) = 1.0;
  EXPECT_DOUBLE_EQ(path_norm(net), 3.0);
}

TEST(PathNormTest, BoundsLipschitzConstant) {
  Rng rng(11);
  const TwoLayerNet net = random_net(3, 16, 1, std::numeric_limits<double>::infinity(), rng);
  const double pn = path_norm(net);
  for (int k = 0; k < 1000; ++k) {
    Eigen::VectorXd x(3), y(3);
    for (int j = 0; j < 3; ++j) {
      x[j] = 4.0 * uniform01(rng) - 2.0;
      y[j] = 4.0 * uniform01(rng) - 2.0;
    }
    EXPECT_LE(std::abs(net(x, 0) - net(y, 0)), pn * (x - y).lpNorm<Eigen::Infinity>() + 1e-12);
  }
}

TEST(PathNormTest, EnforceRescalesOntoBudget) {
  Rng rng(3);
  TwoLayerNet net = random_net(2, 32, 3, 1.0, rng);
  for (int h = 0; h < 3; ++h) net.head(h).a *= 100.0;
  enforce_path_norm(net, 0.5);
  EXPECT_LE(path_norm(net), 0.5 + 1e-12);
}

TEST(NetworkTest, TruncationKeepsOutputInRange) {
  Rng rng(4);
  TwoLayerNet net = random_net(1, 8, 1, 0.01, rng);
  net.head(0).a *= 1e3;
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd x(1);
    x[0] = uniform01(rng);
    EXPECT_LE(std::abs(net(x, 0)), 0.01);
  }
}

TEST(NetworkTest, ZeroFunctionEvaluatesToZero) {
  Rng rng(5);
  const int actions[] = {2, 3};
  const DecomposedQ q = DecomposedQ::zero_function(2, actions, 16, 1.0, rng);
  Eigen::VectorXd s(4);
  s << 0.1, 0.7, 0.3, 0.9;
  const std::vector<int> a = {1, 2};
  EXPECT_EQ(decomposed_eval(q, s, a), 0.0);
  EXPECT_EQ(q.path_norm_max(), 0.0);
}

TEST(DecomposedEvalTest, SumsComponents) {
  const ConstantCritic q({Eigen::Vector2d(0.3, 0.0), Eigen::Vector2d(0.0, -0.1)});
  const std::vector<int> a = {0, 1};
  EXPECT_DOUBLE_EQ(decomposed_eval(q, Eigen::Vector2d(0.5, 0.5), a), 0.2);
}

TEST(DecomposedEvalTest, PermutingAgentsLeavesTotalUnchanged) {
  Rng rng(6);
  std::vector<TwoLayerNet> nets = {random_net(1, 8, 2, 5.0, rng), random_net(1, 8, 2, 5.0, rng)};
  const DecomposedQ q(1, nets);
  const DecomposedQ swapped(1, {nets[1], nets[0]});
  const std::vector<int> a = {0, 1};
  const std::vector<int> b = {1, 0};
  EXPECT_DOUBLE_EQ(q(Eigen::Vector2d(0.2, 0.8), a), swapped(Eigen::Vector2d(0.8, 0.2), b));
}

TEST(IgmTest, SeparatesAcrossAgents) {
  const ConstantCritic q({Eigen::Vector2d(0.1, 0.9), Eigen::Vector2d(0.5, 0.2)});
  EXPECT_EQ(igm_argmax(q, Eigen::Vector2d(0.0, 0.0)), (std::vector<int>{1, 0}));
}

TEST(IgmTest, TiesGoToLowestIndex) {
  const ConstantCritic q({Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(),
                          Eigen::Vector3d::Zero()});
  EXPECT_EQ(igm_argmax(q, Eigen::Vector3d::Zero()), (std::vector<int>{0, 0, 0}));
}

TEST(IgmTest, MatchesJointEnumeration) {
  Rng rng(7);
  const GameSpec spec = spec_n(3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TwoLayerNet> nets;
    for (int i = 0; i < 3; ++i) nets.push_back(random_net(1, 4, 3, 10.0, rng));
    const DecomposedQ q(1, nets);
    Eigen::VectorXd s(3);
    for (int j = 0; j < 3; ++j) s[j] = uniform01(rng);
    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int ja = 0; ja < spec.num_joint_actions(); ++ja) {
      const double v = q(s, spec.decode_action(ja));
      if (v > best_val) {
        best_val = v;
        best = ja;
      }
    }
    EXPECT_EQ(igm_argmax(q, s), spec.decode_action(best));
  }
}

TEST(FitTest, ZeroTargetsStayAtZero) {
  Rng rng(8);
  const int actions[] = {2};
  const DecomposedQ init = DecomposedQ::zero(1, actions, 8, 1.0);
  RegressionData data;
  data.states = Eigen::MatrixXd::Random(1, 64).cwiseAbs();
  data.actions = Eigen::MatrixXi::Zero(1, 64);
  data.targets = Eigen::VectorXd::Zero(64);
  FitConfig cfg;
  cfg.epochs = 5;
  const FitResult r = fit_least_squares(data, cfg, init);
  EXPECT_EQ(r.train_loss, 0.0);
  EXPECT_EQ(r.critic.path_norm_max(), 0.0);
}

TEST(FitTest, TeacherStudentReachesLowError) {
  Rng rng(9);
  TwoLayerNet teacher = random_net(1, 4, 2, 10.0, rng);
  for (int h = 0; h < 2; ++h) teacher.head(h).a *= 4.0;
  const RegressionData data = teacher_data(teacher, 1024, rng);
  const int actions[] = {2};
  const DecomposedQ init = DecomposedQ::zero_function(1, actions, 64, 10.0, rng);
  FitConfig cfg;
  cfg.epochs = 400;
  cfg.step_size = 0.1;
  cfg.seed = 9;
  const FitResult r = fit_least_squares(data, cfg, init);
  EXPECT_LE(r.train_loss, 1e-3);
  EXPECT_LE(r.critic.path_norm_max(), cfg.path_norm_budget + 1e-9);
}

TEST(FitTest, SameSeedIsBitIdentical) {
  Rng rng(10);
  const TwoLayerNet teacher = random_net(2, 4, 2, 10.0, rng);
  const RegressionData data = teacher_data(teacher, 256, rng);
  const int actions[] = {2};
  const DecomposedQ init = DecomposedQ::zero_function(2, actions, 16, 10.0, rng);
  FitConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 77;
  const FitResult a = fit_least_squares(data, cfg, init);
  const FitResult b = fit_least_squares(data, cfg, init);
  for (int h = 0; h < 2; ++h) {
    EXPECT_EQ(a.critic.agent(0).head(h).a, b.critic.agent(0).head(h).a);
    EXPECT_EQ(a.critic.agent(0).head(h).b, b.critic.agent(0).head(h).b);
    EXPECT_EQ(a.critic.agent(0).head(h).c, b.critic.agent(0).head(h).c);
  }
}

TEST(FitTest, BudgetIsEnforced) {
  Rng rng(12);
  TwoLayerNet teacher = random_net(1, 4, 1, 10.0, rng);
  teacher.head(0).a *= 20.0;
  const RegressionData data = teacher_data(teacher, 256, rng);
  const int actions[] = {1};
  const DecomposedQ init = DecomposedQ::zero_function(1, actions, 16, 10.0, rng);
  FitConfig cfg;
  cfg.epochs = 20;
  cfg.path_norm_budget = 0.25;
  const FitResult r = fit_least_squares(data, cfg, init);
  EXPECT_LE(r.critic.path_norm_max(), 0.25 + 1e-12);
}

TEST(FitTest, Errors) {
  const int actions[] = {1};
  const DecomposedQ init = DecomposedQ::zero(1, actions, 4, 1.0);
  RegressionData empty;
  empty.states.resize(1, 0);
  empty.actions.resize(1, 0);
  EXPECT_THROW(fit_least_squares(empty, FitConfig{}, init), InputError);
  FitConfig bad;
  bad.step_size = -1.0;
  EXPECT_THROW(bad.validate(), ConfigError);

  // The squared loss overflows.
  RegressionData data;
  data.states = Eigen::MatrixXd::Constant(1, 4, 0.5);
  data.actions = Eigen::MatrixXi::Zero(1, 4);
  data.targets = Eigen::VectorXd::Constant(4, 1e200);
  FitConfig huge;
  huge.epochs = 3;
  Rng rng(1);
  const DecomposedQ live = DecomposedQ::zero_function(1, actions, 4, 1.0, rng);
  EXPECT_THROW(fit_least_squares(data, huge, live), DivergenceError);
}

TEST(CheckpointTest, RoundTrip) {
  Rng rng(13);
  std::vector<TwoLayerNet> nets = {random_net(2, 8, 2, 1.5, rng), random_net(2, 8, 3, 1.5, rng)};
  const DecomposedQ q(2, nets);
  const auto path = std::filesystem::temp_directory_path() / "mafqi_ckpt_test.bin";
  save_checkpoint(path.string(), q);
  const DecomposedQ back = load_checkpoint(path.string());
  ASSERT_EQ(back.num_agents(), 2);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(back.agent(i).clamp(), 1.5);
    for (int h = 0; h < q.agent(i).num_heads(); ++h) {
      EXPECT_EQ(back.agent(i).head(h).a, q.agent(i).head(h).a);
      EXPECT_EQ(back.agent(i).head(h).b, q.agent(i).head(h).b);
      EXPECT_EQ(back.agent(i).head(h).c, q.agent(i).head(h).c);
    }
  }
  std::filesystem::remove(path);
}

TEST(CheckpointTest, MissingAndCorrupt) {
  EXPECT_THROW(load_checkpoint("/nonexistent/mafqi.bin"), MissingArtifactError);
  const auto path = std::filesystem::temp_directory_path() / "mafqi_ckpt_bad.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "not a checkpoint";
  }
  EXPECT_THROW(load_checkpoint(path.string()), InputError);
  std::filesystem::remove(path);
}

double product_fn(const ConstVecRef& s, std::span<const int>) { return s[0] * s[1]; }

TEST(McProjectionTest, ProductHasHalfComponents) {
  McProjectionConfig cfg;
  cfg.samples_per_marginal = 100000;
  cfg.seed = 21;
  const McProjection p(product_fn, spec_n(2, 1), {}, cfg);
  EXPECT_NEAR(p.constant().value, 0.25, 0.003);
  for (double x : {0.1, 0.5, 0.9}) {
    const McEstimate c = p.component(0, Eigen::VectorXd::Constant(1, x), 0);
    EXPECT_NEAR(c.value, x / 2.0, 4.0 * c.standard_error + 1e-12);
  }
}

TEST(McProjectionTest, AdditiveFunctionIsReproduced) {
  auto f = [](const ConstVecRef& s, std::span<const int> a) {
    return std::sin(3.0 * s[0]) + (a[0] == 1 ? 0.4 : -0.2) + s[1] * s[1] - 0.3 * a[1];
  };
  McProjectionConfig cfg;
  cfg.samples_per_marginal = 200;
  const McProjection p(f, spec_n(2, 2), {}, cfg);
  for (double x : {0.05, 0.35, 0.8}) {
    for (double y : {0.2, 0.6}) {
      for (int a0 = 0; a0 < 2; ++a0) {
        for (int a1 = 0; a1 < 2; ++a1) {
          const std::vector<int> a = {a0, a1};
          const Eigen::Vector2d s(x, y);
          const McEstimate e = p.value(s, a);
          EXPECT_LE(std::abs(e.value - f(s, a)), 3.0 * e.standard_error + 1e-12);
          EXPECT_NEAR(p(s, a), f(s, a), 1e-12);
        }
      }
    }
  }
}

TEST(McProjectionTest, AgreesWithGridProjection) {
  // Piecewise-constant f on a 4 x 4 grid, so the continuous projection is
  // the grid projection.
  const int r = 4;
  Rng rng(22);
  Eigen::MatrixXd table(r * r, 1);
  for (Eigen::Index k = 0; k < table.size(); ++k) table(k, 0) = uniform01(rng);
  auto cell = [r](double x) { return std::min(r - 1, static_cast<int>(x * r)); };
  auto f = [&](const ConstVecRef& s, std::span<const int>) {
    return table(cell(s[0]) * r + cell(s[1]), 0);
  };
  GameSpec spec = spec_n(2, 1);
  const TabularGame tg = TabularGame::from_tables(
      spec, r, Eigen::MatrixXd::Zero(r * r, 1),
      Eigen::MatrixXd::Constant(r * r, r * r, 1.0 / (r * r)));
  const ProjectionResult exact = exact_decomposable_projection(table, tg);
  McProjectionConfig cfg;
  cfg.samples_per_marginal = 20000;
  cfg.seed = 5;
  const McProjection p(f, spec, {}, cfg);
  for (int node = 0; node < r * r; ++node) {
    const Eigen::Vector2d s((node / r + 0.5) / r, (node % r + 0.5) / r);
    const std::vector<int> a = {0, 0};
    const McEstimate e = p.value(s, a);
    EXPECT_LE(std::abs(e.value - exact.projected(node, 0)), 4.0 * e.standard_error);
  }
}

TEST(McProjectionTest, ErrorShrinksLikeInverseRoot) {
  // RMS error of the projected product over seeds, against n_mc.
  std::vector<double> logn, loge;
  for (int n : {100, 400, 1600, 6400}) {
    double total = 0.0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      McProjectionConfig cfg;
      cfg.samples_per_marginal = n;
      cfg.seed = seed;
      const McProjection p(product_fn, spec_n(2, 1), {}, cfg);
      for (double x : {0.25, 0.75}) {
        for (double y : {0.25, 0.75}) {
          const std::vector<int> a = {0, 0};
          const double e = p(Eigen::Vector2d(x, y), a) - (x / 2.0 + y / 2.0 - 0.25);
          total += e * e;
          ++count;
        }
      }
    }
    logn.push_back(std::log(n));
    loge.push_back(0.5 * std::log(total / count));
  }
  const double mx = std::accumulate(logn.begin(), logn.end(), 0.0) / logn.size();
  const double my = std::accumulate(loge.begin(), loge.end(), 0.0) / loge.size();
  double sxy = 0.0, sxx = 0.0;
  for (size_t k = 0; k < logn.size(); ++k) {
    sxy += (logn[k] - mx) * (loge[k] - my);
    sxx += (logn[k] - mx) * (logn[k] - mx);
  }
  EXPECT_NEAR(sxy / sxx, -0.5, 0.15);
}

TEST(McProjectionTest, Preconditions) {
  McProjectionConfig cfg;
  cfg.samples_per_marginal = 1;
  EXPECT_THROW(McProjection(product_fn, spec_n(2, 1), {}, cfg), PreconditionError);
  cfg.samples_per_marginal = 10;
  cfg.eval_budget = 15;
  const McProjection p(product_fn, spec_n(2, 1), {}, cfg);
  EXPECT_THROW(p.component(0, Eigen::VectorXd::Constant(1, 0.5), 0), SizeError);
}

FrequencyMixture cos_minus_one() {
  FrequencyMixture f;
  f.dim = 1;
  f.constant = -1.0;
  f.terms.push_back(CosineTerm{1.0, Eigen::VectorXd::Constant(1, 1.0), 0.0});
  return f;
}

TEST(BarronTest, SpectralNormExamples) {
  EXPECT_DOUBLE_EQ(spectral_norm_gamma(cos_minus_one()), 1.0);
  FrequencyMixture zero;
  EXPECT_EQ(spectral_norm_gamma(zero), 0.0);
  FrequencyMixture g;
  g.dim = 2;
  g.terms.push_back(CosineTerm{3.0, Eigen::Vector2d(1.0, 2.0), 0.0});
  EXPECT_DOUBLE_EQ(spectral_norm_gamma(g), 27.0);
  FrequencyMixture lin;
  lin.linear = Eigen::VectorXd::Constant(1, 1.0);
  EXPECT_THROW(spectral_norm_gamma(lin), UnsupportedError);
}

TEST(BarronTest, NormalizerForCosine) {
  Rng rng(1);
  const BarronApproximation b = barron_monte_carlo_net(cos_minus_one(), 8, rng);
  EXPECT_NEAR(b.v, 2.0 * std::sin(1.0), 1e-14);
}

TEST(BarronTest, ZeroFunctionGivesZeroNet) {
  Rng rng(2);
  FrequencyMixture zero;
  const BarronApproximation b = barron_monte_carlo_net(zero, 16, rng);
  EXPECT_EQ(b.v, 0.0);
  for (double x : {-1.0, 0.0, 0.7}) EXPECT_EQ(b(Eigen::VectorXd::Constant(1, x)), 0.0);
}

double barron_mse(const FrequencyMixture& f, const BarronApproximation& b, int points) {
  double total = 0.0;
  Eigen::VectorXd x(f.dim);
  const int per_dim = f.dim == 1 ? points : static_cast<int>(std::sqrt(points));
  const int count = f.dim == 1 ? per_dim : per_dim * per_dim;
  for (int k = 0; k < count; ++k) {
    int rest = k;
    for (int j = f.dim - 1; j >= 0; --j) {
      x[j] = -1.0 + 2.0 * ((rest % per_dim) + 0.5) / per_dim;
      rest /= per_dim;
    }
    const double e = f(x) - b(x);
    total += e * e;
  }
  return total / count;
}

TEST(BarronTest, LargeWidthApproximatesWell) {
  const FrequencyMixture f = cos_minus_one();
  double mean = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const BarronApproximation b = barron_monte_carlo_net(f, 4096, rng);
    mean += barron_mse(f, b, 512) / 50.0;
    EXPECT_LE(b.sampled_path_norm(), 4.0 * spectral_norm_gamma(f) + 1e-12);
  }
  EXPECT_LE(mean, 16.0 / 4096.0 / 4.0);
}

TEST(BarronTest, ShiftedMultivariateMixture) {
  // Phases, negative amplitudes and a nonzero gradient at the origin.
  FrequencyMixture f;
  f.dim = 2;
  f.constant = 0.3;
  f.terms.push_back(CosineTerm{-0.7, Eigen::Vector2d(1.5, -0.5), 0.4});
  f.terms.push_back(CosineTerm{0.5, Eigen::Vector2d(0.0, 2.0), -1.1});
  Rng rng(31);
  const double gamma = spectral_norm_gamma(f);
  const BarronApproximation b = barron_monte_carlo_net(f, 20000, rng);
  EXPECT_LE(b.v, 2.0 * gamma + 1e-12);
  EXPECT_LE(b.sampled_path_norm(), 2.0 * b.v + 1e-12);
  EXPECT_LE(barron_mse(f, b, 1024), 16.0 * gamma * gamma / 20000.0);
}

}  // namespace
}  // namespace mafqi
