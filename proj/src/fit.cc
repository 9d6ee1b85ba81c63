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

#include "mafqi/fit.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace mafqi {
namespace {

// Forward state of one head over the samples routed to it.
struct HeadPass {
  std::vector<Eigen::Index> idx;
  Eigen::MatrixXd x;  // d x n_h
  Eigen::MatrixXd z;  // M x n_h
};

}  // namespace

void FitConfig::validate() const {
  auto positive = [](double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string("fqi.") + field + ": must be positive");
    }
  };
  if (epochs < 1) throw ConfigError("fqi.epochs: must be positive");
  if (batch_size < 1) throw ConfigError("fqi.batch_size: must be positive");
  positive(step_size, "step_size");
  positive(path_norm_budget, "path_norm_budget");
  if (!(final_step_fraction >= 0.0 && final_step_fraction <= 1.0)) {
    throw ConfigError("fqi.final_step_fraction: must lie in [0, 1]");
  }
  if (!(penalty >= 0.0)) throw ConfigError("fqi.penalty: must be non-negative");
  if (!(early_stop_tol >= 0.0)) throw ConfigError("fqi.early_stop_tol: must be non-negative");
}

double mean_squared_error(const AdditiveCritic& q, const RegressionData& data) {
  if (data.size() == 0) return 0.0;
  double total = 0.0;
  std::vector<int> a(q.num_agents());
  for (Eigen::Index j = 0; j < data.size(); ++j) {
    for (int i = 0; i < q.num_agents(); ++i) a[i] = data.actions(i, j);
    const double e = q(data.states.col(j), a) - data.targets[j];
    total += e * e;
  }
  return total / static_cast<double>(data.size());
}

Eigen::VectorXd predict(const DecomposedQ& q, const Eigen::MatrixXd& states,
                        const Eigen::MatrixXi& actions) {
  const int d = q.state_dim();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(states.cols());
  for (int i = 0; i < q.num_agents(); ++i) {
    const TwoLayerNet& net = q.agent(i);
    const Eigen::MatrixXd x = states.middleRows(i * d, d);
    for (int h = 0; h < net.num_heads(); ++h) {
      const Eigen::VectorXd raw = net.raw_batch(x, h);
      for (Eigen::Index j = 0; j < states.cols(); ++j) {
        if (actions(i, j) == h) out[j] += net.truncate(raw[j]);
      }
    }
  }
  return out;
}

double mean_squared_error(const DecomposedQ& q, const RegressionData& data) {
  if (data.size() == 0) return 0.0;
  return (predict(q, data.states, data.actions) - data.targets).squaredNorm() /
         static_cast<double>(data.size());
}

FitResult fit_least_squares(const RegressionData& data, const FitConfig& cfg,
                            const DecomposedQ& init) {
  cfg.validate();
  const Eigen::Index n = data.size();
  if (n == 0) throw InputError("fit_least_squares: empty dataset");
  const int agents = init.num_agents();
  const int d = init.state_dim();
  if (data.states.rows() != agents * d || data.states.cols() != n ||
      data.actions.rows() != agents || data.actions.cols() != n) {
    throw ShapeError("fit_least_squares: dataset shape does not match the critic");
  }

  DecomposedQ q = init;
  FitResult result;
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(cfg.seed);

  const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch_size, n);
  const Eigen::Index steps_per_epoch = (n + batch - 1) / batch;
  const double total_steps = static_cast<double>(steps_per_epoch) * cfg.epochs;
  const double lr_min = cfg.step_size * cfg.final_step_fraction;
  long step = 0;

  std::vector<std::vector<HeadPass>> passes(agents);
  for (int i = 0; i < agents; ++i) passes[i].resize(q.agent(i).num_heads());

  double previous = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += batch, ++step) {
      const Eigen::Index count = std::min(batch, n - start);
      const double lr =
          lr_min + 0.5 * (cfg.step_size - lr_min) *
                       (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps));
      Eigen::VectorXd pred = Eigen::VectorXd::Zero(count);
      for (int i = 0; i < agents; ++i) {
        for (HeadPass& hp : passes[i]) hp.idx.clear();
        for (Eigen::Index t = 0; t < count; ++t) {
          passes[i][data.actions(i, order[start + t])].idx.push_back(t);
        }
        const TwoLayerNet& net = q.agent(i);
        for (int h = 0; h < net.num_heads(); ++h) {
          HeadPass& hp = passes[i][h];
          const auto nh = static_cast<Eigen::Index>(hp.idx.size());
          hp.x.resize(d, nh);
          for (Eigen::Index t = 0; t < nh; ++t) {
            hp.x.col(t) = data.states.col(order[start + hp.idx[t]]).segment(i * d, d);
          }
          hp.z = (net.head(h).b * hp.x).colwise() + net.head(h).c;
          const Eigen::VectorXd out = hp.z.cwiseMax(0.0).transpose() * net.head(h).a;
          for (Eigen::Index t = 0; t < nh; ++t) pred[hp.idx[t]] += out[t];
        }
      }
      Eigen::VectorXd resid(count);
      for (Eigen::Index t = 0; t < count; ++t) resid[t] = pred[t] - data.targets[order[start + t]];
      // Truncation hides blow-ups, so check the raw batch loss.
      if (!resid.allFinite()) throw DivergenceError("fit loss is not finite", step);
      const double scale = 2.0 / static_cast<double>(count);

      for (int i = 0; i < agents; ++i) {
        TwoLayerNet& net = q.agent(i);
        // Penalty gradient goes to the head attaining the max path norm.
        int worst = 0;
        double pn = -1.0;
        for (int h = 0; h < net.num_heads(); ++h) {
          const double v = head_path_norm<double>(net.head(h));
          if (v > pn) {
            pn = v;
            worst = h;
          }
        }
        const double excess = pn - cfg.path_norm_budget;
        for (int h = 0; h < net.num_heads(); ++h) {
          HeadPass& hp = passes[i][h];
          TwoLayerNet::Head& p = net.head(h);
          const auto nh = static_cast<Eigen::Index>(hp.idx.size());
          Eigen::VectorXd r(nh);
          for (Eigen::Index t = 0; t < nh; ++t) r[t] = resid[hp.idx[t]] * scale;
          Eigen::VectorXd grad_a = hp.z.cwiseMax(0.0) * r;
          Eigen::MatrixXd delta =
              (hp.z.array() > 0.0).cast<double>() * (p.a * r.transpose()).array();
          Eigen::MatrixXd grad_b = delta * hp.x.transpose();
          Eigen::VectorXd grad_c = delta.rowwise().sum();
          if (h == worst && excess > 0.0 && cfg.penalty > 0.0) {
            const double coef = 2.0 * cfg.penalty * excess;
            const Eigen::VectorXd l1 = p.b.cwiseAbs().rowwise().sum() + p.c.cwiseAbs();
            grad_a += coef * (p.a.array().sign() * l1.array()).matrix();
            grad_b += coef * (p.a.cwiseAbs().asDiagonal() * p.b.array().sign().matrix());
            grad_c += coef * (p.a.cwiseAbs().array() * p.c.array().sign()).matrix();
          }
          p.a -= lr * grad_a;
          p.b -= lr * grad_b;
          p.c -= lr * grad_c;
        }
      }
    }
    const double loss = mean_squared_error(q, data);
    if (!std::isfinite(loss)) throw DivergenceError("fit loss is not finite", step);
    if (loss > previous + 1e-9) ++result.monotonicity_violations;
    previous = loss;
    result.epoch_losses.push_back(loss);
    if (loss <= cfg.early_stop_tol) break;
  }
  for (int i = 0; i < agents; ++i) enforce_path_norm(q.agent(i), cfg.path_norm_budget);
  result.train_loss = mean_squared_error(q, data);
  if (!std::isfinite(result.train_loss)) throw DivergenceError("fit loss is not finite", step);
  result.critic = std::move(q);
  return result;
}

}  // namespace mafqi
