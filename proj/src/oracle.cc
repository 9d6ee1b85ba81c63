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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>

#include "binary_io.h"

namespace mafqi {
namespace {

using binary::get_f64;
using binary::get_u64;
using binary::put_f64;
using binary::put_u64;

constexpr char kQTableMagic[8] = {'M', 'A', 'F', 'Q', 'I', 'Q', 'T', '1'};

int int_pow(int base, int exp) {
  int out = 1;
  for (int k = 0; k < exp; ++k) out *= base;
  return out;
}

void require_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols,
                   const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()));
  }
}

void check_policy(const TabularGame& tg, std::span<const int> policy) {
  if (static_cast<int>(policy.size()) != tg.num_nodes()) {
    throw ShapeError("policy length differs from the number of nodes");
  }
  for (int a : policy) {
    if (a < 0 || a >= tg.num_actions()) throw ShapeError("policy action out of range");
  }
}

}  // namespace

void TabularGame::build_indices() {
  const int n = spec_.num_agents;
  const int d = spec_.state_dim;
  const int dim = spec_.joint_state_dim();
  const int nodes = num_nodes();
  local_nodes_ = int_pow(resolution_, d);
  local_node_.assign(n, std::vector<int>(nodes, 0));
  std::vector<int> digits(dim);
  for (int node = 0; node < nodes; ++node) {
    int rest = node;
    for (int j = dim - 1; j >= 0; --j) {
      digits[j] = rest % resolution_;
      rest /= resolution_;
    }
    for (int i = 0; i < n; ++i) {
      int local = 0;
      for (int j = 0; j < d; ++j) local = local * resolution_ + digits[i * d + j];
      local_node_[i][node] = local;
    }
  }
  const int actions = num_actions();
  local_index_.assign(n, Eigen::MatrixXi(nodes, actions));
  for (int ja = 0; ja < actions; ++ja) {
    const std::vector<int> a = spec_.decode_action(ja);
    for (int i = 0; i < n; ++i) {
      for (int node = 0; node < nodes; ++node) {
        local_index_[i](node, ja) = a[i] * local_nodes_ + local_node_[i][node];
      }
    }
  }
}

TabularGame TabularGame::from_tables(GameSpec spec, int resolution, Eigen::MatrixXd rewards,
                                     Eigen::MatrixXd transition) {
  spec.validate();
  if (resolution < 1) throw ConfigError("resolution: must be positive");
  TabularGame tg;
  tg.spec_ = std::move(spec);
  tg.resolution_ = resolution;
  tg.nodes_ = midpoint_grid(tg.spec_.joint_state_dim(), resolution);
  const int nodes = tg.num_nodes();
  const int actions = tg.num_actions();
  require_shape(rewards, nodes, actions, "rewards");
  require_shape(transition, static_cast<Eigen::Index>(nodes) * actions, nodes, "transition");
  if ((transition.array() < 0.0).any() ||
      ((transition.rowwise().sum().array() - 1.0).abs() > 1e-9).any()) {
    throw InvalidKernelError("transition rows must be probability vectors");
  }
  tg.rewards_ = std::move(rewards);
  tg.transition_ = std::move(transition);
  tg.build_indices();
  return tg;
}

TabularGame discretize(const Game& game, int resolution, std::size_t max_entries) {
  if (resolution < 1) throw ConfigError("oracle.resolution: must be positive");
  const GameSpec& spec = game.spec();
  const int n = spec.num_agents;
  const int d = spec.state_dim;
  const int dim = spec.joint_state_dim();
  const double nodes_f = std::pow(static_cast<double>(resolution), dim);
  const int actions = spec.num_joint_actions();
  const bool structured = game.kernel_family() == KernelFamily::kDecomposed;
  double entries = 0.0;
  if (structured) {
    const double local = std::pow(static_cast<double>(resolution), d);
    for (int i = 0; i < n; ++i) entries += local * spec.actions_per_agent[i] * nodes_f;
  } else {
    entries = nodes_f * nodes_f * actions;
  }
  if (entries > static_cast<double>(max_entries) || nodes_f > 1e8) {
    throw SizeError("oracle: transition storage needs " + std::to_string(entries) +
                    " doubles, cap is " + std::to_string(max_entries));
  }

  TabularGame tg;
  tg.spec_ = spec;
  tg.resolution_ = resolution;
  tg.nodes_ = midpoint_grid(dim, resolution);
  tg.structured_ = structured;
  const int nodes = tg.num_nodes();
  tg.build_indices();

  std::vector<std::vector<int>> decoded(actions);
  for (int ja = 0; ja < actions; ++ja) decoded[ja] = spec.decode_action(ja);

  tg.rewards_.resize(nodes, actions);
  for (int ja = 0; ja < actions; ++ja) {
    for (int node = 0; node < nodes; ++node) {
      tg.rewards_(node, ja) = game.reward(tg.nodes_.col(node), decoded[ja]);
    }
  }

  double worst = 0.0;
  if (structured) {
    const Eigen::MatrixXd local_grid = midpoint_grid(d, resolution);
    tg.agent_transition_.resize(n);
    for (int i = 0; i < n; ++i) {
      const MixtureKernel& kernel = game.kernel_components()[i];
      Eigen::MatrixXd& block = tg.agent_transition_[i];
      block.resize(static_cast<Eigen::Index>(tg.local_nodes_) * spec.actions_per_agent[i], nodes);
      for (int a = 0; a < spec.actions_per_agent[i]; ++a) {
        for (int l = 0; l < tg.local_nodes_; ++l) {
          double mass = 1.0;
          block.row(static_cast<Eigen::Index>(a) * tg.local_nodes_ + l) =
              kernel.discretize_row(local_grid.col(l), a, resolution, &mass).transpose();
          worst = std::max(worst, std::abs(mass - 1.0));
        }
      }
    }
  } else {
    tg.transition_.resize(static_cast<Eigen::Index>(nodes) * actions, nodes);
    for (int ja = 0; ja < actions; ++ja) {
      for (int node = 0; node < nodes; ++node) {
        double mass = 1.0;
        tg.transition_.row(static_cast<Eigen::Index>(ja) * nodes + node) =
            game.transition_row(tg.nodes_.col(node), decoded[ja], resolution, &mass).transpose();
        worst = std::max(worst, std::abs(mass - 1.0));
      }
    }
  }
  tg.renormalization_error_ = worst;
  return tg;
}

Eigen::MatrixXd TabularGame::expect(const Eigen::VectorXd& v) const {
  const int nodes = num_nodes();
  const int actions = num_actions();
  if (v.size() != nodes) throw ShapeError("expect: value vector has the wrong length");
  if (!structured_) {
    const Eigen::VectorXd flat = transition_ * v;
    return Eigen::Map<const Eigen::MatrixXd>(flat.data(), nodes, actions);
  }
  const int n = spec_.num_agents;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nodes, actions);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd u = agent_transition_[i] * v;
    const Eigen::MatrixXi& idx = local_index_[i];
    for (int ja = 0; ja < actions; ++ja) {
      for (int node = 0; node < nodes; ++node) out(node, ja) += u[idx(node, ja)];
    }
  }
  return out / n;
}

Eigen::VectorXd TabularGame::expect_under(const Eigen::VectorXd& v,
                                          std::span<const int> policy) const {
  const int nodes = num_nodes();
  if (v.size() != nodes) throw ShapeError("expect_under: value vector has the wrong length");
  check_policy(*this, policy);
  Eigen::VectorXd out(nodes);
  if (!structured_) {
    for (int node = 0; node < nodes; ++node) {
      out[node] = transition_.row(static_cast<Eigen::Index>(policy[node]) * nodes + node).dot(v);
    }
    return out;
  }
  out.setZero();
  for (int i = 0; i < spec_.num_agents; ++i) {
    const Eigen::VectorXd u = agent_transition_[i] * v;
    for (int node = 0; node < nodes; ++node) out[node] += u[local_index_[i](node, policy[node])];
  }
  return out / spec_.num_agents;
}

Eigen::MatrixXd TabularGame::dense_transition() const {
  if (!structured_) return transition_;
  const int nodes = num_nodes();
  const int actions = num_actions();
  const int n = spec_.num_agents;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nodes) * actions, nodes);
  for (int ja = 0; ja < actions; ++ja) {
    for (int node = 0; node < nodes; ++node) {
      auto row = p.row(static_cast<Eigen::Index>(ja) * nodes + node);
      for (int i = 0; i < n; ++i) row += agent_transition_[i].row(local_index_[i](node, ja));
      row /= n;
    }
  }
  return p;
}

QTable bellman_apply(const QTable& q, const TabularGame& tg) {
  require_shape(q, tg.num_nodes(), tg.num_actions(), "bellman_apply");
  const Eigen::VectorXd v = q.rowwise().maxCoeff();
  if (tg.gamma() == 0.0) return tg.rewards();
  return tg.rewards() + tg.gamma() * tg.expect(v);
}

QTable value_iteration(const TabularGame& tg, double tol, SolveStats* stats) {
  if (!(tol > 0.0)) throw ConfigError("oracle.tol: must be positive");
  const double gamma = tg.gamma();
  // ||T^k 0 - T^(k-1) 0|| <= gamma^(k-1) r_max, and we stop once
  // gamma * ||step|| <= tol.
  int limit = 1;
  if (gamma > 0.0) {
    limit = static_cast<int>(std::ceil(std::log(std::max(tg.r_max(), tol) / tol) /
                                       std::log(1.0 / gamma))) + 2;
  }
  QTable q = QTable::Zero(tg.num_nodes(), tg.num_actions());
  for (int it = 1; it <= limit + 8; ++it) {
    QTable next = bellman_apply(q, tg);
    const double step = (next - q).cwiseAbs().maxCoeff();
    if (!std::isfinite(step)) throw DivergenceError("value iteration produced non-finite values", it);
    q.swap(next);
    if (gamma * step <= tol) {
      if (stats != nullptr) *stats = {it, gamma * step};
      return q;
    }
  }
  throw DivergenceError("value iteration exceeded its iteration bound", limit + 8);
}

QTable policy_eval(const TabularGame& tg, std::span<const int> policy, double tol,
                   SolveStats* stats) {
  check_policy(tg, policy);
  const int nodes = tg.num_nodes();
  const double gamma = tg.gamma();
  Eigen::VectorXd r_pi(nodes);
  for (int node = 0; node < nodes; ++node) r_pi[node] = tg.rewards()(node, policy[node]);
  Eigen::VectorXd v = r_pi;
  int it = 0;
  double bound = 0.0;
  if (gamma > 0.0) {
    for (;;) {
      ++it;
      const Eigen::VectorXd next = r_pi + gamma * tg.expect_under(v, policy);
      const double step = (next - v).cwiseAbs().maxCoeff();
      if (!std::isfinite(step)) throw DivergenceError("policy evaluation diverged", it);
      v = next;
      bound = gamma / (1.0 - gamma) * step;
      if (bound <= tol) break;
      if (it > 1000000) throw DivergenceError("policy evaluation did not converge", it);
    }
  }
  if (stats != nullptr) *stats = {it, bound};
  if (gamma == 0.0) return tg.rewards();
  return tg.rewards() + gamma * tg.expect(v);
}

TabularPolicy greedy_policy(const QTable& q) {
  TabularPolicy policy(static_cast<std::size_t>(q.rows()), 0);
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    int best = 0;
    for (Eigen::Index c = 1; c < q.cols(); ++c) {
      if (q(r, c) > q(r, best)) best = static_cast<int>(c);
    }
    policy[r] = best;
  }
  return policy;
}

Eigen::VectorXd policy_values(const QTable& q, std::span<const int> policy) {
  if (static_cast<Eigen::Index>(policy.size()) != q.rows()) {
    throw ShapeError("policy_values: policy length differs from table rows");
  }
  Eigen::VectorXd out(q.rows());
  for (Eigen::Index r = 0; r < q.rows(); ++r) out[r] = q(r, policy[r]);
  return out;
}

SeparableWeights SeparableWeights::uniform(const TabularGame& tg) {
  SeparableWeights w;
  for (int i = 0; i < tg.spec().num_agents; ++i) {
    const int size = tg.local_size(i);
    w.marginals.push_back(Eigen::VectorXd::Constant(size, 1.0 / size));
  }
  return w;
}

SeparableWeights SeparableWeights::from_joint(const Eigen::MatrixXd& joint,
                                              const TabularGame& tg, double tol) {
  require_shape(joint, tg.num_nodes(), tg.num_actions(), "weights");
  if ((joint.array() < 0.0).any()) throw PreconditionError("weights must be non-negative");
  if (std::abs(joint.sum() - 1.0) > 1e-9) throw PreconditionError("weights must sum to one");
  const int n = tg.spec().num_agents;
  SeparableWeights w;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(tg.local_size(i));
    for (int ja = 0; ja < tg.num_actions(); ++ja) {
      for (int node = 0; node < tg.num_nodes(); ++node) {
        m[tg.local_index(i, node, ja)] += joint(node, ja);
      }
    }
    w.marginals.push_back(std::move(m));
  }
  const Eigen::MatrixXd product = w.joint(tg);
  const double gap = (product - joint).cwiseAbs().maxCoeff();
  if (gap > tol) {
    throw PreconditionError("weights are not a product of per-agent marginals (gap " +
                            std::to_string(gap) + ")");
  }
  return w;
}

Eigen::MatrixXd SeparableWeights::joint(const TabularGame& tg) const {
  if (static_cast<int>(marginals.size()) != tg.spec().num_agents) {
    throw ShapeError("separable weights: one marginal per agent expected");
  }
  Eigen::MatrixXd w = Eigen::MatrixXd::Ones(tg.num_nodes(), tg.num_actions());
  for (int i = 0; i < tg.spec().num_agents; ++i) {
    if (marginals[i].size() != tg.local_size(i)) {
      throw ShapeError("separable weights: marginal has the wrong length");
    }
    for (int ja = 0; ja < tg.num_actions(); ++ja) {
      for (int node = 0; node < tg.num_nodes(); ++node) {
        w(node, ja) *= marginals[i][tg.local_index(i, node, ja)];
      }
    }
  }
  return w;
}

double weighted_l2(const QTable& diff, const Eigen::MatrixXd& weights) {
  if (diff.rows() != weights.rows() || diff.cols() != weights.cols()) {
    throw ShapeError("weighted_l2: shapes differ");
  }
  return std::sqrt((weights.array() * diff.array().square()).sum());
}

QTable assemble_additive(const TabularGame& tg, std::span<const Eigen::VectorXd> locals) {
  const int n = tg.spec().num_agents;
  if (static_cast<int>(locals.size()) != n) throw ShapeError("one local table per agent expected");
  QTable q = QTable::Zero(tg.num_nodes(), tg.num_actions());
  for (int i = 0; i < n; ++i) {
    if (locals[i].size() != tg.local_size(i)) throw ShapeError("local table has the wrong length");
    for (int ja = 0; ja < tg.num_actions(); ++ja) {
      for (int node = 0; node < tg.num_nodes(); ++node) {
        q(node, ja) += locals[i][tg.local_index(i, node, ja)];
      }
    }
  }
  return q;
}

ProjectionResult exact_decomposable_projection(const QTable& q, const TabularGame& tg,
                                               const SeparableWeights& sigma) {
  require_shape(q, tg.num_nodes(), tg.num_actions(), "projection input");
  const int n = tg.spec().num_agents;
  const Eigen::MatrixXd w = sigma.joint(tg);
  ProjectionResult out;
  out.constant = (w.array() * q.array()).sum();
  for (int i = 0; i < n; ++i) {
    // f_i(l) = sum over entries with local index l of prod_{j != i} sigma_j * q.
    Eigen::VectorXd f = Eigen::VectorXd::Zero(tg.local_size(i));
    for (int ja = 0; ja < tg.num_actions(); ++ja) {
      for (int node = 0; node < tg.num_nodes(); ++node) {
        double others = 1.0;
        for (int j = 0; j < n; ++j) {
          if (j != i) others *= sigma.marginals[j][tg.local_index(j, node, ja)];
        }
        f[tg.local_index(i, node, ja)] += others * q(node, ja);
      }
    }
    out.components.push_back(std::move(f));
  }
  out.projected = assemble_additive(tg, out.components);
  out.projected.array() -= (n - 1) * out.constant;
  const QTable diff = q - out.projected;
  out.residual_l2 = weighted_l2(diff, w);
  out.residual_sup = diff.cwiseAbs().maxCoeff();
  return out;
}

ProjectionResult exact_decomposable_projection(const QTable& q, const TabularGame& tg) {
  return exact_decomposable_projection(q, tg, SeparableWeights::uniform(tg));
}

QTable lstsq_decomposable_projection(const QTable& q, const TabularGame& tg,
                                     const SeparableWeights& sigma) {
  require_shape(q, tg.num_nodes(), tg.num_actions(), "projection input");
  const int n = tg.spec().num_agents;
  std::vector<int> offset(n + 1, 0);
  for (int i = 0; i < n; ++i) offset[i + 1] = offset[i] + tg.local_size(i);
  const Eigen::MatrixXd w = sigma.joint(tg);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(offset[n], offset[n]);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(offset[n]);
  std::vector<int> idx(n);
  for (int ja = 0; ja < tg.num_actions(); ++ja) {
    for (int node = 0; node < tg.num_nodes(); ++node) {
      for (int i = 0; i < n; ++i) idx[i] = offset[i] + tg.local_index(i, node, ja);
      const double weight = w(node, ja);
      for (int i = 0; i < n; ++i) {
        rhs[idx[i]] += weight * q(node, ja);
        for (int j = 0; j < n; ++j) gram(idx[i], idx[j]) += weight;
      }
    }
  }
  // The additive parametrization has a gauge freedom, so the system is
  // singular; the minimum-norm solution gives the same fitted table.
  const Eigen::VectorXd theta = gram.completeOrthogonalDecomposition().solve(rhs);
  std::vector<Eigen::VectorXd> locals;
  for (int i = 0; i < n; ++i) locals.push_back(theta.segment(offset[i], tg.local_size(i)));
  return assemble_additive(tg, locals);
}

ProjectionResult tq_decomposability_residual(const QTable& q, const TabularGame& tg) {
  return exact_decomposable_projection(bellman_apply(q, tg), tg);
}

void write_qtable_binary(const std::string& path, const QTable& q) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out.write(kQTableMagic, sizeof kQTableMagic);
  put_u64(out, static_cast<std::uint64_t>(q.rows()));
  put_u64(out, static_cast<std::uint64_t>(q.cols()));
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    for (Eigen::Index c = 0; c < q.cols(); ++c) put_f64(out, q(r, c));
  }
  if (!out) throw InputError("write failed for " + path);
}

QTable read_qtable_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open Q-table " + path);
  char magic[sizeof kQTableMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kQTableMagic, sizeof magic) != 0) {
    throw InputError(path + ": not a Q-table file");
  }
  const std::uint64_t rows = get_u64(in);
  const std::uint64_t cols = get_u64(in);
  if (!in || rows > (1ULL << 32) || cols > (1ULL << 20)) throw InputError(path + ": bad header");
  QTable q(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    for (Eigen::Index c = 0; c < q.cols(); ++c) q(r, c) = get_f64(in);
  }
  if (!in) throw InputError(path + ": truncated");
  return q;
}

void write_qtable_csv(const std::string& path, const QTable& q) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out << "node";
  for (Eigen::Index c = 0; c < q.cols(); ++c) out << ",a" << c;
  out << '\n' << std::setprecision(17);
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    out << r;
    for (Eigen::Index c = 0; c < q.cols(); ++c) out << ',' << q(r, c);
    out << '\n';
  }
}

}  // namespace mafqi
