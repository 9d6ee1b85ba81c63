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

#ifndef MAFQI_NETWORK_H_
#define MAFQI_NETWORK_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mafqi/common.h"

namespace mafqi {

// Width-M two-layer ReLU network with one output head per local action:
//   f_h(x) = sum_k a_hk relu(b_hk . x + c_hk),
// truncated to [-clamp, clamp] on output.
template <typename Scalar>
class BasicTwoLayerNet {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  struct Head {
    Vector a;  // M
    Matrix b;  // M x input_dim
    Vector c;  // M
  };

  BasicTwoLayerNet() = default;
  BasicTwoLayerNet(int input_dim, int width, int num_heads,
                   Scalar clamp = std::numeric_limits<Scalar>::infinity())
      : input_dim_(input_dim), width_(width), clamp_(clamp) {
    heads_.resize(num_heads);
    for (Head& h : heads_) {
      h.a = Vector::Zero(width);
      h.b = Matrix::Zero(width, input_dim);
      h.c = Vector::Zero(width);
    }
  }

  int input_dim() const { return input_dim_; }
  int width() const { return width_; }
  int num_heads() const { return static_cast<int>(heads_.size()); }
  Scalar clamp() const { return clamp_; }
  void set_clamp(Scalar clamp) { clamp_ = clamp; }

  Head& head(int h) { return heads_[h]; }
  const Head& head(int h) const { return heads_[h]; }

  template <typename Derived>
  Scalar raw(const Eigen::MatrixBase<Derived>& x, int h) const {
    const Head& p = heads_[h];
    return p.a.dot((p.b * x + p.c).cwiseMax(Scalar(0)));
  }

  template <typename Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived>& x, int h) const {
    return truncate(raw(x, h));
  }

  // Truncated outputs of every head at x.
  template <typename Derived>
  Vector heads_at(const Eigen::MatrixBase<Derived>& x) const {
    Vector out(num_heads());
    for (int h = 0; h < num_heads(); ++h) out[h] = (*this)(x, h);
    return out;
  }

  // Raw outputs of head h on the columns of X.
  Vector raw_batch(const Matrix& x, int h) const {
    const Head& p = heads_[h];
    return ((p.b * x).colwise() + p.c).cwiseMax(Scalar(0)).transpose() * p.a;
  }

  Scalar truncate(Scalar v) const { return std::clamp(v, -clamp_, clamp_); }

 private:
  int input_dim_ = 1;
  int width_ = 0;
  Scalar clamp_ = std::numeric_limits<Scalar>::infinity();
  std::vector<Head> heads_;
};

using TwoLayerNet = BasicTwoLayerNet<double>;

template <typename Scalar>
Scalar head_path_norm(const typename BasicTwoLayerNet<Scalar>::Head& h) {
  return (h.a.cwiseAbs().array() *
          (h.b.cwiseAbs().rowwise().sum() + h.c.cwiseAbs()).array())
      .sum();
}

// sum_k |a_k| (||b_k||_1 + |c_k|), maximized over heads.
template <typename Scalar>
Scalar path_norm(const BasicTwoLayerNet<Scalar>& net) {
  Scalar best = 0;
  for (int h = 0; h < net.num_heads(); ++h) {
    best = std::max(best, head_path_norm<Scalar>(net.head(h)));
  }
  return best;
}

// Rescales the output weights of any head above `budget` onto it.
template <typename Scalar>
void enforce_path_norm(BasicTwoLayerNet<Scalar>& net, Scalar budget) {
  for (int h = 0; h < net.num_heads(); ++h) {
    const Scalar pn = head_path_norm<Scalar>(net.head(h));
    if (pn > budget) net.head(h).a *= budget / pn;
  }
}

// Symmetric uniform weights with kinks spread over the unit box: each
// hidden unit's hyperplane passes through a uniform point of [0,1]^d.
// Output weights are drawn when `zero_output` is false.
TwoLayerNet random_net(int input_dim, int width, int num_heads, double clamp, Rng& rng,
                       bool zero_output = false);

// Additive critic interface: Q_tot(s, a) = sum_i Q_i(s_i, a_i).
class AdditiveCritic {
 public:
  virtual ~AdditiveCritic() = default;
  virtual int num_agents() const = 0;
  virtual int state_dim() const = 0;
  // Q_i(s_i, .) for every local action.
  virtual Eigen::VectorXd local_values(int agent, const ConstVecRef& s_i) const = 0;
  virtual double path_norm_max() const { return 0.0; }

  double operator()(const ConstVecRef& s, std::span<const int> a) const;
  // Per-agent argmax with ties to the lowest index.
  std::vector<int> igm_argmax(const ConstVecRef& s) const;
};

// N per-agent networks, one head per local action, each clamped at
// q_max / N.
class DecomposedQ : public AdditiveCritic {
 public:
  DecomposedQ() = default;
  DecomposedQ(int state_dim, std::vector<TwoLayerNet> agents);

  // All-zero networks of the given width.
  static DecomposedQ zero(int state_dim, std::span<const int> actions_per_agent, int width,
                          double clamp);
  // Random hidden layer and zero output weights: evaluates to exactly zero
  // but is trainable.
  static DecomposedQ zero_function(int state_dim, std::span<const int> actions_per_agent,
                                   int width, double clamp, Rng& rng);

  int num_agents() const override { return static_cast<int>(agents_.size()); }
  int state_dim() const override { return state_dim_; }
  Eigen::VectorXd local_values(int agent, const ConstVecRef& s_i) const override;
  double path_norm_max() const override;

  TwoLayerNet& agent(int i) { return agents_[i]; }
  const TwoLayerNet& agent(int i) const { return agents_[i]; }

 private:
  int state_dim_ = 1;
  std::vector<TwoLayerNet> agents_;
};

std::vector<int> igm_argmax(const AdditiveCritic& q, const ConstVecRef& s);
double decomposed_eval(const AdditiveCritic& q, const ConstVecRef& s, std::span<const int> a);

// Versioned binary checkpoint: "MAFQINN1", version, agents, state_dim, and
// per agent (input_dim, width, heads, clamp, path norm, a, b, c). Loading
// recomputes the path norm and rejects a mismatch.
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_checkpoint(const std::string& path, const DecomposedQ& q);
DecomposedQ load_checkpoint(const std::string& path);

}  // namespace mafqi

#endif  // MAFQI_NETWORK_H_
