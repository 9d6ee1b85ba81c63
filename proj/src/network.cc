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

#include "mafqi/network.h"

#include <cstring>
#include <fstream>

#include "binary_io.h"

namespace mafqi {
namespace {

constexpr char kCheckpointMagic[8] = {'M', 'A', 'F', 'Q', 'I', 'N', 'N', '1'};

}  // namespace

TwoLayerNet random_net(int input_dim, int width, int num_heads, double clamp, Rng& rng,
                       bool zero_output) {
  TwoLayerNet net(input_dim, width, num_heads, clamp);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(input_dim) * width);
  for (int h = 0; h < num_heads; ++h) {
    TwoLayerNet::Head& p = net.head(h);
    for (int k = 0; k < width; ++k) {
      double offset = 0.0;
      for (int j = 0; j < input_dim; ++j) {
        p.b(k, j) = unit(rng);
        offset += p.b(k, j) * uniform01(rng);
      }
      p.c[k] = -offset;
      p.a[k] = zero_output ? 0.0 : scale * unit(rng);
    }
  }
  return net;
}

double AdditiveCritic::operator()(const ConstVecRef& s, std::span<const int> a) const {
  const int d = state_dim();
  double total = 0.0;
  for (int i = 0; i < num_agents(); ++i) total += local_values(i, s.segment(i * d, d))[a[i]];
  return total;
}

std::vector<int> AdditiveCritic::igm_argmax(const ConstVecRef& s) const {
  const int d = state_dim();
  std::vector<int> joint(num_agents());
  for (int i = 0; i < num_agents(); ++i) {
    const Eigen::VectorXd v = local_values(i, s.segment(i * d, d));
    int best = 0;
    for (Eigen::Index k = 1; k < v.size(); ++k) {
      if (v[k] > v[best]) best = static_cast<int>(k);
    }
    joint[i] = best;
  }
  return joint;
}

std::vector<int> igm_argmax(const AdditiveCritic& q, const ConstVecRef& s) {
  return q.igm_argmax(s);
}

double decomposed_eval(const AdditiveCritic& q, const ConstVecRef& s, std::span<const int> a) {
  return q(s, a);
}

DecomposedQ::DecomposedQ(int state_dim, std::vector<TwoLayerNet> agents)
    : state_dim_(state_dim), agents_(std::move(agents)) {
  for (const TwoLayerNet& net : agents_) {
    if (net.input_dim() != state_dim) throw ShapeError("critic input dimension mismatch");
  }
}

DecomposedQ DecomposedQ::zero(int state_dim, std::span<const int> actions_per_agent, int width,
                              double clamp) {
  std::vector<TwoLayerNet> nets;
  for (int a : actions_per_agent) nets.emplace_back(state_dim, width, a, clamp);
  return DecomposedQ(state_dim, std::move(nets));
}

DecomposedQ DecomposedQ::zero_function(int state_dim, std::span<const int> actions_per_agent,
                                       int width, double clamp, Rng& rng) {
  std::vector<TwoLayerNet> nets;
  for (int a : actions_per_agent) nets.push_back(random_net(state_dim, width, a, clamp, rng, true));
  return DecomposedQ(state_dim, std::move(nets));
}

Eigen::VectorXd DecomposedQ::local_values(int agent, const ConstVecRef& s_i) const {
  return agents_[agent].heads_at(s_i);
}

double DecomposedQ::path_norm_max() const {
  double best = 0.0;
  for (const TwoLayerNet& net : agents_) best = std::max(best, path_norm(net));
  return best;
}

void save_checkpoint(const std::string& path, const DecomposedQ& q) {
  using namespace binary;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  put_u64(out, kCheckpointVersion);
  put_u64(out, static_cast<std::uint64_t>(q.num_agents()));
  put_u64(out, static_cast<std::uint64_t>(q.state_dim()));
  for (int i = 0; i < q.num_agents(); ++i) {
    const TwoLayerNet& net = q.agent(i);
    put_u64(out, static_cast<std::uint64_t>(net.input_dim()));
    put_u64(out, static_cast<std::uint64_t>(net.width()));
    put_u64(out, static_cast<std::uint64_t>(net.num_heads()));
    put_f64(out, net.clamp());
    put_f64(out, path_norm(net));
    for (int h = 0; h < net.num_heads(); ++h) {
      const TwoLayerNet::Head& p = net.head(h);
      for (int k = 0; k < net.width(); ++k) {
        put_f64(out, p.a[k]);
        for (int j = 0; j < net.input_dim(); ++j) put_f64(out, p.b(k, j));
        put_f64(out, p.c[k]);
      }
    }
  }
  if (!out) throw InputError("write failed for " + path);
}

DecomposedQ load_checkpoint(const std::string& path) {
  using namespace binary;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open checkpoint " + path);
  char magic[sizeof kCheckpointMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw InputError(path + ": not a checkpoint file");
  }
  if (get_u64(in) != kCheckpointVersion) throw InputError(path + ": unsupported version");
  const std::uint64_t agents = get_u64(in);
  const std::uint64_t state_dim = get_u64(in);
  if (!in || agents > 1024 || state_dim > 1024) throw InputError(path + ": bad header");
  std::vector<TwoLayerNet> nets;
  for (std::uint64_t i = 0; i < agents; ++i) {
    const std::uint64_t input_dim = get_u64(in);
    const std::uint64_t width = get_u64(in);
    const std::uint64_t heads = get_u64(in);
    if (!in || input_dim > 1024 || width > (1u << 20) || heads > 1024) {
      throw InputError(path + ": bad network header");
    }
    const double clamp = get_f64(in);
    const double stored = get_f64(in);
    TwoLayerNet net(static_cast<int>(input_dim), static_cast<int>(width), static_cast<int>(heads),
                    clamp);
    for (int h = 0; h < net.num_heads(); ++h) {
      TwoLayerNet::Head& p = net.head(h);
      for (int k = 0; k < net.width(); ++k) {
        p.a[k] = get_f64(in);
        for (int j = 0; j < net.input_dim(); ++j) p.b(k, j) = get_f64(in);
        p.c[k] = get_f64(in);
      }
    }
    if (!in) throw InputError(path + ": truncated");
    if (path_norm(net) != stored) {
      throw InputError(path + ": stored path norm does not match the parameters");
    }
    nets.push_back(std::move(net));
  }
  return DecomposedQ(static_cast<int>(state_dim), std::move(nets));
}

}  // namespace mafqi
