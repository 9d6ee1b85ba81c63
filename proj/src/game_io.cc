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

#include "mafqi/game_io.h"

#include <vector>

namespace mafqi {
namespace {

using nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vec_from_json(const json& doc) {
  const auto values = doc.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_to_json(m.row(r).transpose()));
  return rows;
}

Eigen::MatrixXd mat_from_json(const json& doc, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(doc.size()), cols);
  for (std::size_t r = 0; r < doc.size(); ++r) {
    const Eigen::VectorXd row = vec_from_json(doc[r]);
    if (row.size() != cols) throw ConfigError("game: matrix row has the wrong length");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

json map_to_json(const ConditionalMap& map) {
  json doc;
  doc["input_dim"] = map.input_dim;
  doc["output_dim"] = map.output_dim;
  doc["offset"] = json::array();
  doc["weight"] = json::array();
  doc["product"] = json::array();
  for (int a = 0; a < map.num_actions(); ++a) {
    doc["offset"].push_back(vec_to_json(map.offset[a]));
    doc["weight"].push_back(mat_to_json(map.weight[a]));
    doc["product"].push_back(vec_to_json(map.product[a]));
  }
  return doc;
}

ConditionalMap map_from_json(const json& doc) {
  ConditionalMap map;
  map.input_dim = doc.at("input_dim").get<int>();
  map.output_dim = doc.at("output_dim").get<int>();
  for (const json& v : doc.at("offset")) map.offset.push_back(vec_from_json(v));
  for (const json& w : doc.at("weight")) map.weight.push_back(mat_from_json(w, map.input_dim));
  for (const json& p : doc.at("product")) map.product.push_back(vec_from_json(p));
  return map;
}

}  // namespace

json spec_to_json(const GameSpec& spec) {
  return json{{"agents", spec.num_agents},
              {"state_dim", spec.state_dim},
              {"actions", spec.actions_per_agent},
              {"gamma", spec.gamma},
              {"r_max", spec.r_max},
              {"kind", to_string(spec.kind)}};
}

GameSpec spec_from_json(const json& doc) {
  GameSpec spec;
  spec.num_agents = doc.at("agents").get<int>();
  spec.state_dim = doc.at("state_dim").get<int>();
  spec.actions_per_agent = doc.at("actions").get<std::vector<int>>();
  spec.gamma = doc.at("gamma").get<double>();
  spec.r_max = doc.at("r_max").get<double>();
  spec.kind = game_kind_from_string(doc.at("kind").get<std::string>());
  spec.validate();
  return spec;
}

json local_function_to_json(const LocalFunction& f) {
  json parts = json::array();
  for (const auto& part : f.parts) {
    json cos = json::array();
    for (const CosineTerm& t : part.cosines) {
      cos.push_back({{"amplitude", t.amplitude},
                     {"frequency", vec_to_json(t.frequency)},
                     {"phase", t.phase}});
    }
    parts.push_back({{"bias", part.bias}, {"linear", vec_to_json(part.linear)}, {"cosines", cos}});
  }
  return json{{"state_dim", f.state_dim}, {"actions", parts}};
}

LocalFunction local_function_from_json(const json& doc) {
  LocalFunction f;
  f.state_dim = doc.at("state_dim").get<int>();
  for (const json& p : doc.at("actions")) {
    LocalFunction::ActionPart part;
    part.bias = p.at("bias").get<double>();
    part.linear = vec_from_json(p.at("linear"));
    for (const json& t : p.at("cosines")) {
      part.cosines.push_back({t.at("amplitude").get<double>(), vec_from_json(t.at("frequency")),
                              t.at("phase").get<double>()});
    }
    f.parts.push_back(std::move(part));
  }
  return f;
}

json kernel_to_json(const MixtureKernel& kernel) {
  json doc;
  doc["family"] = kernel.is_point_mass() ? "point_mass" : "gaussian_mixture";
  doc["input_dim"] = kernel.input_dim();
  doc["output_dim"] = kernel.output_dim();
  doc["actions"] = kernel.num_actions();
  doc["uniform_weight"] = kernel.uniform_weight();
  doc["components"] = json::array();
  for (const GaussianComponent& c : kernel.components()) {
    doc["components"].push_back(
        {{"weight", c.weight}, {"center", map_to_json(c.center)}, {"width", vec_to_json(c.width)}});
  }
  return doc;
}

MixtureKernel kernel_from_json(const json& doc) {
  const std::string family = doc.at("family").get<std::string>();
  std::vector<GaussianComponent> components;
  for (const json& c : doc.at("components")) {
    components.push_back({c.at("weight").get<double>(), map_from_json(c.at("center")),
                          vec_from_json(c.at("width"))});
  }
  if (family == "point_mass") {
    if (components.size() != 1) throw ConfigError("game.kernel: point mass needs one centre map");
    return MixtureKernel::point_mass(std::move(components.front().center));
  }
  if (family != "gaussian_mixture") {
    throw ConfigError("game.kernel.family: unknown family '" + family + "'");
  }
  return MixtureKernel(doc.at("input_dim").get<int>(), doc.at("output_dim").get<int>(),
                       doc.at("actions").get<int>(), doc.at("uniform_weight").get<double>(),
                       std::move(components));
}

json game_to_json(const Game& game) {
  json doc;
  doc["schema_version"] = kGameSchemaVersion;
  doc["spec"] = spec_to_json(game.spec());
  json reward;
  switch (game.reward_family()) {
    case RewardFamily::kDecomposed:
      reward["family"] = "decomposed";
      break;
    case RewardFamily::kCoupled:
      reward["family"] = "coupled";
      break;
    case RewardFamily::kReverseEngineered:
      reward["family"] = "reverse_engineered";
      reward["quadrature_resolution"] = game.quadrature_resolution();
      break;
  }
  reward["locals"] = json::array();
  if (game.reward_family() == RewardFamily::kCoupled) {
    const CoupledReward& coupled = game.coupled_reward();
    reward["table"] = vec_to_json(coupled.table);
    reward["coupling"] = coupled.coupling;
    for (const LocalFunction& f : coupled.locals) reward["locals"].push_back(local_function_to_json(f));
  } else {
    for (const LocalFunction& f : game.local_functions()) {
      reward["locals"].push_back(local_function_to_json(f));
    }
  }
  doc["reward"] = reward;
  json kernel;
  if (game.kernel_family() == KernelFamily::kDecomposed) {
    kernel["family"] = "decomposed";
    kernel["components"] = json::array();
    for (const MixtureKernel& k : game.kernel_components()) {
      kernel["components"].push_back(kernel_to_json(k));
    }
  } else {
    kernel["family"] = "joint";
    kernel["joint"] = kernel_to_json(game.joint_kernel());
  }
  doc["kernel"] = kernel;
  if (game.has_decomposition()) doc["decomposition"] = true;
  return doc;
}

Game game_from_json(const json& doc) {
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kGameSchemaVersion) {
      throw ConfigError("schema_version: unsupported version " + std::to_string(version));
    }
    GameSpec spec = spec_from_json(doc.at("spec"));
    const json& reward = doc.at("reward");
    const json& kernel = doc.at("kernel");
    const std::string reward_family = reward.at("family").get<std::string>();
    const std::string kernel_family = kernel.at("family").get<std::string>();
    std::vector<LocalFunction> locals;
    for (const json& f : reward.at("locals")) locals.push_back(local_function_from_json(f));
    std::vector<MixtureKernel> agent_kernels;
    if (kernel_family == "decomposed") {
      for (const json& k : kernel.at("components")) agent_kernels.push_back(kernel_from_json(k));
    } else if (kernel_family != "joint") {
      throw ConfigError("kernel.family: unknown family '" + kernel_family + "'");
    }
    if (reward_family == "decomposed") {
      if (kernel_family != "decomposed") {
        throw ConfigError("kernel.family: decomposed reward requires a decomposed kernel");
      }
      std::vector<std::pair<LocalFunction, MixtureKernel>> components;
      for (std::size_t i = 0; i < locals.size() && i < agent_kernels.size(); ++i) {
        components.emplace_back(std::move(locals[i]), std::move(agent_kernels[i]));
      }
      if (locals.size() != agent_kernels.size()) {
        throw ConfigError("reward.locals: count differs from kernel.components");
      }
      return make_decomposable_game(std::move(components), spec);
    }
    if (reward_family == "reverse_engineered") {
      return make_reverse_engineered_game(std::move(locals), kernel_from_json(kernel.at("joint")),
                                          spec, reward.at("quadrature_resolution").get<int>());
    }
    if (reward_family == "coupled") {
      CoupledReward coupled;
      coupled.table = vec_from_json(reward.at("table"));
      coupled.coupling = reward.at("coupling").get<double>();
      coupled.locals = std::move(locals);
      MixtureKernel joint;
      if (kernel_family == "joint") joint = kernel_from_json(kernel.at("joint"));
      return make_generic_game(std::move(coupled), std::move(agent_kernels), std::move(joint),
                               spec);
    }
    throw ConfigError("reward.family: unknown family '" + reward_family + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("game document: ") + e.what());
  }
}

}  // namespace mafqi
