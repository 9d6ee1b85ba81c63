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

#include "config.h"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace mafqi::cli {
namespace {

using Setter = std::function<void(const std::string& path, const std::string& value)>;

[[noreturn]] void bad_value(const std::string& path, const std::string& what,
                            const std::string& value) {
  throw ConfigError(path + ": expected " + what + ", got '" + value + "'");
}

template <typename T>
T parse_integer(const std::string& path, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(path, "an integer", value);
  return out;
}

double parse_double(const std::string& path, const std::string& value) {
  if (value.empty()) bad_value(path, "a number", value);
  char* end = nullptr;
  const double out = std::strtod(value.c_str(), &end);
  if (end != value.c_str() + value.size()) bad_value(path, "a number", value);
  return out;
}

bool parse_bool(const std::string& path, const std::string& value) {
  const std::string v = boost::algorithm::to_lower_copy(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(path, "a boolean", value);
}

std::vector<std::string> parse_list(const std::string& value) {
  std::vector<std::string> items;
  if (boost::algorithm::trim_copy(value).empty()) return items;
  boost::algorithm::split(items, value, boost::algorithm::is_any_of(","));
  for (std::string& item : items) boost::algorithm::trim(item);
  return items;
}

Setter int_field(int& target) {
  return [&target](const std::string& p, const std::string& v) { target = parse_integer<int>(p, v); };
}
Setter double_field(double& target) {
  return [&target](const std::string& p, const std::string& v) { target = parse_double(p, v); };
}
Setter bool_field(bool& target) {
  return [&target](const std::string& p, const std::string& v) { target = parse_bool(p, v); };
}
Setter string_field(std::string& target) {
  return [&target](const std::string&, const std::string& v) { target = v; };
}

std::map<std::string, std::map<std::string, Setter>> schema(ExperimentConfig& cfg) {
  GameSection& g = cfg.game;
  OracleSection& o = cfg.oracle;
  FqiConfig& f = cfg.fqi;
  AnalysisSection& a = cfg.analysis;
  std::map<std::string, std::map<std::string, Setter>> s;
  s[""] = {
      {"schema_version", int_field(cfg.schema_version)},
      {"seed",
       [&cfg](const std::string& p, const std::string& v) {
         cfg.seed = parse_integer<std::uint64_t>(p, v);
       }},
      {"out", string_field(cfg.out)},
  };
  s["game"] = {
      {"kind", [&g](const std::string&, const std::string& v) { g.kind = game_kind_from_string(v); }},
      {"file", string_field(g.file)},
      {"agents", int_field(g.agents)},
      {"state_dim", int_field(g.state_dim)},
      {"actions",
       [&g](const std::string& p, const std::string& v) {
         g.actions.clear();
         for (const std::string& item : parse_list(v)) g.actions.push_back(parse_integer<int>(p, item));
       }},
      {"gamma", double_field(g.gamma)},
      {"r_max", double_field(g.r_max)},
      {"quadrature_resolution", int_field(g.quadrature_resolution)},
      {"coupling", double_field(g.coupling)},
  };
  s["oracle"] = {{"resolution", int_field(o.resolution)}, {"tol", double_field(o.tol)}};
  s["fqi"] = {
      {"iterations", int_field(f.iterations)},
      {"samples", int_field(f.samples)},
      {"width", int_field(f.width)},
      {"budget", double_field(f.fit.path_norm_budget)},
      {"epochs", int_field(f.fit.epochs)},
      {"batch_size", int_field(f.fit.batch_size)},
      {"step_size", double_field(f.fit.step_size)},
      {"final_step_fraction", double_field(f.fit.final_step_fraction)},
      {"penalty", double_field(f.fit.penalty)},
      {"early_stop_tol", double_field(f.fit.early_stop_tol)},
      {"target_clamp", bool_field(f.target_clamp)},
      {"warm_start", bool_field(f.warm_start)},
      {"step_decay", double_field(f.step_decay)},
  };
  s["analysis"] = {
      {"bounds",
       [&a](const std::string& p, const std::string& v) {
         a.bounds = parse_list(v);
         const std::vector<std::string> known = known_bounds();
         for (const std::string& b : a.bounds) {
           if (std::find(known.begin(), known.end(), b) == known.end()) {
             throw ConfigError(p + ": unknown bound '" + b + "'");
           }
         }
       }},
      {"delta", double_field(a.delta)},
      {"phi", double_field(a.phi)},
      {"input", string_field(a.input)},
      {"rademacher_draws", int_field(a.rademacher_draws)},
      {"rademacher_candidates", int_field(a.rademacher_candidates)},
      {"rademacher_samples", int_field(a.rademacher_samples)},
      {"rademacher_dim", int_field(a.rademacher_dim)},
      {"rademacher_path_norm", double_field(a.rademacher_path_norm)},
      {"generalization_seeds", int_field(a.generalization_seeds)},
      {"generalization_samples", int_field(a.generalization_samples)},
      {"l2_linf_cases", int_field(a.l2_linf_cases)},
  };
  return s;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.schema_version != kConfigSchemaVersion) {
    throw ConfigError("schema_version: unsupported version " + std::to_string(cfg.schema_version));
  }
  if (cfg.out.empty()) throw ConfigError("out: must not be empty");
  cfg.game.spec().validate();
  if (cfg.game.quadrature_resolution < 1) {
    throw ConfigError("game.quadrature_resolution: must be positive");
  }
  if (cfg.oracle.resolution < 0) throw ConfigError("oracle.resolution: must be >= 0");
  if (!(cfg.oracle.tol > 0.0)) throw ConfigError("oracle.tol: must be positive");
  cfg.fqi.validate();
  const AnalysisSection& a = cfg.analysis;
  if (!(a.delta > 0.0 && a.delta < 1.0)) throw ConfigError("analysis.delta: must lie in (0, 1)");
  if (a.phi < 0.0) throw ConfigError("analysis.phi: must be >= 0");
  if (a.rademacher_draws < 100) throw ConfigError("analysis.rademacher_draws: must be >= 100");
  if (a.rademacher_candidates < 1 || a.rademacher_samples < 1 || a.rademacher_dim < 1) {
    throw ConfigError("analysis.rademacher_*: sizes must be positive");
  }
  if (a.generalization_seeds < 0 || a.generalization_samples < 1 || a.l2_linf_cases < 0) {
    throw ConfigError("analysis: suite sizes must be non-negative");
  }
}

}  // namespace

std::vector<std::string> known_bounds() {
  return {"policy_gap", "cumulative_recursion", "error_propagation",
          "rademacher", "generalization",       "l2_linf"};
}

GameSpec GameSection::spec() const {
  GameSpec s;
  s.num_agents = agents;
  s.state_dim = state_dim;
  s.actions_per_agent = actions;
  if (actions.size() == 1 && agents > 1) s.actions_per_agent.assign(agents, actions[0]);
  s.gamma = gamma;
  s.r_max = r_max;
  s.kind = kind;
  return s;
}

ExperimentConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ExperimentConfig cfg;
  cfg.schema_version = 0;
  auto setters = schema(cfg);
  bool has_version = false;
  for (const auto& [key, node] : tree) {
    if (!node.empty()) {
      auto section = setters.find(key);
      if (section == setters.end() || key.empty()) throw ConfigError(key + ": unknown section");
      for (const auto& [name, leaf] : node) {
        const std::string path = key + "." + name;
        auto it = section->second.find(name);
        if (it == section->second.end()) throw ConfigError(path + ": unknown key");
        it->second(path, boost::algorithm::trim_copy(leaf.data()));
      }
      continue;
    }
    auto it = setters[""].find(key);
    if (it == setters[""].end()) {
      // An empty section parses like a top-level key.
      if (setters.contains(key)) continue;
      throw ConfigError(key + ": unknown key");
    }
    if (key == "schema_version") has_version = true;
    it->second(key, boost::algorithm::trim_copy(node.data()));
  }
  if (!has_version) throw ConfigError("schema_version: missing");
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("config file not found: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

Overrides environment_overrides() {
  Overrides env;
  if (const char* seed = std::getenv("MAFQI_SEED"); seed != nullptr && *seed != '\0') {
    env.seed = parse_integer<std::uint64_t>("MAFQI_SEED", seed);
  }
  if (const char* out = std::getenv("MAFQI_OUT"); out != nullptr && *out != '\0') env.out = out;
  return env;
}

void apply_overrides(ExperimentConfig& cfg, const Overrides& env, const Overrides& flags) {
  if (flags.seed) {
    cfg.seed = *flags.seed;
  } else if (env.seed) {
    cfg.seed = *env.seed;
  }
  if (flags.out) {
    cfg.out = *flags.out;
  } else if (env.out) {
    cfg.out = *env.out;
  }
  if (cfg.out.empty()) throw ConfigError("out: must not be empty");
}

}  // namespace mafqi::cli
