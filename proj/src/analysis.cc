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

#include "mafqi/analysis.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

namespace mafqi {
namespace {

constexpr double kPolicyGapSlack = 1e-8;
constexpr double kRecursionSlack = 1e-8;

double last_or_nan(const ConvergenceReport& report, double IterationRecord::*field) {
  if (report.rows.empty()) return std::numeric_limits<double>::quiet_NaN();
  return report.rows.back().*field;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kHolds:
      return "holds";
    case Verdict::kViolated:
      return "violated";
    case Verdict::kNotApplicable:
      return "not_applicable";
  }
  return "unknown";
}

nlohmann::json BoundReport::to_json() const {
  nlohmann::json doc;
  doc["name"] = name;
  doc["lhs"] = lhs;
  doc["rhs"] = rhs;
  doc["slack"] = slack;
  doc["verdict"] = to_string(verdict);
  doc["holds"] = holds;
  doc["margin"] = margin;
  doc["inputs"] = nlohmann::json::object();
  for (const auto& [k, v] : inputs) doc["inputs"][k] = v;
  doc["estimator"] = estimator;
  doc["note"] = note;
  return doc;
}

BoundReport make_report(std::string name, double lhs, double rhs, double slack) {
  BoundReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = slack;
  r.margin = rhs - lhs;
  r.holds = lhs <= rhs + slack;
  r.verdict = r.holds ? Verdict::kHolds : Verdict::kViolated;
  return r;
}

BoundReport not_applicable(std::string name, std::string note) {
  BoundReport r;
  r.name = std::move(name);
  r.lhs = std::numeric_limits<double>::quiet_NaN();
  r.rhs = std::numeric_limits<double>::quiet_NaN();
  r.margin = std::numeric_limits<double>::quiet_NaN();
  r.note = std::move(note);
  return r;
}

namespace {

double number_or_nan(const nlohmann::json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

Verdict verdict_from_string(const std::string& name) {
  if (name == "holds") return Verdict::kHolds;
  if (name == "violated") return Verdict::kViolated;
  if (name == "not_applicable") return Verdict::kNotApplicable;
  throw InputError("unknown verdict '" + name + "'");
}

}  // namespace

BoundReport bound_report_from_json(const nlohmann::json& doc) {
  try {
    BoundReport r;
    r.name = doc.at("name").get<std::string>();
    r.lhs = number_or_nan(doc.at("lhs"));
    r.rhs = number_or_nan(doc.at("rhs"));
    r.slack = number_or_nan(doc.at("slack"));
    r.verdict = verdict_from_string(doc.at("verdict").get<std::string>());
    r.holds = doc.at("holds").get<bool>();
    r.margin = number_or_nan(doc.at("margin"));
    for (const auto& [k, v] : doc.at("inputs").items()) r.inputs[k] = number_or_nan(v);
    r.estimator = doc.value("estimator", "");
    r.note = doc.value("note", "");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed bound report: ") + e.what());
  }
}

std::vector<BoundReport> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open " + path);
  std::vector<BoundReport> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(bound_report_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(path + ": " + e.what());
    }
  }
  return out;
}

std::string to_jsonl(std::span<const BoundReport> reports) {
  std::string out;
  for (const BoundReport& r : reports) out += r.to_json().dump() + "\n";
  return out;
}

void write_jsonl(const std::string& path, std::span<const BoundReport> reports) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out << to_jsonl(reports);
  if (!out) throw InputError("write failed for " + path);
}

std::string summary_csv(std::span<const BoundReport> reports) {
  struct Row {
    int checks = 0, holds = 0, violated = 0, na = 0;
    double worst = std::numeric_limits<double>::infinity();
  };
  std::vector<std::string> order;
  std::map<std::string, Row> rows;
  for (const BoundReport& r : reports) {
    if (!rows.contains(r.name)) order.push_back(r.name);
    Row& row = rows[r.name];
    ++row.checks;
    if (r.verdict == Verdict::kNotApplicable) {
      ++row.na;
      continue;
    }
    (r.holds ? row.holds : row.violated) += 1;
    row.worst = std::min(row.worst, r.margin);
  }
  std::ostringstream os;
  os << std::setprecision(17);
  os << "name,checks,holds,violated,not_applicable,hold_rate,worst_margin\n";
  for (const std::string& name : order) {
    const Row& row = rows[name];
    os << name << ',' << row.checks << ',' << row.holds << ',' << row.violated << ',' << row.na
       << ',';
    const int applicable = row.holds + row.violated;
    if (applicable > 0) {
      os << static_cast<double>(row.holds) / applicable << ',' << row.worst;
    } else {
      os << ',';
    }
    os << '\n';
  }
  return os.str();
}

BoundReport check_policy_gap(const QTable& qstar, const QTable& qtilde, const TabularGame& tg) {
  if (qstar.rows() != tg.num_nodes() || qstar.cols() != tg.num_actions() ||
      qtilde.rows() != qstar.rows() || qtilde.cols() != qstar.cols()) {
    throw ShapeError("policy gap: tables must share the grid");
  }
  const double gamma = tg.gamma();
  const QTable qpi = policy_eval(tg, greedy_policy(qtilde));
  const double est = (qstar - qtilde).cwiseAbs().maxCoeff();
  BoundReport r = make_report("policy_gap", (qstar - qpi).cwiseAbs().maxCoeff(),
                              2.0 * gamma / (1.0 - gamma) * est, kPolicyGapSlack);
  r.inputs = {{"gamma", gamma}, {"sup_err", est}};
  return r;
}

BoundReport check_cumulative_recursion(const ConvergenceReport& report, double gamma,
                                       int num_agents, double r_max) {
  const double eta = (num_agents + 1) * gamma;
  if (eta >= 1.0) {
    BoundReport r = not_applicable("cumulative_recursion", "vacuous: eta >= 1");
    r.inputs = {{"gamma", gamma}, {"N", num_agents}, {"eta", eta}};
    return r;
  }
  if (report.rows.empty()) return not_applicable("cumulative_recursion", "no iterations");
  const IterationRecord& last = report.rows.back();
  if (std::isnan(last.sup_err) || std::isnan(last.eps_proj_sup)) {
    throw PreconditionError("cumulative recursion: the report has no oracle columns");
  }
  const double eps_max = report.eps_proj_max();
  const double tail = 4.0 * std::pow(gamma, last.k) * r_max / ((1.0 - gamma) * (1.0 - gamma));
  BoundReport r =
      make_report("cumulative_recursion", last.sup_err, eps_max / (1.0 - eta) + tail,
                  kRecursionSlack);
  r.inputs = {{"gamma", gamma}, {"N", num_agents}, {"K", last.k},   {"R_max", r_max},
              {"eta", eta},     {"eps_max", eps_max}, {"tail", tail}};
  r.estimator = report.eps_estimator;
  return r;
}

double default_phi(double gamma) { return 1.0 / ((1.0 - gamma) * (1.0 - gamma)); }

BoundReport error_propagation_report(const ConvergenceReport& report, double gamma,
                                     double r_max, double phi) {
  if (!(phi > 0.0)) throw PreconditionError("error propagation: phi must be positive");
  const double l1 = last_or_nan(report, &IterationRecord::l1_mu_err);
  if (report.rows.empty() || std::isnan(l1)) {
    return not_applicable("error_propagation", "needs oracle policy errors");
  }
  const int k = report.rows.back().k;
  const double denom = (1.0 - gamma) * (1.0 - gamma);
  const double eps_max = report.eps_max();
  const double algorithmic = 4.0 * std::pow(gamma, k + 1) * r_max / denom;
  BoundReport r = make_report("error_propagation", l1,
                              2.0 * phi * gamma * eps_max / denom + algorithmic, 1e-8);
  r.inputs = {{"gamma", gamma}, {"K", k},     {"R_max", r_max},
              {"phi", phi},     {"eps_max", eps_max}, {"algorithmic_term", algorithmic}};
  r.estimator = report.eps_estimator;
  r.note = "diagnostic: phi is supplied, not computed";
  return r;
}

LogDecayFit fit_log_decay(std::span<const double> values, int first) {
  const int n = static_cast<int>(values.size()) - first;
  if (first < 0 || n < 2) throw PreconditionError("log decay fit: need two points");
  double mx = 0.0, my = 0.0;
  for (int k = first; k < first + n; ++k) {
    if (!(values[k] > 0.0)) throw PreconditionError("log decay fit: values must be positive");
    mx += k;
    my += std::log(values[k]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int k = first; k < first + n; ++k) {
    const double dx = k - mx;
    const double dy = std::log(values[k]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LogDecayFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

RademacherEstimate finite_class_rademacher(const Eigen::MatrixXd& values, int sign_draws,
                                           Rng& rng) {
  if (sign_draws < 2 || values.rows() < 1) {
    throw PreconditionError("rademacher: need candidates and two sign draws");
  }
  const Eigen::Index n = values.cols();
  Eigen::VectorXd xi(n);
  Eigen::VectorXd sups(sign_draws);
  std::bernoulli_distribution coin(0.5);
  for (int t = 0; t < sign_draws; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) xi[i] = coin(rng) ? 1.0 : -1.0;
    sups[t] = (values * xi).maxCoeff() / static_cast<double>(n);
  }
  const double mean = sups.mean();
  const double sd = std::sqrt((sups.array() - mean).square().sum() / (sign_draws - 1));
  return {mean, 1.96 * sd / std::sqrt(static_cast<double>(sign_draws))};
}

double massart_bound(const Eigen::MatrixXd& values) {
  const Eigen::RowVectorXd mean = values.colwise().mean();
  const double spread = (values.rowwise() - mean).rowwise().norm().maxCoeff();
  return spread * std::sqrt(2.0 * std::log(static_cast<double>(values.rows()))) /
         static_cast<double>(values.cols());
}

double rademacher_bound(double path_norm, int dim, int n) {
  return 2.0 * path_norm * std::sqrt(2.0 * std::log(2.0 * dim) / n);
}

BoundReport empirical_rademacher(const Eigen::MatrixXd& x, const RademacherConfig& cfg, Rng& rng,
                                 RademacherEstimate* estimate) {
  const int dim = static_cast<int>(x.rows());
  const int n = static_cast<int>(x.cols());
  if (n < 1 || dim < 1) throw PreconditionError("rademacher: empty data");
  if (cfg.sign_draws < 100) throw PreconditionError("rademacher: need at least 100 sign draws");
  if (cfg.candidates < 1 || !(cfg.path_norm >= 0.0)) {
    throw PreconditionError("rademacher: bad candidate configuration");
  }
  if (x.cwiseAbs().maxCoeff() > 1.0) throw PreconditionError("rademacher: inputs outside [-1,1]");

  // Unit neurons: ||b||_1 + |c| = 1.
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 1.0);
  auto normalize = [](Eigen::VectorXd& w) {
    const double s = w.lpNorm<1>();
    if (s > 0.0) w /= s;
  };
  Eigen::MatrixXd weights(cfg.candidates, dim + 1);
  for (int k = 0; k < cfg.candidates; ++k) {
    Eigen::VectorXd w(dim + 1);
    for (int j = 0; j <= dim; ++j) w[j] = unit(rng);
    normalize(w);
    weights.row(k) = w.transpose();
  }
  Eigen::MatrixXd xa(dim + 1, n);
  xa.topRows(dim) = x;
  xa.row(dim).setOnes();
  const Eigen::MatrixXd act = (weights * xa).cwiseMax(0.0);

  std::bernoulli_distribution coin(0.5);
  Eigen::VectorXd xi(n);
  Eigen::VectorXd sups(cfg.sign_draws);
  for (int t = 0; t < cfg.sign_draws; ++t) {
    for (int i = 0; i < n; ++i) xi[i] = coin(rng) ? 1.0 : -1.0;
    const Eigen::VectorXd s = act * xi;
    Eigen::Index best = 0;
    s.cwiseAbs().maxCoeff(&best);
    Eigen::VectorXd w = weights.row(best).transpose();
    double value = std::abs(s[best]);
    double step = 0.2;
    for (int it = 0; it < cfg.local_search_steps; ++it, step *= 0.8) {
      Eigen::VectorXd trial = w;
      for (int j = 0; j <= dim; ++j) trial[j] += step * jitter(rng);
      normalize(trial);
      const double v = std::abs((trial.transpose() * xa).cwiseMax(0.0).dot(xi));
      if (v > value) {
        value = v;
        w = trial;
      }
    }
    sups[t] = cfg.path_norm * value / n;
  }
  const double mean = sups.mean();
  const double sd = std::sqrt((sups.array() - mean).square().sum() / (cfg.sign_draws - 1));
  const RademacherEstimate est{mean, 1.96 * sd / std::sqrt(static_cast<double>(cfg.sign_draws))};
  if (estimate != nullptr) *estimate = est;

  BoundReport r = make_report("rademacher", est.estimate, rademacher_bound(cfg.path_norm, dim, n),
                              0.0);
  r.inputs = {{"Q", cfg.path_norm},
              {"D", dim},
              {"n", n},
              {"sign_draws", cfg.sign_draws},
              {"candidates", cfg.candidates},
              {"ci_half_width", est.ci_half_width}};
  r.estimator = "finite_candidates_local_search";
  return r;
}

BoundReport generalization_gap_check(const TwoLayerNet& net, const Eigen::MatrixXd& train_x,
                                     const Eigen::VectorXd& train_y,
                                     const Eigen::MatrixXd& fresh_x,
                                     const Eigen::VectorXd& fresh_y, double loss_bound,
                                     double lipschitz, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw PreconditionError("generalization: delta in (0,1)");
  if (train_x.cols() != train_y.size() || fresh_x.cols() != fresh_y.size() ||
      train_y.size() == 0 || fresh_y.size() == 0) {
    throw ShapeError("generalization: samples and targets disagree");
  }
  auto loss = [&](const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::VectorXd raw = net.raw_batch(x, 0);
    double total = 0.0;
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      const double e = net.truncate(raw[j]) - y[j];
      total += e * e;
    }
    return total / static_cast<double>(y.size());
  };
  const double train = loss(train_x, train_y);
  const double population = loss(fresh_x, fresh_y);
  const double n = static_cast<double>(train_y.size());
  const double pn = head_path_norm<double>(net.head(0));
  const double c = std::numbers::pi * std::numbers::pi / 6.0;
  const double d = net.input_dim();
  const double rhs = 4.0 * lipschitz * (pn + 1.0) * std::sqrt(2.0 * std::log(2.0 * d) / n) +
                     loss_bound * std::sqrt(2.0 * std::log(2.0 * c * (pn + 1.0) * (pn + 1.0) /
                                                           delta) / n);
  BoundReport r = make_report("generalization", std::abs(population - train), rhs, 0.0);
  r.inputs = {{"n", n},         {"fresh_n", static_cast<double>(fresh_y.size())},
              {"path_norm", pn}, {"delta", delta},
              {"rho", lipschitz}, {"B", loss_bound},
              {"train_loss", train}, {"fresh_loss", population}};
  r.estimator = "fresh_sample";
  return r;
}

double l2_linf_constant(int dim) {
  const double d = dim;
  return std::pow(std::numbers::pi, d / 2.0) / (3.0 * d * d * std::tgamma(d / 2.0 + 1.0));
}

BoundReport lipschitz_l2_linf_check(const Eigen::VectorXd& values, int resolution, int dim,
                                    double lipschitz, double rel_slack) {
  if (dim < 1 || resolution < 1 || !(lipschitz > 0.0)) {
    throw PreconditionError("l2/linf: bad grid or Lipschitz constant");
  }
  if (values.size() != static_cast<Eigen::Index>(std::llround(std::pow(resolution, dim)))) {
    throw ShapeError("l2/linf: values do not fill the grid");
  }
  Eigen::Index arg = 0;
  const double m = values.cwiseAbs().maxCoeff(&arg);
  // Distance from the maximizing node to the cube boundary.
  double dist = std::numeric_limits<double>::infinity();
  Eigen::Index rest = arg;
  for (int j = 0; j < dim; ++j) {
    const double coord = (static_cast<double>(rest % resolution) + 0.5) / resolution;
    rest /= resolution;
    dist = std::min({dist, coord, 1.0 - coord});
  }
  const double radius = m / lipschitz;
  if (radius > dist + 1e-12) {
    BoundReport r = not_applicable("l2_linf", "ball around the maximizer leaves the domain");
    r.inputs = {{"d", dim}, {"L", lipschitz}, {"sup", m}, {"radius", radius},
                {"boundary_distance", dist}};
    return r;
  }
  const double lhs = l2_linf_constant(dim) * std::pow(m, dim + 2) / std::pow(lipschitz, dim);
  const double l2sq = values.squaredNorm() / static_cast<double>(values.size());
  BoundReport r = make_report("l2_linf", lhs, l2sq, rel_slack * lhs);
  r.inputs = {{"d", dim}, {"L", lipschitz}, {"sup", m}, {"radius", radius},
              {"boundary_distance", dist}, {"resolution", resolution}};
  r.estimator = "midpoint_quadrature";
  return r;
}

}  // namespace mafqi
