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

#ifndef MAFQI_ANALYSIS_H_
#define MAFQI_ANALYSIS_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "mafqi/fqi.h"
#include "mafqi/network.h"
#include "mafqi/oracle.h"

namespace mafqi {

enum class Verdict { kHolds, kViolated, kNotApplicable };

std::string to_string(Verdict v);

// One evaluated inequality lhs <= rhs. `holds` is lhs <= rhs + slack and is
// false for not-applicable checks.
struct BoundReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  Verdict verdict = Verdict::kNotApplicable;
  bool holds = false;
  double margin = 0.0;  // rhs - lhs
  std::map<std::string, double> inputs;
  std::string estimator;
  std::string note;

  nlohmann::json to_json() const;
};

// Fills verdict, holds and margin.
BoundReport make_report(std::string name, double lhs, double rhs, double slack);
BoundReport not_applicable(std::string name, std::string note);

// Inverse of BoundReport::to_json; null numbers read back as NaN. Throws
// InputError on malformed documents.
BoundReport bound_report_from_json(const nlohmann::json& doc);
std::vector<BoundReport> read_jsonl(const std::string& path);

// One JSON object per line.
std::string to_jsonl(std::span<const BoundReport> reports);
void write_jsonl(const std::string& path, std::span<const BoundReport> reports);
// name,checks,holds,violated,not_applicable,hold_rate,worst_margin, one row
// per bound name in order of first appearance. hold_rate counts applicable
// checks only and is empty when there are none.
std::string summary_csv(std::span<const BoundReport> reports);

// ||Q* - Q^pi||_inf <= 2 gamma / (1 - gamma) ||Q* - qtilde||_inf with pi
// greedy w.r.t. qtilde. Slack 1e-8.
BoundReport check_policy_gap(const QTable& qstar, const QTable& qtilde, const TabularGame& tg);

// ||Q* - Q_K||_inf <= eps_max / (1 - eta) + 4 gamma^K R_max / (1 - gamma)^2,
// eta = (N + 1) gamma, with eps_max the worst sup distance to the projected
// Bellman target. Vacuous (not applicable) when eta >= 1. Needs the oracle
// columns of the report.
BoundReport check_cumulative_recursion(const ConvergenceReport& report, double gamma,
                                       int num_agents, double r_max);

// ||Q* - Q^{pi_K}||_{1,mu} <= 2 phi gamma eps_max / (1 - gamma)^2
//                              + 4 gamma^{K+1} R_max / (1 - gamma)^2
// with eps_max the sigma-norm discrepancy. phi cannot be computed; the
// default 1/(1-gamma)^2 is a placeholder and the verdict is diagnostic.
BoundReport error_propagation_report(const ConvergenceReport& report, double gamma,
                                     double r_max, double phi);
double default_phi(double gamma);

struct LogDecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
// Least-squares line through (k, log values[k]) for k >= first. Values must
// be positive.
LogDecayFit fit_log_decay(std::span<const double> values, int first = 0);

// Rademacher estimates.
struct RademacherEstimate {
  double estimate = 0.0;
  double ci_half_width = 0.0;  // 95%, normal approximation
};

// (1/n) E_xi max_rows <xi, values.row(r)> over a finite candidate set
// (rows x n).
RademacherEstimate finite_class_rademacher(const Eigen::MatrixXd& values, int sign_draws,
                                           Rng& rng);
// max_a ||a - mean|| sqrt(2 log |A|) / n.
double massart_bound(const Eigen::MatrixXd& values);

struct RademacherConfig {
  double path_norm = 4.0;
  int candidates = 500;
  int sign_draws = 1000;
  int local_search_steps = 20;
};

// Lower estimate of the Rademacher complexity of two-layer ReLU nets with
// path norm <= Q on the columns of x (entries in [-1, 1]). The sup over the
// class is attained by a single neuron with |a| = Q, so candidates are
// single neurons with ||b||_1 + |c| = 1, refined per sign draw by local
// search. Compared with 2 Q sqrt(2 log(2D) / n).
BoundReport empirical_rademacher(const Eigen::MatrixXd& x, const RademacherConfig& cfg,
                                 Rng& rng, RademacherEstimate* estimate = nullptr);
double rademacher_bound(double path_norm, int dim, int n);

// |L(f) - L_n(f)| <= 4 rho (||f||_P + 1) sqrt(2 log(2d) / n)
//                   + B sqrt(2 log(2 c (||f||_P + 1)^2 / delta) / n),
// c = pi^2 / 6, for the squared loss of head 0 of `net`. L(f) is measured on
// the fresh sample.
BoundReport generalization_gap_check(const TwoLayerNet& net, const Eigen::MatrixXd& train_x,
                                     const Eigen::VectorXd& train_y,
                                     const Eigen::MatrixXd& fresh_x,
                                     const Eigen::VectorXd& fresh_y, double loss_bound,
                                     double lipschitz, double delta);
// For outputs and targets in [-U, U]: squared loss bounded by 4U^2 and
// 4U-Lipschitz in the prediction.
inline double squared_loss_bound(double u) { return 4.0 * u * u; }
inline double squared_loss_lipschitz(double u) { return 4.0 * u; }

// ||f||_2^2 >= ||f||_inf^{d+2} pi^{d/2} / (3 L^d d^2 Gamma(d/2 + 1)) for an
// L-Lipschitz f on [0,1]^d given at the midpoints of a `resolution`^d grid.
// The check needs the ball of radius ||f||_inf / L around the maximizer
// inside the cube and is not applicable otherwise. The slack is relative,
// for quadrature error.
BoundReport lipschitz_l2_linf_check(const Eigen::VectorXd& values, int resolution, int dim,
                                    double lipschitz, double rel_slack = 1e-3);
double l2_linf_constant(int dim);

}  // namespace mafqi

#endif  // MAFQI_ANALYSIS_H_
