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

#ifndef MAFQI_BARRON_H_
#define MAFQI_BARRON_H_

#include <vector>

#include <Eigen/Dense>

#include "mafqi/game.h"
#include "mafqi/network.h"

namespace mafqi {

// f(x) = constant + linear . x + sum_j amplitude_j cos(frequency_j . x + phase_j).
struct FrequencyMixture {
  int dim = 1;
  double constant = 0.0;
  std::vector<CosineTerm> terms;
  Eigen::VectorXd linear;  // empty or zero for the supported family

  double operator()(const ConstVecRef& x) const;
  Eigen::VectorXd gradient_at_zero() const;
};

// sum_j |amplitude_j| ||frequency_j||_1^2. A nonzero linear part has no
// finite spectral norm and raises UnsupportedError.
double spectral_norm_gamma(const FrequencyMixture& f);

// Width-m Monte-Carlo network for f on [-1,1]^dim plus the correction
// f(0) + relu(g.x) - relu(-g.x) with g = grad f(0).
struct BarronApproximation {
  TwoLayerNet net;  // the sampled part, one head, no clamp
  double offset = 0.0;
  Eigen::VectorXd gradient;
  double v = 0.0;  // normalizer of the sampling density, <= 2 gamma(f)

  double operator()(const ConstVecRef& x) const;
  // Path norm of the sampled part only.
  double sampled_path_norm() const { return path_norm(net); }
};

BarronApproximation barron_monte_carlo_net(const FrequencyMixture& f, int m, Rng& rng);

}  // namespace mafqi

#endif  // MAFQI_BARRON_H_
