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

#include "mafqi/barron.h"

#include <cmath>
#include <numbers>
#include <random>

namespace mafqi {
namespace {

constexpr double kPi = std::numbers::pi;

// Antiderivative of |cos u|.
double abs_cos_primitive(double u) {
  const double k = std::floor((u + kPi / 2.0) / kPi);
  return 2.0 * k + std::sin(u - k * kPi);
}

// Sampling data for one cosine term. The term contributes
// |alpha| c^2 cos(c t + z b) (z w.x - t)_+ integrated over t in [0,1] and
// z = +-1, up to the sign folded into b.
struct TermPlan {
  double c = 0.0;
  double b = 0.0;
  Eigen::VectorXd direction;  // frequency / c
  double mass[2] = {0.0, 0.0};  // z = +1, -1
};

void check_terms(const FrequencyMixture& f) {
  if (f.dim < 1) throw ShapeError("frequency mixture: dim must be positive");
  for (const CosineTerm& t : f.terms) {
    if (t.frequency.size() != f.dim) throw ShapeError("frequency mixture: frequency dimension");
  }
  if (f.linear.size() != 0 && f.linear.size() != f.dim) {
    throw ShapeError("frequency mixture: linear part dimension");
  }
}

}  // namespace

double FrequencyMixture::operator()(const ConstVecRef& x) const {
  double v = constant;
  if (linear.size() != 0) v += linear.dot(x);
  for (const CosineTerm& t : terms) v += t.amplitude * std::cos(t.frequency.dot(x) + t.phase);
  return v;
}

Eigen::VectorXd FrequencyMixture::gradient_at_zero() const {
  Eigen::VectorXd g = linear.size() != 0 ? linear : Eigen::VectorXd::Zero(dim);
  for (const CosineTerm& t : terms) g -= t.amplitude * std::sin(t.phase) * t.frequency;
  return g;
}

double spectral_norm_gamma(const FrequencyMixture& f) {
  check_terms(f);
  if (f.linear.size() != 0 && f.linear.cwiseAbs().maxCoeff() > 0.0) {
    throw UnsupportedError("spectral norm: a linear part is outside the cosine-mixture family");
  }
  double total = 0.0;
  for (const CosineTerm& t : f.terms) {
    const double l1 = t.frequency.lpNorm<1>();
    total += std::abs(t.amplitude) * l1 * l1;
  }
  return total;
}

double BarronApproximation::operator()(const ConstVecRef& x) const {
  const double g = gradient.dot(x);
  return offset + std::max(g, 0.0) - std::max(-g, 0.0) + net.raw(x, 0);
}

BarronApproximation barron_monte_carlo_net(const FrequencyMixture& f, int m, Rng& rng) {
  spectral_norm_gamma(f);  // family check
  if (m < 1) throw ConfigError("barron: width must be positive");
  const int d = f.dim;

  std::vector<TermPlan> plans;
  std::vector<double> weights;
  double v = 0.0;
  for (const CosineTerm& t : f.terms) {
    TermPlan p;
    p.c = t.frequency.lpNorm<1>();
    if (p.c == 0.0 || t.amplitude == 0.0) continue;  // constant or absent
    p.direction = t.frequency / p.c;
    p.b = t.amplitude > 0.0 ? t.phase : t.phase + kPi;
    for (int zi = 0; zi < 2; ++zi) {
      const double zb = (zi == 0 ? 1.0 : -1.0) * p.b;
      const double avg = (abs_cos_primitive(p.c + zb) - abs_cos_primitive(zb)) / p.c;
      p.mass[zi] = std::abs(t.amplitude) * p.c * p.c * avg;
      weights.push_back(p.mass[zi]);
      v += p.mass[zi];
    }
    plans.push_back(std::move(p));
  }

  BarronApproximation out;
  out.net = TwoLayerNet(d, m, 1);
  out.offset = f(Eigen::VectorXd::Zero(d));
  out.gradient = f.gradient_at_zero();
  out.v = v;
  if (v == 0.0) return out;

  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  TwoLayerNet::Head& h = out.net.head(0);
  for (int k = 0; k < m; ++k) {
    const int idx = pick(rng);
    const TermPlan& p = plans[idx / 2];
    const double z = idx % 2 == 0 ? 1.0 : -1.0;
    // t on [0,1] with density proportional to |cos(c t + z b)|.
    double t = 0.0;
    double cosv = 0.0;
    do {
      t = uniform01(rng);
      cosv = std::cos(p.c * t + z * p.b);
    } while (uniform01(rng) >= std::abs(cosv));
    const double s = cosv > 0.0 ? -1.0 : 1.0;
    h.a[k] = s * v / m;
    h.b.row(k) = z * p.direction.transpose();
    h.c[k] = -t;
  }
  return out;
}

}  // namespace mafqi
