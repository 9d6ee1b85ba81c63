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

#ifndef MAFQI_COMMON_H_
#define MAFQI_COMMON_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mafqi {

using Rng = std::mt19937_64;
using ConstVecRef = Eigen::Ref<const Eigen::VectorXd>;

// Base class for every error raised by the library. The CLI maps the
// subclasses onto stable exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InvalidKernelError : public Error {
 public:
  using Error::Error;
};

class BoundViolationError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

// Raised when a loss or iterate stops being finite.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

// splitmix64 finalizer; used to derive independent streams from a seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline Rng derive_stream(std::uint64_t seed, std::uint64_t a,
                         std::uint64_t b = 0) {
  return Rng(mix_seed(mix_seed(mix_seed(seed) ^ a) ^ (b * 0x2545f4914f6cdd1dULL)));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

}  // namespace mafqi

#endif  // MAFQI_COMMON_H_
