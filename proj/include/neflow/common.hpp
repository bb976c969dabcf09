// Copyright 2026 The neflow Authors.
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

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace neflow {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structurally invalid inputs: bad dimensions, broken invariants,
// unsatisfiable requests (e.g. non-Hurwitz coefficients).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A game evaluated outside its feasible region. Never silently projected:
// the dynamics under study are unconstrained, so leaving the domain is a
// hard failure of the run, not something to patch over.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed or unknown configuration input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An iterative solve that did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual(residual) {}
  double residual;
};

// Integration aborted (non-finite state, step underflow). Carries the last
// finite state so the failure can be inspected.
class SimAbort : public Error {
 public:
  SimAbort(const std::string& what, double t, Eigen::VectorXd last_state)
      : Error(what), t(t), last_state(std::move(last_state)) {}
  double t;
  Eigen::VectorXd last_state;
};

// Deterministic random source. Draws are derived from the raw mt19937_64
// stream with fixed arithmetic instead of std::*_distribution, whose output
// is implementation-defined; this keeps seeded artifacts byte-identical
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller on the portable uniforms.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = uniform01();
    double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return mag * std::cos(2.0 * M_PI * u2);
  }

  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Eigen::VectorXd uniform_vector(int n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace neflow
