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

#include <string>
#include <vector>

#include "neflow/exosystem.hpp"
#include "neflow/game.hpp"

namespace neflow {

// A ready-to-run case study: the game, one disturbance generator per agent,
// the default initial profile, and (optionally) per-agent observer pole
// templates when the generic per-block defaults are a poor fit.
struct Scenario {
  std::string name;
  GameSpec game;
  std::vector<Exosystem> exos;
  Eigen::VectorXd x0;
  std::vector<std::vector<double>> pole_templates;  // empty: per-block default
};

// ---------------------------------------------------------------------------
// Sensor network: five planar agents, quadratic costs
//   J_i(x) = x_i' x_i + x_i' r_i + sum_j |x_i - x_j|^2,
// so the partial gradient is 2 x_i + r_i + 2 (N x_i - sum_j x_j) and the
// stacked gradient map is F(x) = A x + r with A = 12 I - 2 (1 1' (x) I_2).
// Each agent is hit by the constant disturbance (0.5, 0).
// ---------------------------------------------------------------------------

inline Eigen::MatrixXd sensor_targets() {
  Eigen::MatrixXd r(5, 2);
  r << 2, -2, -2, -2, -4, 2, 2, -4, 3, 3;
  return r;
}

inline GameSpec sensor_network_game() {
  const int N = 5, ni = 2, n = N * ni;
  Eigen::MatrixXd A = 12.0 * Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      A.block(ni * i, ni * j, ni, ni) -= 2.0 * Eigen::MatrixXd::Identity(ni, ni);
    }
  }
  const Eigen::MatrixXd targets = sensor_targets();
  Eigen::VectorXd r(n);
  for (int i = 0; i < N; ++i) r.segment(ni * i, ni) = targets.row(i);
  return GameSpec(std::vector<int>(N, ni), QuadraticGame{A, r},
                  /*mu=*/2.0, /*theta=*/12.0);
}

inline Scenario sensor_scenario() {
  GameSpec game = sensor_network_game();
  Eigen::VectorXd d(2);
  d << 0.5, 0.0;
  std::vector<Exosystem> exos;
  for (int i = 0; i < game.players(); ++i) exos.push_back(constant_disturbance(d));
  return Scenario{"sensor", std::move(game), std::move(exos),
                  Eigen::VectorXd::Zero(10), {}};
}

// ---------------------------------------------------------------------------
// OSNR power control: N channels with costs
//   J_i(x) = a_i x_i + 1/(P0 - sum_j x_j)
//            - b_i ln(1 + c_i x_i / (n0_i + sum_{j != i} Gamma_ij x_j)),
// a shared-power barrier plus a signal-to-noise utility. Channel i's pilot
// disturbance is d_i = P0 (1 + m_i sin(2 pi f_i t)) with m_i = 0.1 i. The
// parameter defaults are synthetic (the utility weights of the original
// link experiments are not public), and the pilot frequencies are rescaled
// by `time_scale` so fixed-step integration resolves every tone; the
// mathematics is unchanged under the common rescaling.
// ---------------------------------------------------------------------------

struct OsnrParams {
  int N = 10;
  Eigen::VectorXd a, b, c, n0;  // per-channel cost parameters
  double P0 = 5.0;              // total power target
  Eigen::MatrixXd Gamma;        // link system matrix
  Eigen::VectorXd m;            // modulation indices, m_i = 0.1 i
  Eigen::VectorXd f_hz;         // pilot frequencies, f_i = 10 i kHz
  double time_scale = 1e-4;     // frequency rescale for desk-scale runs

  static OsnrParams defaults(int channels = 10) {
    OsnrParams p;
    p.N = channels;
    p.a = Eigen::VectorXd::Ones(p.N);
    p.b = Eigen::VectorXd::Ones(p.N);
    p.c = Eigen::VectorXd::Ones(p.N);
    p.n0 = Eigen::VectorXd::Constant(p.N, 0.05);
    p.Gamma = Eigen::MatrixXd::Constant(p.N, p.N, 0.05);
    p.Gamma.diagonal().setOnes();
    p.m.resize(p.N);
    p.f_hz.resize(p.N);
    for (int i = 0; i < p.N; ++i) {
      p.m(i) = 0.1 * (i + 1);
      p.f_hz(i) = 10e3 * (i + 1);
    }
    return p;
  }

  void validate() const {
    if (N < 2) throw ValidationError("OSNR needs at least 2 channels");
    auto check_positive = [&](const Eigen::VectorXd& v, const char* what) {
      if (v.size() != N) {
        throw ValidationError(std::string(what) + " must have length N");
      }
      if (v.minCoeff() <= 0.0) {
        throw ValidationError(std::string(what) + " must be positive");
      }
    };
    check_positive(a, "a");
    check_positive(b, "b");
    check_positive(c, "c");
    check_positive(n0, "n0");
    if (!(P0 > 0.0)) throw ValidationError("P0 must be positive");
    if (Gamma.rows() != N || Gamma.cols() != N || Gamma.minCoeff() < 0.0) {
      throw ValidationError("Gamma must be a nonnegative N x N matrix");
    }
    if (m.size() != N || f_hz.size() != N || f_hz.minCoeff() <= 0.0) {
      throw ValidationError("modulation/frequency vectors must have length N "
                            "with positive frequencies");
    }
    if (!(time_scale > 0.0)) throw ValidationError("time_scale must be > 0");
  }
};

namespace detail {

// Domain checks are per evaluation site: the shared barrier needs the whole
// profile, but the log term of channel i constrains only channel i's
// coordinates. Checking other channels' log arguments here would reject
// healthy estimate vectors that agent i never differentiates through.
inline void osnr_check_barrier(const OsnrParams& p, double total) {
  if (!(total < p.P0)) {
    throw DomainError("OSNR barrier violated: total power " +
                      std::to_string(total) + " >= P0 = " +
                      std::to_string(p.P0));
  }
}

inline void osnr_check_log(const OsnrParams& p, int i, double s, double den) {
  if (!(s > 0.0) || !(den > 0.0)) {
    throw DomainError("OSNR log argument violated on channel " +
                      std::to_string(i) + ": interference " +
                      std::to_string(s) + ", denominator " +
                      std::to_string(den));
  }
}

}  // namespace detail

inline GameSpec osnr_game(const OsnrParams& params = OsnrParams::defaults()) {
  params.validate();
  const OsnrParams p = params;
  GeneralGame g;
  g.partial_grad = [p](int i, const Eigen::VectorXd& x) {
    const double total = x.sum();
    detail::osnr_check_barrier(p, total);
    double s = p.n0(i);
    for (int j = 0; j < p.N; ++j) {
      if (j != i) s += p.Gamma(i, j) * x(j);
    }
    const double den = s + p.c(i) * x(i);
    detail::osnr_check_log(p, i, s, den);
    Eigen::VectorXd out(1);
    const double barrier = p.P0 - total;
    out(0) = p.a(i) + 1.0 / (barrier * barrier) - p.b(i) * p.c(i) / den;
    return out;
  };
  g.cost = [p](int i, const Eigen::VectorXd& x) {
    const double total = x.sum();
    detail::osnr_check_barrier(p, total);
    double s = p.n0(i);
    for (int j = 0; j < p.N; ++j) {
      if (j != i) s += p.Gamma(i, j) * x(j);
    }
    const double den = s + p.c(i) * x(i);
    detail::osnr_check_log(p, i, s, den);
    return p.a(i) * x(i) + 1.0 / (p.P0 - total) -
           p.b(i) * std::log(den / s);
  };
  // Certification/test box: strictly interior simplex slice.
  g.box_lo = Eigen::VectorXd::Zero(p.N);
  g.box_hi = Eigen::VectorXd::Constant(p.N, 0.9 * p.P0 / p.N);
  return GameSpec(std::vector<int>(p.N, 1), std::move(g));
}

inline Scenario osnr_scenario(const OsnrParams& params = OsnrParams::defaults()) {
  params.validate();
  GameSpec game = osnr_game(params);
  std::vector<Exosystem> exos;
  std::vector<std::vector<double>> poles;
  for (int i = 0; i < params.N; ++i) {
    const double f = params.f_hz(i) * params.time_scale;
    exos.push_back(biased_sinusoid(params.P0, params.P0 * params.m(i), f));
    // Observer poles scaled to the tone: a slow observer misestimates the
    // pilot for seconds and the transient rams the barrier.
    const double omega = 2.0 * M_PI * f;
    poles.push_back({-0.8 * omega, -1.0 * omega, -1.2 * omega});
  }
  return Scenario{"osnr", std::move(game), std::move(exos),
                  Eigen::VectorXd::Zero(params.N), std::move(poles)};
}

// ---------------------------------------------------------------------------
// Synthetic quadratic games with prescribed conditioning: the gradient map
// is F(x) = A x + r with A = Q' diag(1 ... conditioning) Q for a seeded
// random orthogonal Q, so mu = 1 and theta = conditioning exactly.
// ---------------------------------------------------------------------------

inline GameSpec synthetic_quadratic(std::vector<int> dims, double conditioning,
                                    std::uint64_t seed) {
  if (conditioning < 1.0) {
    throw ValidationError("conditioning must be >= 1");
  }
  const ActionLayout layout = ActionLayout::from_dims(dims);
  const int n = layout.n;
  Rng rng(seed);
  Eigen::MatrixXd G(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) G(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ();
  Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < n; ++k) {
    if (R(k, k) < 0.0) Q.col(k) = -Q.col(k);
  }
  Eigen::VectorXd spectrum(n);
  for (int k = 0; k < n; ++k) {
    spectrum(k) =
        n == 1 ? 1.0 : 1.0 + (conditioning - 1.0) * k / (n - 1.0);
  }
  Eigen::MatrixXd A = Q * spectrum.asDiagonal() * Q.transpose();
  // Symmetrize away rounding noise so the spectral constants are exact.
  A = 0.5 * (A + A.transpose());
  Eigen::VectorXd r = rng.normal_vector(n);
  return GameSpec(std::move(dims), QuadraticGame{A, r});
}

inline Scenario synthetic_scenario(std::vector<int> dims, double conditioning,
                                   std::uint64_t seed) {
  GameSpec game = synthetic_quadratic(std::move(dims), conditioning, seed);
  std::vector<Exosystem> exos;
  for (int i = 0; i < game.players(); ++i) {
    exos.push_back(zero_disturbance(game.layout().dim(i)));
  }
  const int n = game.n();
  return Scenario{"synthetic", std::move(game), std::move(exos),
                  Eigen::VectorXd::Zero(n), {}};
}

}  // namespace neflow
