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

#include <functional>
#include <limits>
#include <vector>

#include "neflow/common.hpp"

namespace neflow {

enum class Method { RK4, RK45 };

struct SimConfig {
  double t_end = 10.0;
  double dt = 1e-3;  // fixed step (RK4) / initial and maximum step (RK45)
  Method method = Method::RK4;
  double rtol = 1e-8;   // RK45 only
  double atol = 1e-10;  // RK45 only
  int record_every = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(t_end > 0.0)) throw ValidationError("t_end must be > 0");
    if (!(dt > 0.0)) throw ValidationError("dt must be > 0");
    if (!(rtol > 0.0) || !(atol > 0.0)) {
      throw ValidationError("rtol and atol must be > 0");
    }
    if (record_every < 1) throw ValidationError("record_every must be >= 1");
  }
};

// Time grid, state snapshots, and (once an experiment fills them) the
// derived per-sample metrics.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<double> ne_error;        // |x(t) - x*|
  std::vector<double> consensus_error; // |copies - mean copy|
  std::vector<double> velocity_norm;   // |v(t)|
  std::vector<double> observer_norm;   // |rho(t)|

  int samples() const { return static_cast<int>(times.size()); }
};

using RhsFn =
    std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;

namespace detail {

inline void check_finite(double t, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& last_good) {
  if (!y.allFinite()) {
    throw SimAbort("non-finite state at t = " + std::to_string(t), t,
                   last_good);
  }
}

}  // namespace detail

// Classical fixed-step fourth-order Runge-Kutta. The reference integrator:
// deterministic, and every acceptance number in the test suite is pinned
// against it.
inline Trajectory integrate_rk4(const RhsFn& rhs, const Eigen::VectorXd& y0,
                                const SimConfig& cfg) {
  cfg.validate();
  const long steps = std::lround(cfg.t_end / cfg.dt);
  if (steps < 1) throw ValidationError("t_end shorter than one step");
  const double h = cfg.t_end / static_cast<double>(steps);

  Trajectory traj;
  traj.times.reserve(static_cast<size_t>(steps / cfg.record_every + 2));
  Eigen::VectorXd y = y0;
  Eigen::VectorXd k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()),
      tmp(y.size());
  double t = 0.0;
  traj.times.push_back(t);
  traj.states.push_back(y);
  for (long s = 1; s <= steps; ++s) {
    rhs(t, y, k1);
    tmp = y + 0.5 * h * k1;
    rhs(t + 0.5 * h, tmp, k2);
    tmp = y + 0.5 * h * k2;
    rhs(t + 0.5 * h, tmp, k3);
    tmp = y + h * k3;
    rhs(t + h, tmp, k4);
    Eigen::VectorXd y_next =
        y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double t_next = static_cast<double>(s) * h;
    detail::check_finite(t_next, y_next, y);
    y = std::move(y_next);
    t = t_next;
    if (s % cfg.record_every == 0 || s == steps) {
      traj.times.push_back(t);
      traj.states.push_back(y);
    }
  }
  return traj;
}

// Dormand-Prince 5(4) embedded pair with standard step-size control. Offered
// as a cross-check and for stiff-ish exploratory runs; acceptance numbers
// stay on RK4.
inline Trajectory integrate_rk45(const RhsFn& rhs, const Eigen::VectorXd& y0,
                                 const SimConfig& cfg) {
  cfg.validate();
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                      a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                      a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                      a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = 35.0 / 384 - 5179.0 / 57600,
                      e3 = 500.0 / 1113 - 7571.0 / 16695,
                      e4 = 125.0 / 192 - 393.0 / 640,
                      e5 = -2187.0 / 6784 + 92097.0 / 339200,
                      e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  Trajectory traj;
  Eigen::VectorXd y = y0;
  double t = 0.0, h = std::min(cfg.dt, cfg.t_end);
  traj.times.push_back(t);
  traj.states.push_back(y);
  Eigen::VectorXd k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()),
      k5(y.size()), k6(y.size()), k7(y.size()), tmp(y.size());
  long accepted = 0;
  const double h_min = 1e-14 * cfg.t_end;
  while (t < cfg.t_end) {
    h = std::min(h, cfg.t_end - t);
    rhs(t, y, k1);
    tmp = y + h * (a21 * k1);
    rhs(t + c2 * h, tmp, k2);
    tmp = y + h * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h, tmp, k3);
    tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, tmp, k4);
    tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, tmp, k5);
    tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, tmp, k6);
    Eigen::VectorXd y_new =
        y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(t + h, y_new, k7);
    Eigen::VectorXd err_vec =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double err = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale =
          cfg.atol + cfg.rtol * std::max(std::abs(y(i)), std::abs(y_new(i)));
      err = std::max(err, std::abs(err_vec(i)) / scale);
    }
    if (err <= 1.0) {
      detail::check_finite(t + h, y_new, y);
      t += h;
      y = std::move(y_new);
      ++accepted;
      if (accepted % cfg.record_every == 0 || t >= cfg.t_end) {
        traj.times.push_back(t);
        traj.states.push_back(y);
      }
    }
    const double factor =
        err > 0.0 ? 0.9 * std::pow(1.0 / err, 0.2) : 5.0;
    h *= std::clamp(factor, 0.2, 5.0);
    h = std::min(h, cfg.dt);  // cfg.dt doubles as the step ceiling
    if (h < h_min) {
      throw SimAbort("step size underflow at t = " + std::to_string(t), t, y);
    }
  }
  return traj;
}

inline Trajectory integrate(const RhsFn& rhs, const Eigen::VectorXd& y0,
                            const SimConfig& cfg) {
  return cfg.method == Method::RK4 ? integrate_rk4(rhs, y0, cfg)
                                   : integrate_rk45(rhs, y0, cfg);
}

// First time the series drops below `tol` and stays there for the rest of
// the horizon; NaN if it never settles. Scanning for the last excursion
// protects against transients that dip under the threshold and bounce out
// (sinusoidal tails do exactly that).
inline double time_to_tol(const std::vector<double>& times,
                          const std::vector<double>& series, double tol) {
  if (times.size() != series.size() || times.empty()) {
    throw ValidationError("time_to_tol needs equal-length non-empty series");
  }
  std::ptrdiff_t last_above = -1;
  for (std::ptrdiff_t k = static_cast<std::ptrdiff_t>(series.size()) - 1;
       k >= 0; --k) {
    if (series[static_cast<size_t>(k)] >= tol) {
      last_above = k;
      break;
    }
  }
  if (last_above == static_cast<std::ptrdiff_t>(series.size()) - 1) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return times[static_cast<size_t>(last_above + 1)];
}

}  // namespace neflow
