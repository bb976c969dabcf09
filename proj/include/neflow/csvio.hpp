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

#include <cstdio>
#include <ostream>
#include <string>

#include "neflow/config.hpp"

namespace neflow {

namespace detail {

// Shortest round-trippable decimal: keeps reruns byte-identical across
// platforms with IEEE doubles.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// Long-format trajectory table. One row per recorded scalar:
//   t,agent,component,kind,value
// kind is one of action | velocity | estimate | observer for per-agent state
// rows (component is the index within that block) and metric for run-level
// series (agent -1, component names the metric).
inline void write_trajectory_csv(std::ostream& os, const StateLayout& layout,
                                 const Trajectory& traj) {
  os << "t,agent,component,kind,value\n";
  for (int s = 0; s < traj.samples(); ++s) {
    const std::string t = detail::fmt_double(traj.times[static_cast<size_t>(s)]);
    const Eigen::VectorXd& y = traj.states[static_cast<size_t>(s)];
    for (int i = 0; i < layout.players(); ++i) {
      const auto& a = layout.agents[static_cast<size_t>(i)];
      for (int k = 0; k < a.n; ++k) {
        os << t << ',' << i << ',' << k << ",action,"
           << detail::fmt_double(layout.x(y, i)(k)) << '\n';
      }
      for (int k = 0; k < a.v_len; ++k) {
        os << t << ',' << i << ',' << k << ",velocity,"
           << detail::fmt_double(layout.v(y, i)(k)) << '\n';
      }
      for (int k = 0; k < a.est_len; ++k) {
        os << t << ',' << i << ',' << k << ",estimate,"
           << detail::fmt_double(layout.est(y, i)(k)) << '\n';
      }
      if (a.im && a.q > 0) {
        for (int k = 0; k < a.q; ++k) {
          os << t << ',' << i << ',' << k << ",observer,"
             << detail::fmt_double(layout.xi(y, i)(k)) << '\n';
        }
      }
    }
    const auto metric = [&](const char* name, double value) {
      os << t << ",-1," << name << ",metric," << detail::fmt_double(value)
         << '\n';
    };
    metric("ne_error", traj.ne_error[static_cast<size_t>(s)]);
    metric("consensus_error", traj.consensus_error[static_cast<size_t>(s)]);
    metric("velocity_norm", traj.velocity_norm[static_cast<size_t>(s)]);
    metric("observer_norm", traj.observer_norm[static_cast<size_t>(s)]);
  }
}

inline Json summary_to_json(const Experiment& exp, const RunResult& result) {
  const RunSummary& sum = result.summary;
  Json j;
  j["scenario"] = exp.scenario_name;
  j["law"] = to_string(exp.law.variant);
  Json sim;
  sim["t_end"] = exp.sim.t_end;
  sim["dt"] = exp.sim.dt;
  sim["method"] = exp.sim.method == Method::RK4 ? "rk4" : "rk45";
  sim["record_every"] = exp.sim.record_every;
  j["sim"] = sim;
  j["converged"] = sum.converged;
  j["tol"] = sum.tol;
  j["final_ne_error"] = sum.final_ne_error;
  j["final_consensus_error"] = sum.final_consensus_error;
  j["final_velocity_norm"] = sum.final_velocity_norm;
  j["final_observer_norm"] = sum.final_observer_norm;
  j["final_grad_norm"] = sum.final_grad_norm;
  j["time_to_1e-2"] = sum.time_to_1e2;  // NaN serializes to null
  j["time_to_tol"] = sum.time_to_tol;
  if (sum.lambda2) j["lambda2"] = *sum.lambda2;
  if (sum.condition) {
    Json c;
    if (exp.scenario.game.mu()) c["mu"] = *exp.scenario.game.mu();
    if (exp.scenario.game.theta()) c["theta"] = *exp.scenario.game.theta();
    if (sum.lambda2) c["lambda2"] = *sum.lambda2;
    c["margin"] = sum.condition->margin;
    c["holds"] = sum.condition->holds;
    j["condition"] = c;
  }
  j["warnings"] = sum.warnings;
  Json xs = Json::array();
  for (Eigen::Index k = 0; k < result.x_star.size(); ++k) {
    xs.push_back(result.x_star(k));
  }
  j["x_star"] = xs;
  return j;
}

}  // namespace neflow
