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
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "neflow/dynamics.hpp"
#include "neflow/graph.hpp"
#include "neflow/integrate.hpp"
#include "neflow/scenarios.hpp"

namespace neflow {

struct RunOptions {
  std::optional<Eigen::VectorXd> x0;  // overrides the scenario default
  bool broadcast_estimates = false;   // est_i(0) = others' x(0) instead of 0
  double tol = 1e-3;                  // convergence threshold on |x - x*|
  // Observer pole template override: one template broadcast to every agent,
  // or one per agent. Empty optional: scenario templates, then per-block
  // defaults.
  std::optional<std::vector<std::vector<double>>> pole_templates;
};

struct RunSummary {
  bool converged = false;
  double tol = 1e-3;
  double final_ne_error = std::numeric_limits<double>::quiet_NaN();
  double final_consensus_error = 0.0;
  double final_velocity_norm = 0.0;
  double final_observer_norm = 0.0;
  double final_grad_norm = std::numeric_limits<double>::quiet_NaN();
  double time_to_1e2 = std::numeric_limits<double>::quiet_NaN();
  double time_to_tol = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> lambda2;
  std::optional<ConditionReport> condition;
  std::vector<std::string> warnings;
};

struct RunResult {
  std::vector<AgentLaw> laws;
  StateLayout layout;
  Eigen::VectorXd x_star;
  Trajectory traj;
  RunSummary summary;
};

namespace detail {

inline std::vector<double> pick_template(
    const std::optional<std::vector<std::vector<double>>>& override_templates,
    const std::vector<std::vector<double>>& scenario_templates, int i, int N) {
  const std::vector<std::vector<double>>* src = nullptr;
  if (override_templates) {
    src = &*override_templates;
  } else if (!scenario_templates.empty()) {
    src = &scenario_templates;
  } else {
    return {};
  }
  if (static_cast<int>(src->size()) == 1) return (*src)[0];
  if (static_cast<int>(src->size()) == N) {
    return (*src)[static_cast<size_t>(i)];
  }
  throw ValidationError("pole templates must be given once or per agent");
}

}  // namespace detail

// Copies the prototype law to every agent and, for internal-model variants,
// attaches each agent's disturbance generator with an observer gain designed
// by pole placement.
inline std::vector<AgentLaw> design_laws(const Scenario& scenario,
                                         const AgentLaw& prototype,
                                         const RunOptions& options = {}) {
  const int N = scenario.game.players();
  if (static_cast<int>(scenario.exos.size()) != N) {
    throw ValidationError("scenario needs one exosystem per agent");
  }
  std::vector<AgentLaw> laws = uniform_laws(N, prototype);
  for (int i = 0; i < N; ++i) {
    AgentLaw& law = laws[static_cast<size_t>(i)];
    if (is_im(law.variant)) {
      Exosystem exo = scenario.exos[static_cast<size_t>(i)];
      if (exo.q() > 0) {
        const std::vector<double> tmpl = detail::pick_template(
            options.pole_templates, scenario.pole_templates, i, N);
        const std::vector<std::complex<double>> poles =
            tmpl.empty() ? default_observer_poles(exo)
                         : poles_from_template(exo, tmpl);
        exo.set_gain(design_observer_gain(exo, poles));
      }
      law.exo = std::move(exo);
    }
    validate_law(law, scenario.game.layout().dim(i));
  }
  return laws;
}

// The full closed loop as one autonomous ODE: agent states as laid out by
// StateLayout followed by every agent's exosystem state. Usable directly as
// the right-hand side passed to integrate().
class ClosedLoop {
 public:
  ClosedLoop(const Scenario& scenario, std::vector<AgentLaw> laws,
             std::optional<GraphSpec> graph)
      : game_(&scenario.game), graph_(std::move(graph)), laws_(std::move(laws)) {
    const int N = game_->players();
    if (static_cast<int>(laws_.size()) != N) {
      throw ValidationError("need one law per agent");
    }
    variant_ = laws_.front().variant;
    for (const AgentLaw& law : laws_) {
      if (law.variant != variant_) {
        throw ValidationError("all agents must run the same law variant");
      }
    }
    if (is_partial(variant_)) {
      if (!graph_) {
        throw ValidationError(
            "partial-information laws need a communication graph");
      }
      if (graph_->N != N) {
        throw ValidationError("graph has " + std::to_string(graph_->N) +
                              " nodes for " + std::to_string(N) + " agents");
      }
    }
    layout_ = StateLayout::build(game_->layout(), laws_);
    std::vector<int> qs;
    qs.reserve(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) {
      if (is_im(variant_)) {
        gens_.push_back(*laws_[static_cast<size_t>(i)].exo);
      } else {
        gens_.push_back(scenario.exos[static_cast<size_t>(i)]);
      }
      qs.push_back(gens_.back().q());
    }
    layout_.append_exo_states(qs);
  }

  const StateLayout& layout() const { return layout_; }
  const std::vector<AgentLaw>& laws() const { return laws_; }
  const std::vector<Exosystem>& generators() const { return gens_; }
  const std::optional<GraphSpec>& graph() const { return graph_; }
  LawVariant variant() const { return variant_; }

  Eigen::VectorXd initial_state(const Eigen::VectorXd& x0,
                                bool broadcast_estimates) const {
    if (x0.size() != game_->n()) {
      throw ValidationError("initial profile length " +
                            std::to_string(x0.size()) + " != " +
                            std::to_string(game_->n()));
    }
    Eigen::VectorXd y0 = Eigen::VectorXd::Zero(layout_.size);
    for (int i = 0; i < layout_.players(); ++i) {
      const auto& a = layout_.agents[static_cast<size_t>(i)];
      layout_.x(y0, i) = select_action(layout_.actions, i, x0);
      if (a.partial && broadcast_estimates) {
        layout_.est(y0, i) = select_others(layout_.actions, i, x0);
      }
      if (gens_[static_cast<size_t>(i)].q() > 0) {
        layout_.w(y0, i) = gens_[static_cast<size_t>(i)].w0();
      }
    }
    return y0;
  }

  void operator()(double /*t*/, const Eigen::VectorXd& y,
                  Eigen::VectorXd& dy) const {
    dy.setZero();
    switch (variant_) {
      case LawVariant::GradientPlayFull: {
        const Eigen::VectorXd x = layout_.gather_actions(y);
        const Eigen::VectorXd d = stacked_disturbance(y);
        Eigen::VectorXd dx(x.size());
        rhs_gradient_play_full(*game_, x, d, dx);
        for (int i = 0; i < layout_.players(); ++i) {
          layout_.x(dy, i) = select_action(layout_.actions, i, dx);
        }
        break;
      }
      case LawVariant::GradientPlayPartial: {
        if (has_disturbance()) {
          const Eigen::VectorXd d = stacked_disturbance(y);
          rhs_gradient_play_partial(*game_, *graph_, layout_, y, dy, &d);
        } else {
          rhs_gradient_play_partial(*game_, *graph_, layout_, y, dy);
        }
        break;
      }
      case LawVariant::SingleIntFullIM:
        rhs_single_int_full_im(*game_, laws_, layout_, y, dy);
        break;
      case LawVariant::SingleIntPartialIM:
        rhs_single_int_partial_im(*game_, *graph_, laws_, layout_, y, dy);
        break;
      case LawVariant::DoubleIntFullIM:
        rhs_double_int_full_im(*game_, laws_, layout_, y, dy);
        break;
      case LawVariant::DoubleIntPartialIM:
        rhs_double_int_partial_im(*game_, *graph_, laws_, layout_, y, dy);
        break;
      case LawVariant::MultiIntPartialIM:
        rhs_multi_int_partial_im(*game_, *graph_, laws_, layout_, y, dy);
        break;
    }
    for (int i = 0; i < layout_.players(); ++i) {
      const Exosystem& gen = gens_[static_cast<size_t>(i)];
      if (gen.q() > 0) {
        layout_.w(dy, i) = gen.S() * layout_.w(y, i);
      }
    }
  }

  bool has_disturbance() const {
    for (const Exosystem& gen : gens_) {
      if (gen.q() > 0) return true;
    }
    return false;
  }

  Eigen::VectorXd stacked_disturbance(const Eigen::VectorXd& y) const {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(layout_.actions.n);
    for (int i = 0; i < layout_.players(); ++i) {
      const Exosystem& gen = gens_[static_cast<size_t>(i)];
      if (gen.q() > 0) {
        d.segment(layout_.actions.offset(i), layout_.actions.dim(i)) =
            gen.D() * layout_.w(y, i);
      }
    }
    return d;
  }

 private:
  const GameSpec* game_;
  std::optional<GraphSpec> graph_;
  std::vector<AgentLaw> laws_;
  std::vector<Exosystem> gens_;
  StateLayout layout_;
  LawVariant variant_ = LawVariant::GradientPlayFull;
};

namespace detail {

inline void fill_metrics(const ClosedLoop& loop, const Eigen::VectorXd& x_star,
                         Trajectory& traj) {
  const StateLayout& layout = loop.layout();
  const std::vector<AgentLaw>& laws = loop.laws();
  const bool partial = is_partial(loop.variant());
  const bool im = is_im(loop.variant());
  const int N = layout.players();
  traj.ne_error.resize(traj.samples());
  traj.consensus_error.assign(traj.samples(), 0.0);
  traj.velocity_norm.assign(traj.samples(), 0.0);
  traj.observer_norm.assign(traj.samples(), 0.0);
  for (int s = 0; s < traj.samples(); ++s) {
    const Eigen::VectorXd& y = traj.states[static_cast<size_t>(s)];
    traj.ne_error[static_cast<size_t>(s)] =
        (layout.gather_actions(y) - x_star).norm();
    if (partial) {
      std::vector<Eigen::VectorXd> copies(static_cast<size_t>(N));
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(layout.actions.n);
      for (int i = 0; i < N; ++i) {
        copies[static_cast<size_t>(i)] =
            detail::own_profile_copy(layout, laws, y, i);
        mean += copies[static_cast<size_t>(i)];
      }
      mean /= static_cast<double>(N);
      double acc = 0.0;
      for (int i = 0; i < N; ++i) {
        acc += (copies[static_cast<size_t>(i)] - mean).squaredNorm();
      }
      traj.consensus_error[static_cast<size_t>(s)] = std::sqrt(acc);
    }
    double vel = 0.0;
    for (int i = 0; i < N; ++i) {
      if (layout.agents[static_cast<size_t>(i)].v_len > 0) {
        vel += layout.v(y, i).squaredNorm();
      }
    }
    traj.velocity_norm[static_cast<size_t>(s)] = std::sqrt(vel);
    if (im) {
      double obs = 0.0;
      for (const Eigen::VectorXd& rho : observer_error(laws, layout, y)) {
        obs += rho.squaredNorm();
      }
      traj.observer_norm[static_cast<size_t>(s)] = std::sqrt(obs);
    }
  }
}

}  // namespace detail

inline RunResult run_experiment(const Scenario& scenario,
                                const AgentLaw& prototype,
                                const std::optional<GraphSpec>& graph,
                                const SimConfig& sim,
                                const RunOptions& options = {}) {
  sim.validate();
  RunResult out;
  out.laws = design_laws(scenario, prototype, options);
  ClosedLoop loop(scenario, out.laws,
                  is_partial(prototype.variant) ? graph : std::nullopt);
  out.layout = loop.layout();
  out.laws = loop.laws();
  out.x_star = solve_ne(scenario.game);

  const Eigen::VectorXd x0 = options.x0 ? *options.x0 : scenario.x0;
  const Eigen::VectorXd y0 =
      loop.initial_state(x0, options.broadcast_estimates);
  out.traj = integrate(
      [&loop](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        loop(t, y, dy);
      },
      y0, sim);
  detail::fill_metrics(loop, out.x_star, out.traj);

  RunSummary& sum = out.summary;
  sum.tol = options.tol;
  sum.final_ne_error = out.traj.ne_error.back();
  sum.final_consensus_error = out.traj.consensus_error.back();
  sum.final_velocity_norm = out.traj.velocity_norm.back();
  sum.final_observer_norm = out.traj.observer_norm.back();
  sum.final_grad_norm =
      pseudo_gradient(scenario.game,
                      out.layout.gather_actions(out.traj.states.back()))
          .norm();
  sum.converged = sum.final_ne_error < options.tol;
  sum.time_to_1e2 = time_to_tol(out.traj.times, out.traj.ne_error, 1e-2);
  sum.time_to_tol = time_to_tol(out.traj.times, out.traj.ne_error, options.tol);
  if (graph) {
    sum.lambda2 = graph->lambda2;
    if (scenario.game.mu() && scenario.game.theta()) {
      sum.condition = check_condition(*scenario.game.mu(),
                                      *scenario.game.theta(), graph->lambda2);
      if (!sum.condition->holds) {
        sum.warnings.push_back(
            "sufficient convergence condition fails: margin " +
            std::to_string(sum.condition->margin) +
            " (the bound is conservative; the run may still converge)");
      }
    }
  }
  if (!sum.converged) {
    sum.warnings.push_back("final distance to equilibrium " +
                           std::to_string(sum.final_ne_error) +
                           " above tolerance " + std::to_string(options.tol));
  }
  return out;
}

}  // namespace neflow
