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

#include <optional>
#include <vector>

#include "neflow/exosystem.hpp"
#include "neflow/game.hpp"
#include "neflow/graph.hpp"

namespace neflow {

// The closed-loop law an agent runs. Partial-information variants exchange
// profile estimates over the communication graph; internal-model (IM)
// variants carry a reduced-order disturbance observer.
enum class LawVariant {
  GradientPlayFull,      // dx_i = -grad_i J_i(x)
  GradientPlayPartial,   // gradient play on own estimate + consensus
  SingleIntFullIM,       // single integrator, full info, disturbance observer
  SingleIntPartialIM,    // single integrator, estimates + observer
  DoubleIntFullIM,       // double integrator, predicted-point gradient
  DoubleIntPartialIM,    // double integrator, estimates + observer
  MultiIntPartialIM,     // chain of r integrators, estimates + observer
};

inline bool is_partial(LawVariant v) {
  return v == LawVariant::GradientPlayPartial ||
         v == LawVariant::SingleIntPartialIM ||
         v == LawVariant::DoubleIntPartialIM ||
         v == LawVariant::MultiIntPartialIM;
}

inline bool is_im(LawVariant v) {
  return v == LawVariant::SingleIntFullIM ||
         v == LawVariant::SingleIntPartialIM ||
         v == LawVariant::DoubleIntFullIM ||
         v == LawVariant::DoubleIntPartialIM ||
         v == LawVariant::MultiIntPartialIM;
}

inline int integrator_order(LawVariant v, int r) {
  switch (v) {
    case LawVariant::GradientPlayFull:
    case LawVariant::GradientPlayPartial:
    case LawVariant::SingleIntFullIM:
    case LawVariant::SingleIntPartialIM:
      return 1;
    case LawVariant::DoubleIntFullIM:
    case LawVariant::DoubleIntPartialIM:
      return 2;
    case LawVariant::MultiIntPartialIM:
      return r;
  }
  return 1;
}

// Per-agent law description.
//
// For the multi-integrator law, `c` stores the interior coefficients of the
// monic Hurwitz polynomial p(s) = s^{r-1} + c_{r-2} s^{r-2} + ... + c_1 s + 1
// that shapes the velocity chain: the broadcast output is
// gamma_i = x_i + c_1 v^1 + ... + c_{r-2} v^{r-2} + v^{r-1} and the damping
// feedback uses the reversed weighting v^1 + c_1 v^2 + ... + c_{r-2} v^{r-1}.
// For r = 2 the polynomial is s + 1 and c is empty; the default for larger r
// is the binomial expansion of (s + 1)^{r-1}.
struct AgentLaw {
  LawVariant variant = LawVariant::GradientPlayFull;
  int r = 1;                     // integrator order (multi-int: >= 2)
  double b = 1.0;                // prediction horizon (double-int only)
  Eigen::VectorXd c;             // interior coefficients (multi-int only)
  std::optional<Exosystem> exo;  // IM variants: generator with gain set

  int q() const { return exo ? exo->q() : 0; }
};

inline Eigen::VectorXd default_interior_coefficients(int r) {
  if (r < 2) throw ValidationError("interior coefficients need r >= 2");
  // Binomial coefficients of (s+1)^{r-1} without the endpoint 1s:
  // c_k = binom(r-1, k) for k = 1 .. r-2, stored as (c_1, ..., c_{r-2}).
  Eigen::VectorXd c(r - 2);
  double binom = 1.0;
  for (int k = 1; k <= r - 2; ++k) {
    binom = binom * (r - k) / k;  // binom(r-1, k)
    c(k - 1) = binom;
  }
  return c;
}

inline void validate_law(const AgentLaw& law, int n_i) {
  const int expected_r = integrator_order(law.variant, law.r);
  if (law.r != expected_r) {
    throw ValidationError("law order r = " + std::to_string(law.r) +
                          " inconsistent with variant (expected " +
                          std::to_string(expected_r) + ")");
  }
  if (law.variant == LawVariant::DoubleIntFullIM ||
      law.variant == LawVariant::DoubleIntPartialIM) {
    if (!(law.b > 0.0)) {
      throw ValidationError("prediction horizon b must be > 0");
    }
  }
  if (law.variant == LawVariant::MultiIntPartialIM) {
    if (law.r < 2) throw ValidationError("multi-integrator law needs r >= 2");
    if (law.c.size() != law.r - 2) {
      throw ValidationError("interior coefficient vector must have length " +
                            std::to_string(law.r - 2) + ", got " +
                            std::to_string(law.c.size()));
    }
    // Hurwitz check of p(s) = s^{r-1} + c_{r-2} s^{r-2} + ... + c_1 s + 1
    // via the companion matrix.
    const int m = law.r - 1;
    if (m >= 2) {
      Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(m, m);
      comp.block(1, 0, m - 1, m - 1).setIdentity();
      comp(0, m - 1) = -1.0;  // constant coefficient 1
      for (int k = 1; k <= m - 1; ++k) {
        comp(0, m - 1 - k) = -law.c(k - 1);
      }
      Eigen::EigenSolver<Eigen::MatrixXd> es(comp);
      const double max_re = es.eigenvalues().real().maxCoeff();
      if (!(max_re < 0.0)) {
        throw ValidationError(
            "interior coefficients are not Hurwitz: max root real part " +
            std::to_string(max_re));
      }
    }
  } else if (law.c.size() != 0) {
    throw ValidationError("interior coefficients only apply to the "
                          "multi-integrator law");
  }
  if (is_im(law.variant)) {
    if (!law.exo) {
      throw ValidationError("internal-model law needs an exosystem");
    }
    if (law.exo->ny() != n_i) {
      throw ValidationError("exosystem output dimension " +
                            std::to_string(law.exo->ny()) +
                            " != action dimension " + std::to_string(n_i));
    }
    if (law.exo->q() > 0 && !law.exo->has_gain()) {
      throw ValidationError("internal-model law needs the observer gain set");
    }
  } else if (law.exo) {
    throw ValidationError("non-internal-model law must not carry an "
                          "exosystem; disturbances enter via the experiment");
  }
}

inline std::vector<AgentLaw> uniform_laws(int N, AgentLaw prototype) {
  std::vector<AgentLaw> laws(static_cast<size_t>(N), prototype);
  return laws;
}

// Flat layout of the stacked closed-loop state. Per agent, in order: action
// x_i, velocity chain v_i = col(v^1, ..., v^{r-1}), estimate-of-others block,
// observer state xi_i. The exosystem states w_i of all agents are appended
// at the tail so that a single autonomous ODE carries the whole cascade.
struct StateLayout {
  struct Agent {
    int n = 0, r = 1, q = 0;
    bool partial = false, im = false;
    int x_off = -1, v_off = -1, est_off = -1, xi_off = -1, w_off = -1;
    int v_len = 0, est_len = 0, w_len = 0;
  };

  ActionLayout actions;
  std::vector<Agent> agents;
  int agent_size = 0;  // length without exosystem tail
  int size = 0;        // full length

  static StateLayout build(const ActionLayout& actions,
                           const std::vector<AgentLaw>& laws) {
    if (static_cast<int>(laws.size()) != actions.players()) {
      throw ValidationError("need one law per player");
    }
    StateLayout out;
    out.actions = actions;
    const int N = actions.players();
    int off = 0;
    for (int i = 0; i < N; ++i) {
      const AgentLaw& law = laws[static_cast<size_t>(i)];
      validate_law(law, actions.dim(i));
      Agent a;
      a.n = actions.dim(i);
      a.r = law.r;
      a.q = law.q();
      a.partial = is_partial(law.variant);
      a.im = is_im(law.variant);
      a.x_off = off;
      off += a.n;
      a.v_len = a.n * (a.r - 1);
      if (a.v_len > 0) {
        a.v_off = off;
        off += a.v_len;
      }
      if (a.partial) {
        a.est_len = actions.n - a.n;
        a.est_off = off;
        off += a.est_len;
      }
      if (a.im && a.q > 0) {
        a.xi_off = off;
        off += a.q;
      }
      out.agents.push_back(a);
    }
    out.agent_size = off;
    out.size = off;
    return out;
  }

  // Appends exosystem states (one block per agent, possibly empty). Used
  // both for observed generators (IM laws) and for free-running disturbances
  // acting on baselines.
  void append_exo_states(const std::vector<int>& qs) {
    if (static_cast<int>(qs.size()) != actions.players()) {
      throw ValidationError("need one exosystem dimension per player");
    }
    int off = agent_size;
    for (int i = 0; i < actions.players(); ++i) {
      auto& a = agents[static_cast<size_t>(i)];
      a.w_len = qs[static_cast<size_t>(i)];
      a.w_off = a.w_len > 0 ? off : -1;
      off += a.w_len;
    }
    size = off;
  }

  int players() const { return actions.players(); }

  template <typename Vec>
  auto x(Vec&& y, int i) const {
    const auto& a = agents[static_cast<size_t>(i)];
    return y.segment(a.x_off, a.n);
  }
  template <typename Vec>
  auto v(Vec&& y, int i) const {
    const auto& a = agents[static_cast<size_t>(i)];
    return y.segment(a.v_off, a.v_len);
  }
  // k-th velocity stage, 1-based: v^k for k in 1 .. r-1.
  template <typename Vec>
  auto vk(Vec&& y, int i, int k) const {
    const auto& a = agents[static_cast<size_t>(i)];
    return y.segment(a.v_off + (k - 1) * a.n, a.n);
  }
  template <typename Vec>
  auto est(Vec&& y, int i) const {
    const auto& a = agents[static_cast<size_t>(i)];
    return y.segment(a.est_off, a.est_len);
  }
  template <typename Vec>
  auto xi(Vec&& y, int i) const {
    const auto& a = agents[static_cast<size_t>(i)];
    return y.segment(a.xi_off, a.q);
  }
  template <typename Vec>
  auto w(Vec&& y, int i) const {
    const auto& a = agents[static_cast<size_t>(i)];
    return y.segment(a.w_off >= 0 ? a.w_off : 0, a.w_len);
  }

  Eigen::VectorXd gather_actions(const Eigen::VectorXd& y) const {
    Eigen::VectorXd out(actions.n);
    for (int i = 0; i < players(); ++i) {
      out.segment(actions.offset(i), actions.dim(i)) = x(y, i);
    }
    return out;
  }
};

namespace detail {

// The profile copy agent i broadcasts. For single-integrator laws this is
// its estimate block with its own action in slot i; double/multi-integrator
// laws broadcast the predicted output gamma_i in their own slot instead.
inline Eigen::VectorXd own_profile_copy(const StateLayout& layout,
                                        const std::vector<AgentLaw>& laws,
                                        const Eigen::VectorXd& y, int i) {
  const auto& a = layout.agents[static_cast<size_t>(i)];
  const AgentLaw& law = laws[static_cast<size_t>(i)];
  Eigen::VectorXd own = layout.x(y, i);
  if (law.variant == LawVariant::DoubleIntPartialIM) {
    own += law.b * layout.vk(y, i, 1);
  } else if (law.variant == LawVariant::MultiIntPartialIM) {
    for (int k = 1; k <= a.r - 2; ++k) {
      own += law.c(k - 1) * layout.vk(y, i, k);
    }
    own += layout.vk(y, i, a.r - 1);
  }
  return embed(layout.actions, i, own, layout.est(y, i));
}

// Neighbor disagreement sums sum_{j in N_i} (E_i - E_j) for all agents,
// computed from adjacency lists so the evaluation mirrors the distributed
// structure (each agent only ever touches its neighbors' copies).
inline std::vector<Eigen::VectorXd> laplacian_terms(
    const StateLayout& layout, const GraphSpec& graph,
    const std::vector<Eigen::VectorXd>& copies) {
  const int N = layout.players();
  std::vector<Eigen::VectorXd> lap(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    const auto& nbrs = graph.neighbors[static_cast<size_t>(i)];
    Eigen::VectorXd sum =
        static_cast<double>(nbrs.size()) * copies[static_cast<size_t>(i)];
    for (int j : nbrs) sum -= copies[static_cast<size_t>(j)];
    lap[static_cast<size_t>(i)] = std::move(sum);
  }
  return lap;
}

inline void check_state_size(const StateLayout& layout,
                             const Eigen::VectorXd& y) {
  if (y.size() != layout.size) {
    throw ValidationError("state length " + std::to_string(y.size()) +
                          " != layout size " + std::to_string(layout.size));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Right-hand sides. Each writes the agent-state derivative rows of dy and
// leaves the exosystem tail untouched; evolving w (dw = S w) is the
// simulator's job, so these maps stay in cascade form with the generators.
// ---------------------------------------------------------------------------

// Full-information gradient play dx = -F(x) + d on a plain action vector.
inline void rhs_gradient_play_full(const GameSpec& game,
                                   const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& d,
                                   Eigen::Ref<Eigen::VectorXd> dx) {
  if (d.size() != x.size()) {
    throw ValidationError("disturbance length != profile length");
  }
  dx = -pseudo_gradient(game, x) + d;
}

// Partial-information gradient play: gradient descent on the own estimate
// plus Laplacian consensus on the estimate copies. The baseline law has no
// disturbance channel; pass `d` to expose the same controller to a physical
// disturbance on the action integrators.
inline void rhs_gradient_play_partial(const GameSpec& game,
                                      const GraphSpec& graph,
                                      const StateLayout& layout,
                                      const Eigen::VectorXd& y,
                                      Eigen::Ref<Eigen::VectorXd> dy,
                                      const Eigen::VectorXd* d = nullptr) {
  detail::check_state_size(layout, y);
  const int N = layout.players();
  std::vector<Eigen::VectorXd> copies(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    copies[static_cast<size_t>(i)] =
        embed(layout.actions, i, layout.x(y, i), layout.est(y, i));
  }
  const auto lap = detail::laplacian_terms(layout, graph, copies);
  for (int i = 0; i < N; ++i) {
    const int off = layout.actions.offset(i), ni = layout.actions.dim(i);
    Eigen::VectorXd grad =
        partial_gradient(game, i, copies[static_cast<size_t>(i)]);
    layout.x(dy, i) = -grad - lap[static_cast<size_t>(i)].segment(off, ni);
    if (d != nullptr) layout.x(dy, i) += d->segment(off, ni);
    layout.est(dy, i) =
        -select_others(layout.actions, i, lap[static_cast<size_t>(i)]);
  }
}

// Single integrator, full information, with disturbance observer:
//   dx_i  = -grad_i J_i(x) - D_i (K_i x_i + xi_i) + d_i
//   dxi_i = S_i (K_i x_i + xi_i) + K_i grad_i J_i(x)
inline void rhs_single_int_full_im(const GameSpec& game,
                                   const std::vector<AgentLaw>& laws,
                                   const StateLayout& layout,
                                   const Eigen::VectorXd& y,
                                   Eigen::Ref<Eigen::VectorXd> dy) {
  detail::check_state_size(layout, y);
  const Eigen::VectorXd x = layout.gather_actions(y);
  for (int i = 0; i < layout.players(); ++i) {
    const Exosystem& exo = *laws[static_cast<size_t>(i)].exo;
    Eigen::VectorXd grad = partial_gradient(game, i, x);
    if (exo.q() == 0) {
      layout.x(dy, i) = -grad;
      continue;
    }
    Eigen::VectorXd eta = exo.K() * layout.x(y, i) + layout.xi(y, i);
    Eigen::VectorXd d_i = exo.D() * layout.w(y, i);
    layout.x(dy, i) = -grad - exo.D() * eta + d_i;
    layout.xi(dy, i) = exo.S() * eta + exo.K() * grad;
  }
}

// Single integrator, partial information, with disturbance observer:
//   dx_i   = -grad_i J_i(x_i, est_i) - R_i Lap_i - D_i (K_i x_i + xi_i) + d_i
//   dest_i = -S_i Lap_i
//   dxi_i  = S_i (K_i x_i + xi_i) + K_i [grad_i J_i(x_i, est_i) + R_i Lap_i]
// where Lap_i = sum_{j in N_i} (copy_i - copy_j) and R_i/S_i pick the own
// and others rows of the stacked copy.
inline void rhs_single_int_partial_im(const GameSpec& game,
                                      const GraphSpec& graph,
                                      const std::vector<AgentLaw>& laws,
                                      const StateLayout& layout,
                                      const Eigen::VectorXd& y,
                                      Eigen::Ref<Eigen::VectorXd> dy) {
  detail::check_state_size(layout, y);
  const int N = layout.players();
  std::vector<Eigen::VectorXd> copies(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    copies[static_cast<size_t>(i)] =
        detail::own_profile_copy(layout, laws, y, i);
  }
  const auto lap = detail::laplacian_terms(layout, graph, copies);
  for (int i = 0; i < N; ++i) {
    const int off = layout.actions.offset(i), ni = layout.actions.dim(i);
    const Exosystem& exo = *laws[static_cast<size_t>(i)].exo;
    Eigen::VectorXd grad =
        partial_gradient(game, i, copies[static_cast<size_t>(i)]);
    Eigen::VectorXd lap_own = lap[static_cast<size_t>(i)].segment(off, ni);
    layout.est(dy, i) =
        -select_others(layout.actions, i, lap[static_cast<size_t>(i)]);
    if (exo.q() == 0) {
      layout.x(dy, i) = -grad - lap_own;
      continue;
    }
    Eigen::VectorXd eta = exo.K() * layout.x(y, i) + layout.xi(y, i);
    Eigen::VectorXd d_i = exo.D() * layout.w(y, i);
    layout.x(dy, i) = -grad - lap_own - exo.D() * eta + d_i;
    layout.xi(dy, i) = exo.S() * eta + exo.K() * (grad + lap_own);
  }
}

// Double integrator, full information. Gradients are evaluated at the
// predicted points x_j + b_j v_j; the velocity is damped by 1/b_i and the
// observer runs on v_i:
//   dx_i  = v_i
//   dv_i  = -grad_i J_i(x + B v) - v_i / b_i - D_i (K_i v_i + xi_i) + d_i
//   dxi_i = S_i (K_i v_i + xi_i) + K_i [grad_i J_i(x + B v) + v_i / b_i]
inline void rhs_double_int_full_im(const GameSpec& game,
                                   const std::vector<AgentLaw>& laws,
                                   const StateLayout& layout,
                                   const Eigen::VectorXd& y,
                                   Eigen::Ref<Eigen::VectorXd> dy) {
  detail::check_state_size(layout, y);
  const int N = layout.players();
  Eigen::VectorXd predicted(layout.actions.n);
  for (int i = 0; i < N; ++i) {
    predicted.segment(layout.actions.offset(i), layout.actions.dim(i)) =
        layout.x(y, i) + laws[static_cast<size_t>(i)].b * layout.vk(y, i, 1);
  }
  for (int i = 0; i < N; ++i) {
    const AgentLaw& law = laws[static_cast<size_t>(i)];
    const Exosystem& exo = *law.exo;
    Eigen::VectorXd vi = layout.vk(y, i, 1);
    Eigen::VectorXd grad = partial_gradient(game, i, predicted);
    layout.x(dy, i) = vi;
    if (exo.q() == 0) {
      layout.v(dy, i) = -grad - vi / law.b;
      continue;
    }
    Eigen::VectorXd eta = exo.K() * vi + layout.xi(y, i);
    Eigen::VectorXd d_i = exo.D() * layout.w(y, i);
    layout.v(dy, i) = -grad - vi / law.b - exo.D() * eta + d_i;
    layout.xi(dy, i) = exo.S() * eta + exo.K() * (grad + vi / law.b);
  }
}

// Double integrator, partial information. Each agent's broadcast copy
// carries its predicted point x_i + b_i v_i in its own slot; the estimate
// block runs pure consensus on those copies:
//   dx_i   = v_i
//   dv_i   = -grad_i J_i(x_i + b_i v_i, est_i) - v_i / b_i - R_i Lap_i
//            - D_i (K_i v_i + xi_i) + d_i
//   dest_i = -S_i Lap_i
//   dxi_i  = S_i (K_i v_i + xi_i) + K_i [grad + v_i / b_i + R_i Lap_i]
inline void rhs_double_int_partial_im(const GameSpec& game,
                                      const GraphSpec& graph,
                                      const std::vector<AgentLaw>& laws,
                                      const StateLayout& layout,
                                      const Eigen::VectorXd& y,
                                      Eigen::Ref<Eigen::VectorXd> dy) {
  detail::check_state_size(layout, y);
  const int N = layout.players();
  std::vector<Eigen::VectorXd> copies(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    copies[static_cast<size_t>(i)] =
        detail::own_profile_copy(layout, laws, y, i);
  }
  const auto lap = detail::laplacian_terms(layout, graph, copies);
  for (int i = 0; i < N; ++i) {
    const int off = layout.actions.offset(i), ni = layout.actions.dim(i);
    const AgentLaw& law = laws[static_cast<size_t>(i)];
    const Exosystem& exo = *law.exo;
    Eigen::VectorXd vi = layout.vk(y, i, 1);
    Eigen::VectorXd grad =
        partial_gradient(game, i, copies[static_cast<size_t>(i)]);
    Eigen::VectorXd lap_own = lap[static_cast<size_t>(i)].segment(off, ni);
    layout.x(dy, i) = vi;
    layout.est(dy, i) =
        -select_others(layout.actions, i, lap[static_cast<size_t>(i)]);
    if (exo.q() == 0) {
      layout.v(dy, i) = -grad - vi / law.b - lap_own;
      continue;
    }
    Eigen::VectorXd eta = exo.K() * vi + layout.xi(y, i);
    Eigen::VectorXd d_i = exo.D() * layout.w(y, i);
    layout.v(dy, i) = -grad - vi / law.b - lap_own - exo.D() * eta + d_i;
    layout.xi(dy, i) =
        exo.S() * eta + exo.K() * (grad + vi / law.b + lap_own);
  }
}

// Chain of r_i integrators, partial information. The chain output
// gamma_i = x_i + c_1 v^1 + ... + c_{r-2} v^{r-2} + v^{r-1} plays the role
// of the predicted point; the damping feedback weights the chain the other
// way around, v^1 + c_1 v^2 + ... + c_{r-2} v^{r-1}; the observer runs on
// the top stage v^{r-1}:
//   dx_i       = v^1
//   dv^k       = v^{k+1}                       (k = 1 .. r-2)
//   dv^{r-1}   = -[grad_i J_i(gamma_i, est_i) + damp_i + R_i Lap_i
//                  + D_i (K_i v^{r-1} + xi_i)] + d_i
//   dest_i     = -S_i Lap_i
//   dxi_i      = S_i (K_i v^{r-1} + xi_i) + K_i [grad + damp_i + R_i Lap_i]
// For r_i = 2 this is exactly the double-integrator law with b_i = 1.
inline void rhs_multi_int_partial_im(const GameSpec& game,
                                     const GraphSpec& graph,
                                     const std::vector<AgentLaw>& laws,
                                     const StateLayout& layout,
                                     const Eigen::VectorXd& y,
                                     Eigen::Ref<Eigen::VectorXd> dy) {
  detail::check_state_size(layout, y);
  const int N = layout.players();
  std::vector<Eigen::VectorXd> copies(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    copies[static_cast<size_t>(i)] =
        detail::own_profile_copy(layout, laws, y, i);
  }
  const auto lap = detail::laplacian_terms(layout, graph, copies);
  for (int i = 0; i < N; ++i) {
    const int off = layout.actions.offset(i), ni = layout.actions.dim(i);
    const AgentLaw& law = laws[static_cast<size_t>(i)];
    const Exosystem& exo = *law.exo;
    const int r = law.r;
    Eigen::VectorXd grad =
        partial_gradient(game, i, copies[static_cast<size_t>(i)]);
    Eigen::VectorXd lap_own = lap[static_cast<size_t>(i)].segment(off, ni);
    Eigen::VectorXd damp = layout.vk(y, i, 1);
    for (int k = 2; k <= r - 1; ++k) {
      damp += law.c(k - 2) * layout.vk(y, i, k);
    }
    layout.x(dy, i) = layout.vk(y, i, 1);
    for (int k = 1; k <= r - 2; ++k) {
      layout.vk(dy, i, k) = layout.vk(y, i, k + 1);
    }
    layout.est(dy, i) =
        -select_others(layout.actions, i, lap[static_cast<size_t>(i)]);
    if (exo.q() == 0) {
      layout.vk(dy, i, r - 1) = -(grad + damp + lap_own);
      continue;
    }
    Eigen::VectorXd eta = exo.K() * layout.vk(y, i, r - 1) + layout.xi(y, i);
    Eigen::VectorXd d_i = exo.D() * layout.w(y, i);
    layout.vk(dy, i, r - 1) = -(grad + damp + lap_own + exo.D() * eta) + d_i;
    layout.xi(dy, i) = exo.S() * eta + exo.K() * (grad + damp + lap_own);
  }
}

// Observer error rho_i = w_i - (K_i m_i + xi_i), where m_i is the signal the
// observer is driven by: the action for single-integrator laws, the (top)
// velocity stage for double/multi-integrator laws. Along any closed-loop
// trajectory drho_i = (S_i - K_i D_i) rho_i, independent of the game state.
inline std::vector<Eigen::VectorXd> observer_error(
    const std::vector<AgentLaw>& laws, const StateLayout& layout,
    const Eigen::VectorXd& y) {
  detail::check_state_size(layout, y);
  std::vector<Eigen::VectorXd> rho;
  rho.reserve(laws.size());
  for (int i = 0; i < layout.players(); ++i) {
    const AgentLaw& law = laws[static_cast<size_t>(i)];
    if (!is_im(law.variant)) {
      throw ValidationError(
          "observer error is only defined for internal-model laws");
    }
    const Exosystem& exo = *law.exo;
    if (exo.q() == 0) {
      rho.emplace_back(Eigen::VectorXd::Zero(0));
      continue;
    }
    Eigen::VectorXd measured;
    if (law.variant == LawVariant::SingleIntFullIM ||
        law.variant == LawVariant::SingleIntPartialIM) {
      measured = layout.x(y, i);
    } else {
      measured = layout.vk(y, i, law.r - 1);
    }
    rho.push_back(layout.w(y, i) - (exo.K() * measured + layout.xi(y, i)));
  }
  return rho;
}

}  // namespace neflow
