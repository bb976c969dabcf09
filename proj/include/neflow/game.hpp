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
#include <optional>
#include <utility>
#include <variant>

#include "neflow/common.hpp"
#include "neflow/selection.hpp"

namespace neflow {

// Quadratic cost model: the stacked partial-gradient map is the affine
// function F(x) = A x + r. Block row i of A is the Jacobian of player i's
// partial gradient with respect to the full profile.
struct QuadraticGame {
  Eigen::MatrixXd A;
  Eigen::VectorXd r;
};

// Callback cost model. `partial_grad(i, profile)` returns player i's partial
// gradient at a full profile and may throw DomainError outside the feasible
// region. `cost`, when provided, enables finite-difference cross-checks.
// `box_lo`/`box_hi` declare the sampling box on which constants are
// certified and randomized tests are drawn (per-coordinate bounds on a
// single profile).
struct GeneralGame {
  std::function<Eigen::VectorXd(int, const Eigen::VectorXd&)> partial_grad;
  std::function<double(int, const Eigen::VectorXd&)> cost;  // may be empty
  Eigen::VectorXd box_lo, box_hi;
};

// A static game: player count, per-player action dimensions, a cost model,
// and (optionally) the strong-monotonicity constant mu of the gradient map
// and the Lipschitz constant theta of its estimate-extended version.
//
// For quadratic games both constants are computed exactly on construction:
// mu as the smallest eigenvalue of the symmetric part of A and theta as the
// largest singular value of A (an upper bound that covers the extended map
// as well, since the extended Jacobian is built from row blocks of A).
class GameSpec {
 public:
  GameSpec(std::vector<int> dims, QuadraticGame quad,
           std::optional<double> mu = std::nullopt,
           std::optional<double> theta = std::nullopt)
      : layout_(ActionLayout::from_dims(std::move(dims))),
        model_(std::move(quad)) {
    const auto& q = std::get<QuadraticGame>(model_);
    if (q.A.rows() != layout_.n || q.A.cols() != layout_.n) {
      throw ValidationError("quadratic coefficient matrix must be n x n");
    }
    if (q.r.size() != layout_.n) {
      throw ValidationError("quadratic linear term must have length n");
    }
    Eigen::MatrixXd sym = 0.5 * (q.A + q.A.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    const double mu_exact = es.eigenvalues().minCoeff();
    const double theta_exact = q.A.jacobiSvd().singularValues().maxCoeff();
    if (mu && std::abs(*mu - mu_exact) > 1e-9 * std::max(1.0, theta_exact)) {
      throw ValidationError("declared mu " + std::to_string(*mu) +
                            " does not match the exact value " +
                            std::to_string(mu_exact));
    }
    if (theta &&
        std::abs(*theta - theta_exact) > 1e-9 * std::max(1.0, theta_exact)) {
      throw ValidationError("declared theta " + std::to_string(*theta) +
                            " does not match the exact value " +
                            std::to_string(theta_exact));
    }
    mu_ = mu_exact;
    theta_ = theta_exact;
    check_mu_positive();
  }

  GameSpec(std::vector<int> dims, GeneralGame general,
           std::optional<double> mu = std::nullopt,
           std::optional<double> theta = std::nullopt)
      : layout_(ActionLayout::from_dims(std::move(dims))),
        model_(std::move(general)),
        mu_(mu),
        theta_(theta) {
    const auto& g = std::get<GeneralGame>(model_);
    if (!g.partial_grad) {
      throw ValidationError("general game needs a partial-gradient callback");
    }
    if (g.box_lo.size() != g.box_hi.size()) {
      throw ValidationError("sampling box bounds must have equal lengths");
    }
    if (g.box_lo.size() != 0 && g.box_lo.size() != layout_.n) {
      throw ValidationError("sampling box must be empty or length n");
    }
    check_mu_positive();
  }

  int players() const { return layout_.players(); }
  int n() const { return layout_.n; }
  const ActionLayout& layout() const { return layout_; }
  bool quadratic() const {
    return std::holds_alternative<QuadraticGame>(model_);
  }
  const QuadraticGame& quad() const { return std::get<QuadraticGame>(model_); }
  const GeneralGame& general() const { return std::get<GeneralGame>(model_); }
  std::optional<double> mu() const { return mu_; }
  std::optional<double> theta() const { return theta_; }

  bool has_cost() const {
    return quadratic() ? diagonal_blocks_symmetric()
                       : static_cast<bool>(general().cost);
  }

  // Player i's cost at a full profile. For quadratic games the closed form
  // J_i = 1/2 x_i' A_ii x_i + x_i' (A_{i,-i} x_{-i} + r_i) reproduces the
  // block row of F as its own-action gradient (requires symmetric A_ii).
  double cost(int i, const Eigen::VectorXd& profile) const {
    layout_.check_player(i);
    if (quadratic()) {
      if (!diagonal_blocks_symmetric()) {
        throw ValidationError(
            "cost unavailable: asymmetric diagonal block in quadratic game");
      }
      const auto& q = quad();
      const int off = layout_.offset(i), ni = layout_.dim(i);
      Eigen::VectorXd xi = profile.segment(off, ni);
      Eigen::VectorXd coupled =
          q.A.middleRows(off, ni) * profile - q.A.block(off, off, ni, ni) * xi;
      return 0.5 * xi.dot(q.A.block(off, off, ni, ni) * xi) +
             xi.dot(coupled + q.r.segment(off, ni));
    }
    if (!general().cost) {
      throw ValidationError("general game has no cost callback");
    }
    return general().cost(i, profile);
  }

 private:
  void check_mu_positive() const {
    if (mu_ && *mu_ <= 0.0) {
      throw ValidationError(
          "strong monotonicity requires mu > 0, got " + std::to_string(*mu_));
    }
  }

  bool diagonal_blocks_symmetric() const {
    const auto& q = quad();
    for (int i = 0; i < players(); ++i) {
      const int off = layout_.offset(i), ni = layout_.dim(i);
      Eigen::MatrixXd blk = q.A.block(off, off, ni, ni);
      if ((blk - blk.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
    }
    return true;
  }

  ActionLayout layout_;
  std::variant<QuadraticGame, GeneralGame> model_;
  std::optional<double> mu_, theta_;
};

// Partial gradient of player i's cost with respect to its own action,
// evaluated at a full action profile.
inline Eigen::VectorXd partial_gradient(const GameSpec& game, int i,
                                        const Eigen::VectorXd& profile) {
  game.layout().check_player(i);
  if (profile.size() != game.n()) {
    throw ValidationError("profile length " + std::to_string(profile.size()) +
                          " != n = " + std::to_string(game.n()));
  }
  const int off = game.layout().offset(i), ni = game.layout().dim(i);
  if (game.quadratic()) {
    const auto& q = game.quad();
    return q.A.middleRows(off, ni) * profile + q.r.segment(off, ni);
  }
  Eigen::VectorXd g = game.general().partial_grad(i, profile);
  if (g.size() != ni) {
    throw ValidationError("partial-gradient callback returned length " +
                          std::to_string(g.size()) + " for player " +
                          std::to_string(i) + ", expected " +
                          std::to_string(ni));
  }
  return g;
}

// Stacked vector of all partial gradients, F(x).
inline Eigen::VectorXd pseudo_gradient(const GameSpec& game,
                                       const Eigen::VectorXd& profile) {
  if (profile.size() != game.n()) {
    throw ValidationError("profile length " + std::to_string(profile.size()) +
                          " != n = " + std::to_string(game.n()));
  }
  if (game.quadratic()) {
    return game.quad().A * profile + game.quad().r;
  }
  Eigen::VectorXd out(game.n());
  for (int i = 0; i < game.players(); ++i) {
    out.segment(game.layout().offset(i), game.layout().dim(i)) =
        partial_gradient(game, i, profile);
  }
  return out;
}

// Pseudo-gradient evaluated on per-agent estimates: block i of the result is
// player i's partial gradient at player i's copy of the full profile (the
// N*n-long `est` holds N stacked profile copies). On the consensus subspace
// (all copies equal) this reduces to the plain pseudo-gradient.
inline Eigen::VectorXd extended_pseudo_gradient(const GameSpec& game,
                                                const Eigen::VectorXd& est) {
  const int n = game.n();
  if (est.size() != static_cast<Eigen::Index>(game.players()) * n) {
    throw ValidationError("stacked estimate length " +
                          std::to_string(est.size()) + " != N*n = " +
                          std::to_string(game.players() * n));
  }
  Eigen::VectorXd out(n);
  for (int i = 0; i < game.players(); ++i) {
    out.segment(game.layout().offset(i), game.layout().dim(i)) =
        partial_gradient(game, i, est.segment(static_cast<Eigen::Index>(i) * n,
                                              n));
  }
  return out;
}

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 1'000'000;
  std::optional<Eigen::VectorXd> x0;  // default: zeros
};

// Solves F(x) = 0. Quadratic games use an exact linear solve; general games
// follow the forward-Euler gradient flow x <- x - h F(x), which contracts
// when the gradient map is strongly monotone. Step size is 1/theta when
// theta is known, 1e-2 otherwise.
inline Eigen::VectorXd solve_ne(const GameSpec& game,
                                const SolveOptions& opts = {}) {
  if (game.quadratic()) {
    const auto& q = game.quad();
    Eigen::VectorXd x = q.A.partialPivLu().solve(-q.r);
    const double res = (q.A * x + q.r).norm();
    if (!std::isfinite(res) || res > std::max(opts.tol, 1e-8)) {
      throw ConvergenceError(
          "linear solve residual " + std::to_string(res) +
              " too large; coefficient matrix may be singular",
          res);
    }
    return x;
  }
  Eigen::VectorXd x = opts.x0 ? *opts.x0 : Eigen::VectorXd::Zero(game.n());
  const double h = game.theta() ? 1.0 / *game.theta() : 1e-2;
  double res = std::numeric_limits<double>::quiet_NaN();
  for (int it = 0; it < opts.max_iter; ++it) {
    Eigen::VectorXd f = pseudo_gradient(game, x);
    res = f.norm();
    if (res < opts.tol) return x;
    x -= h * f;
  }
  throw ConvergenceError("gradient flow did not reach tolerance " +
                             std::to_string(opts.tol) + " in " +
                             std::to_string(opts.max_iter) +
                             " iterations; last residual " +
                             std::to_string(res),
                         res);
}

// Certified or sampled (mu, theta). For quadratic games the values are exact
// spectral quantities. For general games they are sampled on the declared
// box: the sampled mu is an upper bound on the true constant (a minimum over
// finitely many pairs) and the sampled theta a lower bound (a maximum), so a
// passing sufficient-condition check built from sampled values proves
// nothing -- callers must treat the flags accordingly.
struct ConstantsEstimate {
  double mu;
  double theta;
  bool exact;           // true: spectral values; false: sampled bounds
  bool mu_upper_bound;  // sampling direction caveats
  bool theta_lower_bound;
};

inline ConstantsEstimate certify_constants(const GameSpec& game,
                                           int sample_budget,
                                           std::uint64_t seed) {
  if (game.quadratic()) {
    const auto& q = game.quad();
    Eigen::MatrixXd sym = 0.5 * (q.A + q.A.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    return {es.eigenvalues().minCoeff(),
            q.A.jacobiSvd().singularValues().maxCoeff(), true, false, false};
  }
  if (sample_budget <= 0) {
    throw ValidationError("certify_constants needs a positive sample budget");
  }
  const auto& g = game.general();
  if (g.box_lo.size() != game.n()) {
    throw ValidationError(
        "general game must declare a sampling box to certify constants");
  }
  Rng rng(seed);
  const int n = game.n(), N = game.players();
  auto draw_profile = [&] {
    Eigen::VectorXd x(n);
    for (int k = 0; k < n; ++k) x(k) = rng.uniform(g.box_lo(k), g.box_hi(k));
    return x;
  };
  double mu_hat = std::numeric_limits<double>::infinity();
  double theta_hat = 0.0;
  for (int s = 0; s < sample_budget; ++s) {
    Eigen::VectorXd x = draw_profile(), xp = draw_profile();
    const double dist2 = (x - xp).squaredNorm();
    if (dist2 > 1e-16) {
      const double inner =
          (x - xp).dot(pseudo_gradient(game, x) - pseudo_gradient(game, xp));
      mu_hat = std::min(mu_hat, inner / dist2);
    }
    Eigen::VectorXd e(static_cast<Eigen::Index>(N) * n),
        ep(static_cast<Eigen::Index>(N) * n);
    for (int i = 0; i < N; ++i) {
      e.segment(static_cast<Eigen::Index>(i) * n, n) = draw_profile();
      ep.segment(static_cast<Eigen::Index>(i) * n, n) = draw_profile();
    }
    const double dist = (e - ep).norm();
    if (dist > 1e-8) {
      theta_hat = std::max(theta_hat, (extended_pseudo_gradient(game, e) -
                                       extended_pseudo_gradient(game, ep))
                                              .norm() /
                                          dist);
    }
  }
  return {mu_hat, theta_hat, false, true, true};
}

}  // namespace neflow
