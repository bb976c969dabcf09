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

#include <catch2/catch_amalgamated.hpp>

#include "neflow/game.hpp"

namespace neflow {
namespace {

GameSpec two_player_coupled() {
  // J_1 = (x_1 - x_2)^2 + x_1^2 / 2, J_2 = (x_2 - x_1)^2 + x_2^2 / 2, so
  // F(x) = (3 x_1 - 2 x_2, 3 x_2 - 2 x_1): strongly monotone, mu = 1,
  // theta = 5.
  Eigen::MatrixXd A(2, 2);
  A << 3, -2, -2, 3;
  return GameSpec({1, 1}, QuadraticGame{A, Eigen::VectorXd::Zero(2)});
}

TEST_CASE("action layout indexes heterogeneous blocks") {
  const ActionLayout layout = ActionLayout::from_dims({2, 3, 1});
  REQUIRE(layout.players() == 3);
  REQUIRE(layout.n == 6);
  REQUIRE(layout.offset(0) == 0);
  REQUIRE(layout.offset(1) == 2);
  REQUIRE(layout.offset(2) == 5);
  REQUIRE(layout.dim(1) == 3);

  REQUIRE_THROWS_AS(ActionLayout::from_dims({4}), ValidationError);
  REQUIRE_THROWS_AS(ActionLayout::from_dims({2, 0}), ValidationError);
  REQUIRE_THROWS_AS(layout.check_player(3), ValidationError);
  REQUIRE_THROWS_AS(layout.check_player(-1), ValidationError);
}

TEST_CASE("select and embed are inverse on every block") {
  const ActionLayout layout = ActionLayout::from_dims({2, 3, 1});
  Rng rng(11);
  const Eigen::VectorXd x = rng.normal_vector(layout.n);
  for (int i = 0; i < layout.players(); ++i) {
    const Eigen::VectorXd own = select_action(layout, i, x);
    const Eigen::VectorXd others = select_others(layout, i, x);
    REQUIRE(own.size() == layout.dim(i));
    REQUIRE(others.size() == layout.n - layout.dim(i));
    const Eigen::VectorXd back = embed(layout, i, own, others);
    REQUIRE((back - x).norm() == 0.0);  // pure index arithmetic, exact
  }
  REQUIRE_THROWS_AS(select_action(layout, 0, Eigen::VectorXd::Zero(5)),
                    ValidationError);
  REQUIRE_THROWS_AS(
      embed(layout, 0, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(4)),
      ValidationError);
}

TEST_CASE("quadratic game computes exact monotonicity constants") {
  const GameSpec game = two_player_coupled();
  REQUIRE(game.mu());
  REQUIRE(game.theta());
  REQUIRE(*game.mu() == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(*game.theta() == Catch::Approx(5.0).margin(1e-12));

  Eigen::MatrixXd A(2, 2);
  A << 3, -2, -2, 3;
  // Declared constants must match the computed ones.
  REQUIRE_THROWS_AS(
      GameSpec({1, 1}, QuadraticGame{A, Eigen::VectorXd::Zero(2)}, 2.0, 5.0),
      ValidationError);
  // Strong monotonicity is required.
  Eigen::MatrixXd bad = -Eigen::MatrixXd::Identity(2, 2);
  REQUIRE_THROWS_AS(
      GameSpec({1, 1}, QuadraticGame{bad, Eigen::VectorXd::Zero(2)}),
      ValidationError);
}

TEST_CASE("pseudo-gradient stacks partial gradients") {
  const GameSpec game = two_player_coupled();
  Eigen::VectorXd x(2);
  x << 1.0, -2.0;
  const Eigen::VectorXd F = pseudo_gradient(game, x);
  REQUIRE(F(0) == Catch::Approx(3.0 * 1.0 - 2.0 * -2.0));
  REQUIRE(F(1) == Catch::Approx(3.0 * -2.0 - 2.0 * 1.0));
  REQUIRE((partial_gradient(game, 0, x) - F.head(1)).norm() == 0.0);
  REQUIRE((partial_gradient(game, 1, x) - F.tail(1)).norm() == 0.0);
}

TEST_CASE("quadratic costs are consistent with their gradients") {
  const GameSpec game = two_player_coupled();
  REQUIRE(game.has_cost());
  Rng rng(3);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = rng.normal_vector(2);
    for (int i = 0; i < 2; ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      const double fd = (game.cost(i, xp) - game.cost(i, xm)) / (2 * h);
      REQUIRE(partial_gradient(game, i, x)(0) ==
              Catch::Approx(fd).margin(1e-6));
    }
  }
}

TEST_CASE("extended pseudo-gradient evaluates each block on its own copy") {
  const GameSpec game = two_player_coupled();
  Eigen::VectorXd x(2);
  x << 0.3, -0.7;
  // Identical copies reduce to the ordinary pseudo-gradient.
  Eigen::VectorXd est(4);
  est << x(0), x(1), x(0), x(1);
  REQUIRE((extended_pseudo_gradient(game, est) - pseudo_gradient(game, x))
              .norm() == 0.0);
  // Distinct copies: block i uses copy i only.
  Eigen::VectorXd mixed(4);
  mixed << 1.0, 2.0, 3.0, 4.0;
  const Eigen::VectorXd F = extended_pseudo_gradient(game, mixed);
  REQUIRE(F(0) == Catch::Approx(3.0 * 1.0 - 2.0 * 2.0));
  REQUIRE(F(1) == Catch::Approx(3.0 * 4.0 - 2.0 * 3.0));
  REQUIRE_THROWS_AS(extended_pseudo_gradient(game, Eigen::VectorXd::Zero(3)),
                    ValidationError);
}

TEST_CASE("solve_ne solves the linear system exactly for quadratic games") {
  Eigen::MatrixXd A(2, 2);
  A << 3, -2, -2, 3;
  Eigen::VectorXd r(2);
  r << 1, 1;
  const GameSpec game({1, 1}, QuadraticGame{A, r});
  const Eigen::VectorXd x_star = solve_ne(game);
  REQUIRE(x_star(0) == Catch::Approx(-1.0).margin(1e-12));
  REQUIRE(x_star(1) == Catch::Approx(-1.0).margin(1e-12));
  REQUIRE(pseudo_gradient(game, x_star).norm() < 1e-10);
}

GameSpec wrap_as_general(const GameSpec& quad) {
  GeneralGame g;
  g.partial_grad = [quad](int i, const Eigen::VectorXd& x) {
    return partial_gradient(quad, i, x);
  };
  g.box_lo = Eigen::VectorXd::Constant(quad.n(), -1.0);
  g.box_hi = Eigen::VectorXd::Constant(quad.n(), 1.0);
  std::vector<int> dims;
  for (int i = 0; i < quad.players(); ++i) {
    dims.push_back(quad.layout().dim(i));
  }
  return GameSpec(dims, std::move(g));
}

TEST_CASE("solve_ne flow converges for general games") {
  Eigen::MatrixXd A(2, 2);
  A << 3, -2, -2, 3;
  Eigen::VectorXd r(2);
  r << 1, 1;
  const GameSpec quad({1, 1}, QuadraticGame{A, r});
  const GameSpec general = wrap_as_general(quad);
  SolveOptions opts;
  opts.tol = 1e-10;
  const Eigen::VectorXd x_star = solve_ne(general, opts);
  REQUIRE((x_star - solve_ne(quad)).norm() < 1e-8);

  SolveOptions tight;
  tight.tol = 1e-14;
  tight.max_iter = 3;
  try {
    solve_ne(general, tight);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    REQUIRE(e.residual > 0.0);
  }
}

TEST_CASE("sampled constants bracket the exact ones") {
  const GameSpec quad = two_player_coupled();
  const GameSpec general = wrap_as_general(quad);
  const ConstantsEstimate est = certify_constants(general, 20000, 5);
  REQUIRE_FALSE(est.exact);
  REQUIRE(est.mu_upper_bound);
  REQUIRE(est.theta_lower_bound);
  // Sampling can only shrink the observed range [mu, theta].
  REQUIRE(est.mu >= 1.0 - 1e-9);
  REQUIRE(est.mu <= 5.0 + 1e-9);
  REQUIRE(est.theta >= 1.0 - 1e-9);
  REQUIRE(est.theta <= 5.0 + 1e-9);
  REQUIRE(est.theta >= est.mu);

  const ConstantsEstimate exact = certify_constants(quad, 1, 0);
  REQUIRE(exact.exact);
  REQUIRE(exact.mu == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(exact.theta == Catch::Approx(5.0).margin(1e-12));

  REQUIRE_THROWS_AS(certify_constants(general, 0, 0), ValidationError);
}

}  // namespace
}  // namespace neflow
