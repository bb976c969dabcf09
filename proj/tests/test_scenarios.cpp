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

#include "neflow/scenarios.hpp"

namespace neflow {
namespace {

TEST_CASE("sensor network game has the closed-form equilibrium") {
  const GameSpec game = sensor_network_game();
  REQUIRE(game.players() == 5);
  REQUIRE(game.n() == 10);
  REQUIRE(*game.mu() == Catch::Approx(2.0).margin(1e-9));
  REQUIRE(*game.theta() == Catch::Approx(12.0).margin(1e-9));

  const Eigen::VectorXd x_star = solve_ne(game);
  Eigen::VectorXd expected(10);
  expected << -0.25, 0.416667, 0.083333, 0.416667, 0.25, 0.083333, -0.25,
      0.583333, -0.333333, 0.0;
  REQUIRE((x_star - expected).cwiseAbs().maxCoeff() < 1e-5);
  REQUIRE(pseudo_gradient(game, x_star).norm() < 1e-10);
}

TEST_CASE("sensor scenario couples every agent to a constant bias") {
  const Scenario sc = sensor_scenario();
  REQUIRE(sc.name == "sensor");
  REQUIRE(sc.exos.size() == 5);
  for (const Exosystem& exo : sc.exos) {
    REQUIRE(exo.q() == 2);
    const Eigen::VectorXd d = disturbance_at(exo, 3.0);
    REQUIRE(d(0) == Catch::Approx(0.5));
    REQUIRE(d(1) == 0.0);
  }
  REQUIRE(sc.x0.size() == 10);
  REQUIRE(sc.x0.norm() == 0.0);
}

TEST_CASE("power control gradients match finite differences inside the box") {
  const OsnrParams params = OsnrParams::defaults();
  const GameSpec game = osnr_game(params);
  REQUIRE(game.players() == 10);
  REQUIRE_FALSE(game.mu());  // constants are not known in closed form
  Rng rng(21);
  const double h = 1e-7;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = rng.uniform_vector(10, 0.01, 0.4);
    for (int i = 0; i < 10; ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      const double fd = (game.cost(i, xp) - game.cost(i, xm)) / (2 * h);
      REQUIRE(partial_gradient(game, i, x)(0) ==
              Catch::Approx(fd).margin(1e-5));
    }
  }
}

TEST_CASE("power control enforces only the constraints each agent sees") {
  const GameSpec game = osnr_game();
  // Total power above the budget: every channel's gradient is undefined.
  const Eigen::VectorXd over = Eigen::VectorXd::Constant(10, 0.6);
  REQUIRE_THROWS_AS(partial_gradient(game, 0, over), DomainError);

  // Channel 3's own log argument fails, but channel 0 never differentiates
  // through it, so channel 0 still evaluates.
  Eigen::VectorXd mixed = Eigen::VectorXd::Constant(10, 0.1);
  mixed(3) = -0.5;  // makes s_3 + c_3 x_3 negative while s_0 stays positive
  REQUIRE_THROWS_AS(partial_gradient(game, 3, mixed), DomainError);
  REQUIRE_NOTHROW(partial_gradient(game, 0, mixed));
}

TEST_CASE("power control equilibrium is interior") {
  const GameSpec game = osnr_game();
  const Eigen::VectorXd x_star = solve_ne(game);
  REQUIRE(x_star.minCoeff() > 0.0);
  REQUIRE(x_star.sum() < OsnrParams::defaults().P0);
  REQUIRE(pseudo_gradient(game, x_star).norm() < 1e-8);
}

TEST_CASE("power control pilots scale with their channel index") {
  const Scenario sc = osnr_scenario();
  REQUIRE(sc.exos.size() == 10);
  REQUIRE(sc.pole_templates.size() == 10);
  const OsnrParams p = OsnrParams::defaults();
  for (int i = 0; i < 10; ++i) {
    REQUIRE(sc.exos[i].q() == 3);
    // d_i(0) = P0 for every pilot; the modulation grows with the index.
    REQUIRE(disturbance_at(sc.exos[i], 0.0)(0) == Catch::Approx(p.P0));
    const double omega = 2.0 * M_PI * p.f_hz(i) * p.time_scale;
    REQUIRE(sc.pole_templates[i].size() == 3);
    REQUIRE(sc.pole_templates[i][0] == Catch::Approx(-0.8 * omega));
    REQUIRE(sc.pole_templates[i][1] == Catch::Approx(-omega));
    REQUIRE(sc.pole_templates[i][2] == Catch::Approx(-1.2 * omega));
  }
  // Tone i completes i cycles per rescaled second.
  const double period_0 = 1.0 / (p.f_hz(0) * p.time_scale);
  const Eigen::VectorXd d0 = disturbance_at(sc.exos[0], 0.0);
  const Eigen::VectorXd dT = disturbance_at(sc.exos[0], period_0);
  REQUIRE((d0 - dT).norm() < 1e-9);
}

TEST_CASE("parameter validation rejects degenerate power control setups") {
  OsnrParams p = OsnrParams::defaults();
  p.P0 = 0.0;
  REQUIRE_THROWS_AS(osnr_game(p), ValidationError);
  p = OsnrParams::defaults();
  p.n0(2) = 0.0;
  REQUIRE_THROWS_AS(osnr_game(p), ValidationError);
  p = OsnrParams::defaults();
  p.Gamma(1, 2) = -0.1;
  REQUIRE_THROWS_AS(osnr_game(p), ValidationError);
  p = OsnrParams::defaults();
  p.time_scale = 0.0;
  REQUIRE_THROWS_AS(osnr_scenario(p), ValidationError);
}

TEST_CASE("synthetic games hit the requested conditioning exactly") {
  const GameSpec game = synthetic_quadratic({2, 2, 2}, 50.0, 123);
  REQUIRE(*game.mu() == Catch::Approx(1.0).margin(1e-9));
  REQUIRE(*game.theta() == Catch::Approx(50.0).margin(1e-9));

  // Same seed, same game; the draw is deterministic.
  const GameSpec again = synthetic_quadratic({2, 2, 2}, 50.0, 123);
  REQUIRE((game.quad().A - again.quad().A).norm() == 0.0);
  REQUIRE((game.quad().r - again.quad().r).norm() == 0.0);
  const GameSpec other = synthetic_quadratic({2, 2, 2}, 50.0, 124);
  REQUIRE((game.quad().A - other.quad().A).norm() > 1e-6);

  REQUIRE_THROWS_AS(synthetic_quadratic({2, 2}, 0.5, 0), ValidationError);
}

TEST_CASE("sampled constants are sane for the power control game") {
  const GameSpec game = osnr_game();
  const ConstantsEstimate est = certify_constants(game, 5000, 3);
  REQUIRE_FALSE(est.exact);
  REQUIRE(est.mu > 0.0);
  REQUIRE(est.theta >= est.mu);
  REQUIRE(std::isfinite(est.theta));
}

}  // namespace
}  // namespace neflow
