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

#include <algorithm>
#include <complex>

#include <catch2/catch_amalgamated.hpp>

#include "neflow/exosystem.hpp"

namespace neflow {
namespace {

TEST_CASE("constant generators hold their value") {
  Eigen::VectorXd v(2);
  v << 0.5, 0.0;
  const Exosystem exo = constant_disturbance(v);
  REQUIRE(exo.q() == 2);
  REQUIRE(exo.ny() == 2);
  REQUIRE((disturbance_at(exo, 0.0) - v).norm() == 0.0);
  REQUIRE((disturbance_at(exo, 17.3) - v).norm() < 1e-14);
  // One scalar block per independent constant state.
  REQUIRE(exo.blocks().size() == 2);

  const Exosystem none = zero_disturbance(3);
  REQUIRE(none.q() == 0);
  REQUIRE(disturbance_at(none, 1.0).norm() == 0.0);
}

TEST_CASE("biased sinusoid reproduces bias + A sin(omega t)") {
  const double bias = 0.5, amp = 0.5, omega = 1.0;
  const Exosystem exo = biased_sinusoid_rad(bias, amp, omega);
  REQUIRE(exo.q() == 3);
  REQUIRE(exo.ny() == 1);
  REQUIRE(exo.blocks().size() == 1);  // the D row ties bias and tone together
  for (double t : {0.0, 0.3, 1.7, 6.2, 50.0}) {
    const double expected = bias + amp * std::sin(omega * t);
    REQUIRE(disturbance_at(exo, t)(0) ==
            Catch::Approx(expected).margin(1e-12));
  }
  // One full period returns the state to its start.
  const double period = 2.0 * M_PI / omega;
  REQUIRE((state_transition(exo.S(), period) -
           Eigen::MatrixXd::Identity(3, 3))
              .norm() < 1e-12);
}

TEST_CASE("lift_output embeds a scalar tone into one channel") {
  const Exosystem scalar = biased_sinusoid_rad(0.5, 0.5, 1.0);
  const Exosystem lifted = lift_output(scalar, 2, 0);
  REQUIRE(lifted.ny() == 2);
  const Eigen::VectorXd d = disturbance_at(lifted, 0.7);
  REQUIRE(d(0) == Catch::Approx(disturbance_at(scalar, 0.7)(0)));
  REQUIRE(d(1) == 0.0);
  REQUIRE_THROWS_AS(lift_output(lifted, 3, 0), ValidationError);
  REQUIRE_THROWS_AS(lift_output(scalar, 2, 2), ValidationError);
}

TEST_CASE("validation demands marginal stability and observability") {
  REQUIRE(validate(biased_sinusoid_rad(1.0, 1.0, 2.0)).marginally_stable);
  REQUIRE(validate(biased_sinusoid_rad(1.0, 1.0, 2.0)).observable);

  // Strictly unstable mode.
  Eigen::MatrixXd S1(1, 1);
  S1 << 0.1;
  Eigen::MatrixXd D1(1, 1);
  D1 << 1.0;
  REQUIRE_FALSE(validate(Exosystem(S1, D1, Eigen::VectorXd::Ones(1)))
                    .marginally_stable);

  // Jordan block at zero: eigenvalues on the axis but not semisimple, so the
  // signal grows linearly.
  Eigen::MatrixXd S2 = Eigen::MatrixXd::Zero(2, 2);
  S2(0, 1) = 1.0;
  Eigen::MatrixXd D2(1, 2);
  D2 << 1.0, 0.0;
  REQUIRE_FALSE(validate(Exosystem(S2, D2, Eigen::VectorXd::Ones(2)))
                    .marginally_stable);

  // Two constant states, only one visible: unobservable.
  Eigen::MatrixXd S3 = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd D3 = Eigen::MatrixXd::Zero(1, 2);
  D3(0, 0) = 1.0;
  REQUIRE_FALSE(validate(Exosystem(S3, D3, Eigen::VectorXd::Ones(2)))
                    .observable);
}

TEST_CASE("pole placement hits the requested observer spectrum") {
  const Exosystem exo = biased_sinusoid_rad(0.5, 0.5, 2.0);
  const std::vector<std::complex<double>> poles = {-1.0, -2.0, -3.0};
  const Eigen::MatrixXd K = design_observer_gain(exo, poles);
  Eigen::EigenSolver<Eigen::MatrixXd> es(exo.S() - K * exo.D());
  std::vector<double> re;
  for (int i = 0; i < 3; ++i) re.push_back(es.eigenvalues()(i).real());
  std::sort(re.begin(), re.end());
  REQUIRE(re[0] == Catch::Approx(-3.0).margin(1e-6));
  REQUIRE(re[1] == Catch::Approx(-2.0).margin(1e-6));
  REQUIRE(re[2] == Catch::Approx(-1.0).margin(1e-6));
  REQUIRE(es.eigenvalues().imag().cwiseAbs().maxCoeff() < 1e-6);

  // Complex poles must come in conjugate pairs.
  const std::vector<std::complex<double>> paired = {
      {-1.0, 1.0}, {-1.0, -1.0}, {-2.0, 0.0}};
  const Eigen::MatrixXd K2 = design_observer_gain(exo, paired);
  Eigen::EigenSolver<Eigen::MatrixXd> es2(exo.S() - K2 * exo.D());
  REQUIRE(es2.eigenvalues().real().maxCoeff() < -0.9);

  REQUIRE_THROWS_AS(design_observer_gain(exo, {-1.0, -2.0}),
                    ValidationError);
  REQUIRE_THROWS_AS(design_observer_gain(exo, {-1.0, -2.0, 3.0}),
                    ValidationError);
  REQUIRE_THROWS_AS(
      design_observer_gain(exo, {{-1.0, 1.0}, {-2.0, 0.0}, {-3.0, 0.0}}),
      ValidationError);
}

TEST_CASE("gain setter rejects non-stabilizing gains") {
  Eigen::VectorXd v(1);
  v << 1.0;
  Exosystem exo = constant_disturbance(v);
  REQUIRE_FALSE(exo.has_gain());
  REQUIRE_THROWS_AS(exo.K(), ValidationError);
  REQUIRE_THROWS_AS(exo.set_gain(Eigen::MatrixXd::Zero(1, 1)),
                    ValidationError);
  exo.set_gain(Eigen::MatrixXd::Identity(1, 1));
  REQUIRE(exo.has_gain());
  REQUIRE_THROWS_AS(exo.set_gain(Eigen::MatrixXd::Zero(2, 2)),
                    ValidationError);
}

TEST_CASE("default poles and templates are assigned per block") {
  // Single 3-state block: defaults -1, -2, -3.
  const Exosystem tone = biased_sinusoid_rad(0.0, 1.0, 1.0);
  const auto tone_poles = default_observer_poles(tone);
  REQUIRE(tone_poles.size() == 3);
  std::vector<double> re;
  for (const auto& p : tone_poles) {
    re.push_back(p.real());
    REQUIRE(p.imag() == 0.0);
  }
  std::sort(re.begin(), re.end());
  REQUIRE(re[0] == Catch::Approx(-3.0));
  REQUIRE(re[2] == Catch::Approx(-1.0));

  // Two scalar blocks: each takes the first entry of the template.
  Eigen::VectorXd v(2);
  v << 0.5, 0.0;
  const Exosystem cst = constant_disturbance(v);
  const auto cst_poles = poles_from_template(cst, {-1.0});
  REQUIRE(cst_poles.size() == 2);
  REQUIRE(cst_poles[0].real() == Catch::Approx(-1.0));
  REQUIRE(cst_poles[1].real() == Catch::Approx(-1.0));
  // A 3-entry template feeds the tone's single 3-state block.
  const auto scaled = poles_from_template(tone, {-0.8, -1.0, -1.2});
  REQUIRE(scaled.size() == 3);

  // Template shorter than the largest block is an error.
  REQUIRE_THROWS_AS(poles_from_template(tone, {-1.0}), ValidationError);
  // Nonnegative template entries are rejected.
  REQUIRE_THROWS_AS(poles_from_template(cst, {0.0}), ValidationError);
}

TEST_CASE("gain from the template stabilizes the constant observer exactly") {
  // Template {-1} on a constant generator gives K = I, so the observer error
  // contracts like exp(-t).
  Eigen::VectorXd v(2);
  v << 0.5, 0.0;
  Exosystem exo = constant_disturbance(v);
  exo.set_gain(design_observer_gain(exo, poles_from_template(exo, {-1.0})));
  REQUIRE((exo.K() - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
}

}  // namespace
}  // namespace neflow
