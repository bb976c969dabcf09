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

#include "neflow/graph.hpp"

namespace neflow {
namespace {

Eigen::MatrixXd laplacian_of(const GraphSpec& g) { return g.laplacian; }

TEST_CASE("named graphs have their textbook spectra") {
  const GraphSpec k5 = complete_graph(5);
  REQUIRE(k5.connected);
  REQUIRE(k5.lambda2 == Catch::Approx(5.0).margin(1e-9));
  for (const auto& nbrs : k5.neighbors) REQUIRE(nbrs.size() == 4);

  // Path P3: Laplacian eigenvalues 0, 1, 3.
  REQUIRE(path_graph(3).lambda2 == Catch::Approx(1.0).margin(1e-9));
  // Ring C4: eigenvalues 0, 2, 2, 4.
  REQUIRE(ring_graph(4).lambda2 == Catch::Approx(2.0).margin(1e-9));
  // Denser graphs have larger algebraic connectivity.
  REQUIRE(path_graph(4).lambda2 <= ring_graph(4).lambda2 + 1e-12);
  REQUIRE(ring_graph(4).lambda2 <= complete_graph(4).lambda2 + 1e-12);
}

TEST_CASE("adjacency validation rejects malformed inputs") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  a(0, 1) = 1;  // asymmetric
  REQUIRE_THROWS_AS(build_graph(a), ValidationError);

  Eigen::MatrixXd loop = Eigen::MatrixXd::Zero(2, 2);
  loop(0, 0) = 1;
  REQUIRE_THROWS_AS(build_graph(loop), ValidationError);

  Eigen::MatrixXd weighted = Eigen::MatrixXd::Zero(2, 2);
  weighted(0, 1) = weighted(1, 0) = 0.5;
  REQUIRE_THROWS_AS(build_graph(weighted), ValidationError);

  REQUIRE_THROWS_AS(build_graph(Eigen::MatrixXd::Zero(1, 1)),
                    ValidationError);
  REQUIRE_THROWS_AS(build_graph(Eigen::MatrixXd::Zero(2, 3)),
                    ValidationError);
}

TEST_CASE("disconnected graphs are flagged, not mangled") {
  // Two disjoint edges on 4 vertices.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
  a(0, 1) = a(1, 0) = 1;
  a(2, 3) = a(3, 2) = 1;
  const GraphSpec g = build_graph(a);
  REQUIRE_FALSE(g.connected);
  REQUIRE(g.lambda2 == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("random connected graphs are seeded and reproducible") {
  const GraphSpec g1 = random_connected_graph(5, 0.6, 42);
  const GraphSpec g2 = random_connected_graph(5, 0.6, 42);
  REQUIRE(g1.connected);
  REQUIRE((g1.adjacency - g2.adjacency).norm() == 0.0);

  // High edge probability at this seed fills in the complete graph; the
  // acceptance runs rely on exactly this draw.
  const GraphSpec dense = random_connected_graph(5, 0.95, 7);
  REQUIRE((dense.adjacency - complete_graph(5).adjacency).norm() == 0.0);

  REQUIRE_THROWS_AS(random_connected_graph(1, 0.5, 0), ValidationError);
  REQUIRE_THROWS_AS(random_connected_graph(4, 0.0, 0), ValidationError);
  REQUIRE_THROWS_AS(random_connected_graph(4, 1.5, 0), ValidationError);
}

TEST_CASE("laplacian quadratic form is bounded by the spectrum") {
  const GraphSpec g = ring_graph(6);
  const Eigen::MatrixXd L = laplacian_of(g);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  const double lambda_max = es.eigenvalues().maxCoeff();
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd v = rng.normal_vector(6);
    v.array() -= v.mean();  // orthogonal to the all-ones kernel
    const double quad = v.dot(L * v);
    REQUIRE(quad >= g.lambda2 * v.squaredNorm() - 1e-9);
    REQUIRE(quad <= lambda_max * v.squaredNorm() + 1e-9);
  }
}

TEST_CASE("condition margin follows mu (lambda2 - theta) - theta^2") {
  const ConditionReport fail = check_condition(2.0, 12.0, 5.0);
  REQUIRE_FALSE(fail.holds);
  REQUIRE(fail.margin == Catch::Approx(-158.0).margin(1e-12));

  const ConditionReport pass = check_condition(1.0, 1.0, 2.6158);
  REQUIRE(pass.holds);
  REQUIRE(pass.margin == Catch::Approx(0.6158).margin(1e-12));

  REQUIRE_THROWS_AS(check_condition(0.0, 1.0, 1.0), ValidationError);
  REQUIRE_THROWS_AS(check_condition(1.0, -1.0, 1.0), ValidationError);
  REQUIRE_THROWS_AS(check_condition(1.0, 1.0, -0.1), ValidationError);
}

}  // namespace
}  // namespace neflow
