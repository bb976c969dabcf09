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

#include <queue>
#include <vector>

#include "neflow/common.hpp"

namespace neflow {

// Undirected communication graph with its Laplacian and spectral summary.
struct GraphSpec {
  int N = 0;
  Eigen::MatrixXd adjacency;  // symmetric 0/1, zero diagonal
  Eigen::MatrixXd laplacian;  // diag(degrees) - adjacency
  double lambda2 = 0.0;       // algebraic connectivity
  bool connected = false;
  std::vector<std::vector<int>> neighbors;  // adjacency lists
};

namespace detail {

inline bool bfs_connected(const std::vector<std::vector<int>>& neighbors) {
  const int N = static_cast<int>(neighbors.size());
  if (N == 0) return false;
  std::vector<char> seen(static_cast<size_t>(N), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int visited = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : neighbors[static_cast<size_t>(u)]) {
      if (!seen[static_cast<size_t>(v)]) {
        seen[static_cast<size_t>(v)] = 1;
        ++visited;
        q.push(v);
      }
    }
  }
  return visited == N;
}

}  // namespace detail

// Builds a GraphSpec from a symmetric 0/1 adjacency matrix with zero
// diagonal. Connectivity is decided twice -- spectrally (lambda2 > 0) and by
// breadth-first search -- and the two verdicts must agree.
inline GraphSpec build_graph(const Eigen::MatrixXd& adjacency) {
  const int N = static_cast<int>(adjacency.rows());
  if (adjacency.cols() != N) throw ValidationError("adjacency must be square");
  if (N < 2) throw ValidationError("graph needs at least 2 vertices");
  for (int i = 0; i < N; ++i) {
    if (adjacency(i, i) != 0.0) {
      throw ValidationError("self-loop at vertex " + std::to_string(i));
    }
    for (int j = 0; j < N; ++j) {
      const double a = adjacency(i, j);
      if (a != 0.0 && a != 1.0) {
        throw ValidationError("adjacency entries must be 0 or 1, got " +
                              std::to_string(a));
      }
      if (a != adjacency(j, i)) {
        throw ValidationError("adjacency must be symmetric; mismatch at (" +
                              std::to_string(i) + "," + std::to_string(j) +
                              ")");
      }
    }
  }

  GraphSpec g;
  g.N = N;
  g.adjacency = adjacency;
  g.laplacian = Eigen::MatrixXd(adjacency.rowwise().sum().asDiagonal()) -
                adjacency;
  g.neighbors.resize(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      if (adjacency(i, j) == 1.0) g.neighbors[static_cast<size_t>(i)].push_back(j);
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.laplacian);
  g.lambda2 = es.eigenvalues()(1);  // ascending order
  if (std::abs(g.lambda2) < 1e-9) g.lambda2 = 0.0;

  const bool spectral = g.lambda2 > 0.0;
  const bool walk = detail::bfs_connected(g.neighbors);
  if (spectral != walk) {
    throw Error("connectivity checks disagree: lambda2 = " +
                std::to_string(g.lambda2) + " but BFS says " +
                (walk ? "connected" : "disconnected"));
  }
  g.connected = walk;
  return g;
}

inline GraphSpec complete_graph(int N) {
  if (N < 2) throw ValidationError("complete graph needs N >= 2");
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(N, N);
  a.diagonal().setZero();
  return build_graph(a);
}

inline GraphSpec path_graph(int N) {
  if (N < 2) throw ValidationError("path graph needs N >= 2");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i + 1 < N; ++i) a(i, i + 1) = a(i + 1, i) = 1.0;
  return build_graph(a);
}

inline GraphSpec ring_graph(int N) {
  if (N < 3) throw ValidationError("ring graph needs N >= 3");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    int j = (i + 1) % N;
    a(i, j) = a(j, i) = 1.0;
  }
  return build_graph(a);
}

// Seeded Erdos-Renyi draw, resampled until connected. Each unordered pair
// (i < j, lexicographic order) consumes one uniform draw, so the sampled
// graph is a pure function of (N, p, seed).
inline GraphSpec random_connected_graph(int N, double edge_probability,
                                        std::uint64_t seed) {
  if (N < 2) throw ValidationError("random graph needs N >= 2");
  if (!(edge_probability > 0.0 && edge_probability <= 1.0)) {
    throw ValidationError("edge probability must be in (0, 1]");
  }
  Rng rng(seed);
  constexpr int kMaxAttempts = 1000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(N, N);
    std::vector<std::vector<int>> nbrs(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) {
        if (rng.uniform01() < edge_probability) {
          a(i, j) = a(j, i) = 1.0;
          nbrs[static_cast<size_t>(i)].push_back(j);
          nbrs[static_cast<size_t>(j)].push_back(i);
        }
      }
    }
    if (detail::bfs_connected(nbrs)) return build_graph(a);
  }
  throw Error("no connected graph in " + std::to_string(kMaxAttempts) +
              " draws at p = " + std::to_string(edge_probability) +
              "; increase the edge probability");
}

// Sufficient convergence condition mu*(lambda2 - theta) > theta^2 from the
// stability analysis of the partial-information dynamics. The condition is
// sufficient only: callers should surface a failed check as a warning, not
// an error, since the dynamics routinely converge well outside it.
struct ConditionReport {
  bool holds = false;
  double margin = 0.0;  // mu*(lambda2 - theta) - theta^2
};

inline ConditionReport check_condition(double mu, double theta,
                                       double lambda2) {
  if (!(mu > 0.0)) throw ValidationError("condition check needs mu > 0");
  if (!(theta > 0.0)) throw ValidationError("condition check needs theta > 0");
  if (lambda2 < 0.0) {
    throw ValidationError("condition check needs lambda2 >= 0");
  }
  ConditionReport rep;
  rep.margin = mu * (lambda2 - theta) - theta * theta;
  rep.holds = rep.margin > 0.0;
  return rep;
}

}  // namespace neflow
