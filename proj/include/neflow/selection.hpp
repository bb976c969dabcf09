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

#include <numeric>
#include <vector>

#include "neflow/common.hpp"

namespace neflow {

// Player-major layout of a stacked action profile x = col(x_1, ..., x_N).
struct ActionLayout {
  std::vector<int> dims;     // n_i per player
  std::vector<int> offsets;  // prefix sums
  int n = 0;                 // total dimension

  static ActionLayout from_dims(std::vector<int> dims) {
    if (dims.size() < 2) {
      throw ValidationError("layout needs at least 2 players, got " +
                            std::to_string(dims.size()));
    }
    ActionLayout out;
    out.offsets.reserve(dims.size());
    int off = 0;
    for (int d : dims) {
      if (d < 1) throw ValidationError("player dimension must be >= 1");
      out.offsets.push_back(off);
      off += d;
    }
    out.dims = std::move(dims);
    out.n = off;
    return out;
  }

  int players() const { return static_cast<int>(dims.size()); }
  int offset(int i) const { return offsets[static_cast<size_t>(i)]; }
  int dim(int i) const { return dims[static_cast<size_t>(i)]; }

  void check_player(int i) const {
    if (i < 0 || i >= players()) {
      throw ValidationError("player index " + std::to_string(i) +
                            " out of range [0, " + std::to_string(players()) +
                            ")");
    }
  }
};

// The selection/complement/embedding maps between a full profile in R^n,
// one player's own action in R^{n_i}, and the remaining players' actions in
// R^{n - n_i}. Realized as index arithmetic: the corresponding 0/1 matrices
// (own-rows selector and others-rows selector) are never materialized, and
// the pair satisfies "own-embed + others-embed = identity" by construction.
inline Eigen::VectorXd select_action(const ActionLayout& layout, int i,
                                     const Eigen::VectorXd& profile) {
  layout.check_player(i);
  if (profile.size() != layout.n) {
    throw ValidationError("profile length " + std::to_string(profile.size()) +
                          " != layout total " + std::to_string(layout.n));
  }
  return profile.segment(layout.offset(i), layout.dim(i));
}

inline Eigen::VectorXd select_others(const ActionLayout& layout, int i,
                                     const Eigen::VectorXd& profile) {
  layout.check_player(i);
  if (profile.size() != layout.n) {
    throw ValidationError("profile length " + std::to_string(profile.size()) +
                          " != layout total " + std::to_string(layout.n));
  }
  const int off = layout.offset(i), ni = layout.dim(i);
  Eigen::VectorXd out(layout.n - ni);
  out.head(off) = profile.head(off);
  out.tail(layout.n - off - ni) = profile.tail(layout.n - off - ni);
  return out;
}

inline Eigen::VectorXd embed(const ActionLayout& layout, int i,
                             const Eigen::VectorXd& own,
                             const Eigen::VectorXd& others) {
  layout.check_player(i);
  const int off = layout.offset(i), ni = layout.dim(i);
  if (own.size() != ni) {
    throw ValidationError("own-action length " + std::to_string(own.size()) +
                          " != n_i = " + std::to_string(ni));
  }
  if (others.size() != layout.n - ni) {
    throw ValidationError("others length " + std::to_string(others.size()) +
                          " != n - n_i = " + std::to_string(layout.n - ni));
  }
  Eigen::VectorXd out(layout.n);
  out.head(off) = others.head(off);
  out.segment(off, ni) = own;
  out.tail(layout.n - off - ni) = others.tail(layout.n - off - ni);
  return out;
}

}  // namespace neflow
