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

#include <algorithm>
#include <complex>
#include <functional>
#include <numeric>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "neflow/common.hpp"

namespace neflow {

// One single-output sub-generator of an exosystem: a set of state indices
// whose dynamics are closed under S and which feed exactly one output row.
// Observer gains are designed block by block on these.
struct ExoBlock {
  std::vector<int> states;
  int out_row = -1;  // -1: no output row touches this block
};

// Deterministic disturbance generator dw/dt = S w, d = D w with marginally
// stable S and observable (D, S). Holds the full generator (including the
// initial state w0, which only the simulator uses) plus, once designed, the
// reduced-order observer gain K that agents use; agents themselves only ever
// read S, D and K.
class Exosystem {
 public:
  Exosystem(Eigen::MatrixXd S, Eigen::MatrixXd D, Eigen::VectorXd w0)
      : S_(std::move(S)), D_(std::move(D)), w0_(std::move(w0)) {
    if (S_.rows() != S_.cols()) throw ValidationError("S must be square");
    if (D_.cols() != S_.rows()) {
      throw ValidationError("D must have as many columns as S has states");
    }
    if (w0_.size() != S_.rows()) {
      throw ValidationError("w0 length must equal the state dimension of S");
    }
    detect_blocks();
  }

  int q() const { return static_cast<int>(S_.rows()); }
  int ny() const { return static_cast<int>(D_.rows()); }
  const Eigen::MatrixXd& S() const { return S_; }
  const Eigen::MatrixXd& D() const { return D_; }
  const Eigen::VectorXd& w0() const { return w0_; }
  const std::vector<ExoBlock>& blocks() const { return blocks_; }

  bool has_gain() const { return has_K_; }
  const Eigen::MatrixXd& K() const {
    if (!has_K_) throw ValidationError("observer gain K has not been set");
    return K_;
  }

  // Installs an observer gain after checking it actually stabilizes the
  // observer error: every eigenvalue of S - K D must lie strictly in the
  // open left half plane.
  void set_gain(Eigen::MatrixXd K) {
    if (K.rows() != q() || K.cols() != ny()) {
      throw ValidationError("gain must be q x n_outputs");
    }
    if (q() > 0) {
      Eigen::EigenSolver<Eigen::MatrixXd> es(S_ - K * D_);
      const double max_re = es.eigenvalues().real().maxCoeff();
      if (!(max_re < 0.0)) {
        throw ValidationError(
            "gain does not stabilize the observer: max Re eig(S - K D) = " +
            std::to_string(max_re));
      }
    }
    K_ = std::move(K);
    has_K_ = true;
  }

 private:
  // Partitions the states into blocks: states coupled through S share a
  // block, and any output row reading several blocks merges them. Each
  // resulting block may be fed to at most one output row; violations are
  // reported when a gain is designed, not here, so purely generative
  // exosystems remain constructible.
  void detect_blocks() {
    const int n = q();
    std::vector<int> parent(static_cast<size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
      while (parent[static_cast<size_t>(a)] != a) {
        parent[static_cast<size_t>(a)] =
            parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
        a = parent[static_cast<size_t>(a)];
      }
      return a;
    };
    auto unite = [&](int a, int b) {
      parent[static_cast<size_t>(find(a))] = find(b);
    };
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (S_(i, j) != 0.0) unite(i, j);
      }
    }
    for (int r = 0; r < ny(); ++r) {
      int first = -1;
      for (int c = 0; c < n; ++c) {
        if (D_(r, c) != 0.0) {
          if (first < 0) {
            first = c;
          } else {
            unite(first, c);
          }
        }
      }
    }
    std::vector<int> root_to_block(static_cast<size_t>(n), -1);
    blocks_.clear();
    for (int c = 0; c < n; ++c) {
      int root = find(c);
      if (root_to_block[static_cast<size_t>(root)] < 0) {
        root_to_block[static_cast<size_t>(root)] =
            static_cast<int>(blocks_.size());
        blocks_.push_back({});
      }
      blocks_[static_cast<size_t>(root_to_block[static_cast<size_t>(root)])]
          .states.push_back(c);
    }
    for (auto& blk : blocks_) {
      for (int r = 0; r < ny(); ++r) {
        bool touches = false;
        for (int c : blk.states) {
          if (D_(r, c) != 0.0) touches = true;
        }
        if (touches) {
          if (blk.out_row >= 0 && blk.out_row != r) {
            multi_output_block_ = true;
          }
          blk.out_row = r;
        }
      }
    }
  }

  Eigen::MatrixXd S_, D_;
  Eigen::VectorXd w0_;
  Eigen::MatrixXd K_;
  bool has_K_ = false;
  bool multi_output_block_ = false;
  std::vector<ExoBlock> blocks_;

  friend Eigen::MatrixXd design_observer_gain(
      const Exosystem&, const std::vector<std::complex<double>>&);
};

// d(t) = value for all t: S = 0, D = I, one scalar block per channel.
inline Exosystem constant_disturbance(const Eigen::VectorXd& value) {
  const int m = static_cast<int>(value.size());
  return Exosystem(Eigen::MatrixXd::Zero(m, m),
                   Eigen::MatrixXd::Identity(m, m), value);
}

// No disturbance at all: an empty generator with `ny` zero output channels.
inline Exosystem zero_disturbance(int ny) {
  return Exosystem(Eigen::MatrixXd::Zero(0, 0), Eigen::MatrixXd::Zero(ny, 0),
                   Eigen::VectorXd::Zero(0));
}

// Scalar output bias + amplitude * sin(2*pi*f*t), generated by a 3-state
// exosystem: one integrator-less bias state and a 2x2 rotation.
inline Exosystem biased_sinusoid(double bias, double amplitude,
                                 double frequency_hz) {
  if (!(frequency_hz > 0.0)) {
    throw ValidationError("biased_sinusoid needs frequency > 0");
  }
  const double omega = 2.0 * M_PI * frequency_hz;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(3, 3);
  S(1, 2) = omega;
  S(2, 1) = -omega;
  Eigen::MatrixXd D(1, 3);
  D << 1.0, 1.0, 0.0;
  Eigen::VectorXd w0(3);
  // Rotation state starts at (0, amplitude): the first rotation coordinate
  // then evolves as amplitude * sin(omega t).
  w0 << bias, 0.0, amplitude;
  return Exosystem(S, D, w0);
}

// Same generator specified by angular frequency (rad/s).
inline Exosystem biased_sinusoid_rad(double bias, double amplitude,
                                     double omega) {
  return biased_sinusoid(bias, amplitude, omega / (2.0 * M_PI));
}

// Widens a scalar-output exosystem to an ny-dimensional output with the
// scalar signal on `channel` and zeros elsewhere (e.g. a disturbance hitting
// only the first coordinate of a planar agent).
inline Exosystem lift_output(const Exosystem& exo, int ny, int channel) {
  if (exo.ny() != 1) throw ValidationError("lift_output needs scalar output");
  if (channel < 0 || channel >= ny) {
    throw ValidationError("lift_output channel out of range");
  }
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(ny, exo.q());
  D.row(channel) = exo.D().row(0);
  return Exosystem(exo.S(), D, exo.w0());
}

// State transition matrix exp(S t), using closed forms for the structures
// the library ships (zero blocks and 2x2 rotations) and the dense matrix
// exponential otherwise.
inline Eigen::MatrixXd state_transition(const Eigen::MatrixXd& S, double t) {
  const int n = static_cast<int>(S.rows());
  Eigen::MatrixXd Phi = Eigen::MatrixXd::Identity(n, n);
  std::vector<char> done(static_cast<size_t>(n), 0);
  // Greedy split into connected components of the sparsity pattern.
  for (int start = 0; start < n; ++start) {
    if (done[static_cast<size_t>(start)]) continue;
    std::vector<int> comp{start};
    done[static_cast<size_t>(start)] = 1;
    for (size_t k = 0; k < comp.size(); ++k) {
      for (int j = 0; j < n; ++j) {
        if (!done[static_cast<size_t>(j)] &&
            (S(comp[k], j) != 0.0 || S(j, comp[k]) != 0.0)) {
          done[static_cast<size_t>(j)] = 1;
          comp.push_back(j);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    const int m = static_cast<int>(comp.size());
    Eigen::MatrixXd Sb(m, m);
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) Sb(a, b) = S(comp[static_cast<size_t>(a)],
                                               comp[static_cast<size_t>(b)]);
    }
    Eigen::MatrixXd Pb;
    if (Sb.cwiseAbs().maxCoeff() == 0.0) {
      Pb = Eigen::MatrixXd::Identity(m, m);
    } else if (m == 2 && Sb(0, 0) == 0.0 && Sb(1, 1) == 0.0 &&
               Sb(0, 1) == -Sb(1, 0)) {
      const double a = Sb(0, 1) * t;
      Pb.resize(2, 2);
      Pb << std::cos(a), std::sin(a), -std::sin(a), std::cos(a);
    } else {
      Pb = (Sb * t).exp();
    }
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        Phi(comp[static_cast<size_t>(a)], comp[static_cast<size_t>(b)]) =
            Pb(a, b);
      }
    }
  }
  return Phi;
}

// d(t) = D exp(S t) w0.
inline Eigen::VectorXd disturbance_at(const Exosystem& exo, double t) {
  if (exo.q() == 0) return Eigen::VectorXd::Zero(exo.ny());
  return exo.D() * state_transition(exo.S(), t) * exo.w0();
}

// Validity certificate: marginal (neutral) stability of S -- all eigenvalues
// on the imaginary axis (|Re| <= 1e-9) and semisimple -- plus observability
// of (D, S) by the rank of the stacked observability matrix. Flags, not
// exceptions: invalid generators are reportable.
struct ExoCertificate {
  bool marginally_stable = false;
  bool observable = false;
};

inline ExoCertificate validate(const Exosystem& exo) {
  ExoCertificate cert;
  const int n = exo.q();
  if (n == 0) {
    cert.marginally_stable = true;
    cert.observable = true;
    return cert;
  }

  Eigen::EigenSolver<Eigen::MatrixXd> es(exo.S());
  const Eigen::VectorXcd eig = es.eigenvalues();
  bool on_axis = true;
  for (int i = 0; i < n; ++i) {
    if (std::abs(eig(i).real()) > 1e-9) on_axis = false;
  }
  bool semisimple = true;
  if (on_axis) {
    std::vector<char> grouped(static_cast<size_t>(n), 0);
    Eigen::MatrixXcd Sc = exo.S().cast<std::complex<double>>();
    for (int i = 0; i < n && semisimple; ++i) {
      if (grouped[static_cast<size_t>(i)]) continue;
      int algebraic = 0;
      for (int j = 0; j < n; ++j) {
        if (std::abs(eig(j) - eig(i)) < 1e-8) {
          algebraic++;
          grouped[static_cast<size_t>(j)] = 1;
        }
      }
      Eigen::MatrixXcd shifted =
          Sc - eig(i) * Eigen::MatrixXcd::Identity(n, n);
      Eigen::FullPivLU<Eigen::MatrixXcd> lu(shifted);
      lu.setThreshold(1e-8);
      const int geometric = n - static_cast<int>(lu.rank());
      if (geometric != algebraic) semisimple = false;
    }
  }
  cert.marginally_stable = on_axis && semisimple;

  Eigen::MatrixXd obs(static_cast<Eigen::Index>(exo.ny()) * n, n);
  Eigen::MatrixXd Dk = exo.D();
  for (int k = 0; k < n; ++k) {
    obs.middleRows(static_cast<Eigen::Index>(k) * exo.ny(), exo.ny()) = Dk;
    Dk = Dk * exo.S();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(obs);
  qr.setThreshold(1e-10);
  cert.observable = qr.rank() == n;
  return cert;
}

namespace detail {

// Real coefficients of prod (s - p_k), lowest order first (length m+1,
// leading coefficient 1). Requires the pole multiset to be closed under
// conjugation.
inline std::vector<double> real_char_poly(
    const std::vector<std::complex<double>>& poles,
    const std::string& where) {
  std::vector<std::complex<double>> remaining = poles;
  // Conjugate-closure check: greedily pair off complex poles.
  std::vector<std::complex<double>> pool = poles;
  for (size_t i = 0; i < pool.size(); ++i) {
    if (std::abs(pool[i].imag()) <= 1e-12) continue;
    bool paired = false;
    for (size_t j = i + 1; j < pool.size(); ++j) {
      if (std::abs(pool[j] - std::conj(pool[i])) < 1e-9) {
        pool[j] = std::complex<double>(0, 0);  // consumed
        pool[i] = std::complex<double>(0, 0);
        paired = true;
        break;
      }
    }
    if (!paired) {
      throw ValidationError(where + ": pole set not closed under conjugation");
    }
  }
  std::vector<std::complex<double>> coeff{1.0};
  for (const auto& p : remaining) {
    std::vector<std::complex<double>> next(coeff.size() + 1, 0.0);
    for (size_t k = 0; k < coeff.size(); ++k) {
      next[k + 1] += coeff[k];
      next[k] -= p * coeff[k];
    }
    coeff = std::move(next);
  }
  std::vector<double> real_coeff(coeff.size());
  for (size_t k = 0; k < coeff.size(); ++k) {
    if (std::abs(coeff[k].imag()) > 1e-9) {
      throw ValidationError(where + ": characteristic polynomial not real");
    }
    real_coeff[k] = coeff[k].real();
  }
  return real_coeff;
}

}  // namespace detail

// Observer gain by pole placement on the dual pair (S', D'): Ackermann's
// formula per single-output block, with a block of dimension q_b consuming
// the next q_b requested poles. The placed spectrum of S - K D is verified
// against the request to 1e-6.
inline Eigen::MatrixXd design_observer_gain(
    const Exosystem& exo, const std::vector<std::complex<double>>& poles) {
  const int n = exo.q();
  if (static_cast<int>(poles.size()) != n) {
    throw ValidationError("need exactly q = " + std::to_string(n) +
                          " observer poles, got " +
                          std::to_string(poles.size()));
  }
  for (const auto& p : poles) {
    if (!(p.real() < 0.0)) {
      throw ValidationError("observer poles must have negative real part");
    }
  }
  if (exo.multi_output_block_) {
    throw ValidationError(
        "observer design needs single-output blocks: some states are read by "
        "several output rows at once");
  }
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, exo.ny());
  size_t next_pole = 0;
  for (const auto& blk : exo.blocks()) {
    const int m = static_cast<int>(blk.states.size());
    std::vector<std::complex<double>> blk_poles(
        poles.begin() + static_cast<std::ptrdiff_t>(next_pole),
        poles.begin() + static_cast<std::ptrdiff_t>(next_pole + m));
    next_pole += static_cast<size_t>(m);
    if (blk.out_row < 0) {
      throw ValidationError(
          "exosystem block with no output row: (D, S) is unobservable");
    }
    Eigen::MatrixXd Sb(m, m);
    Eigen::VectorXd db(m);
    for (int a = 0; a < m; ++a) {
      db(a) = exo.D()(blk.out_row, blk.states[static_cast<size_t>(a)]);
      for (int b = 0; b < m; ++b) {
        Sb(a, b) = exo.S()(blk.states[static_cast<size_t>(a)],
                           blk.states[static_cast<size_t>(b)]);
      }
    }
    // Dual controllability (= observability of (db', Sb)).
    Eigen::MatrixXd A = Sb.transpose();
    Eigen::MatrixXd ctrb(m, m);
    Eigen::VectorXd col = db;
    for (int k = 0; k < m; ++k) {
      ctrb.col(k) = col;
      col = A * col;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ctrb);
    qr.setThreshold(1e-10);
    if (qr.rank() != m) {
      throw ValidationError(
          "unobservable exosystem block: observability rank " +
          std::to_string(qr.rank()) + " < " + std::to_string(m));
    }
    const std::vector<double> a_coeff =
        detail::real_char_poly(blk_poles, "observer design");
    // p(A) = A^m + a_{m-1} A^{m-1} + ... + a_0 I.
    Eigen::MatrixXd pA = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd Apow = Eigen::MatrixXd::Identity(m, m);
    for (int k = 0; k <= m; ++k) {
      pA += a_coeff[static_cast<size_t>(k)] * Apow;
      Apow = Apow * A;
    }
    Eigen::RowVectorXd last = Eigen::RowVectorXd::Zero(m);
    last(m - 1) = 1.0;
    Eigen::RowVectorXd kd = last * qr.solve(pA);
    for (int a = 0; a < m; ++a) {
      K(blk.states[static_cast<size_t>(a)], blk.out_row) = kd(a);
    }
  }

  // Round-trip check: the closed observer spectrum matches the request.
  Eigen::EigenSolver<Eigen::MatrixXd> es(exo.S() - K * exo.D());
  std::vector<std::complex<double>> placed(static_cast<size_t>(n)),
      wanted = poles;
  for (int i = 0; i < n; ++i) placed[static_cast<size_t>(i)] = es.eigenvalues()(i);
  auto lex = [](const std::complex<double>& a, const std::complex<double>& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  };
  std::sort(placed.begin(), placed.end(), lex);
  std::sort(wanted.begin(), wanted.end(), lex);
  for (int i = 0; i < n; ++i) {
    if (std::abs(placed[static_cast<size_t>(i)] -
                 wanted[static_cast<size_t>(i)]) > 1e-6) {
      throw Error("pole placement round-trip failed: requested " +
                  std::to_string(wanted[static_cast<size_t>(i)].real()) +
                  "+/-" + std::to_string(wanted[static_cast<size_t>(i)].imag()) +
                  "i, placed " +
                  std::to_string(placed[static_cast<size_t>(i)].real()) +
                  "+/-" + std::to_string(placed[static_cast<size_t>(i)].imag()) +
                  "i");
    }
  }
  return K;
}

// Default per-block poles {-1, -2, ..., -q_b}: real, distinct, and
// well-conditioned for Ackermann at the block sizes that occur here.
inline std::vector<std::complex<double>> default_observer_poles(
    const Exosystem& exo) {
  std::vector<std::complex<double>> poles;
  poles.reserve(static_cast<size_t>(exo.q()));
  for (const auto& blk : exo.blocks()) {
    for (size_t k = 0; k < blk.states.size(); ++k) {
      poles.emplace_back(-static_cast<double>(k + 1), 0.0);
    }
  }
  return poles;
}

// Expands a short pole template: each block of dimension q_b takes the first
// q_b entries of the template, so e.g. {-1} places every scalar channel of a
// constant disturbance at -1.
inline std::vector<std::complex<double>> poles_from_template(
    const Exosystem& exo, const std::vector<double>& tmpl) {
  for (double p : tmpl) {
    if (!(p < 0.0)) {
      throw ValidationError("pole template entries must be negative, got " +
                            std::to_string(p));
    }
  }
  std::vector<std::complex<double>> poles;
  poles.reserve(static_cast<size_t>(exo.q()));
  for (const auto& blk : exo.blocks()) {
    if (tmpl.size() < blk.states.size()) {
      throw ValidationError("pole template has " +
                            std::to_string(tmpl.size()) +
                            " entries but a block needs " +
                            std::to_string(blk.states.size()));
    }
    for (size_t k = 0; k < blk.states.size(); ++k) {
      poles.emplace_back(tmpl[k], 0.0);
    }
  }
  return poles;
}

}  // namespace neflow
