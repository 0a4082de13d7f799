// Copyright 2026 The hexwalk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Eigenvalues>

#include "hexwalk/coin.hpp"
#include "hexwalk/common.hpp"
#include "hexwalk/disorder.hpp"
#include "hexwalk/lattice.hpp"

namespace hexwalk {

// Translation-invariant band analysis. The walk with per-sublattice coins
// C_A, C_B Fourier-transforms into a 6x6 fiber over the two-torus with zero
// diagonal blocks; its square reduces to a 3x3 symbol.

inline Mat3 shift_block_ba(double k1, double k2) {
  Mat3 m = Mat3::Zero();
  m(0, 0) = std::exp(cd(0, k1 - k2));
  m(1, 1) = 1;
  m(2, 2) = std::exp(cd(0, -k2));
  return m;
}

inline Mat3 shift_block_ab(double k1, double k2) {
  Mat3 m = Mat3::Zero();
  m(0, 0) = std::exp(cd(0, k2));
  m(1, 1) = std::exp(cd(0, k2 - k1));
  m(2, 2) = 1;
  return m;
}

// 6x6 fiber in the basis order (f1 x e1..e3, f2 x e1..e3).
inline Mat6 bloch_matrix(double k1, double k2, const Mat3& c_a, const Mat3& c_b) {
  require_unitary(c_a, 1e-10, "bloch_matrix (C_A)");
  require_unitary(c_b, 1e-10, "bloch_matrix (C_B)");
  Mat6 u = Mat6::Zero();
  u.topRightCorner<3, 3>() = shift_block_ba(k1, k2) * c_b;
  u.bottomLeftCorner<3, 3>() = shift_block_ab(k1, k2) * c_a;
  return u;
}

// 3x3 reduced symbol S_BA(k) C_B S_AB(k) C_A. With `normalize` the matrix is
// scaled by a fixed k-independent cube-root phase so its determinant is 1;
// the phase (principal branch) is returned through `normalization` if given.
inline Mat3 reduced_symbol(double k1, double k2, const Mat3& c_a, const Mat3& c_b,
                           bool normalize = false, cd* normalization = nullptr) {
  Mat3 v = shift_block_ba(k1, k2) * c_b * shift_block_ab(k1, k2) * c_a;
  cd phase(1, 0);
  if (normalize) {
    cd det = (c_b * c_a).determinant();  // the shift blocks have det 1
    phase = std::exp(cd(0, -std::arg(det) / 3.0));
    v *= phase;
  }
  if (normalization) *normalization = phase;
  return v;
}

// Eigenphases of the 6x6 fiber, sorted ascending in [0, 2*pi).
inline std::array<double, 6> bands(double k1, double k2, const Mat3& c_a,
                                   const Mat3& c_b) {
  Mat6 u = bloch_matrix(k1, k2, c_a, c_b);
  Eigen::ComplexEigenSolver<Mat6> es(u, /*computeEigenvectors=*/false);
  std::array<double, 6> out;
  for (int i = 0; i < 6; ++i) {
    double a = std::arg(es.eigenvalues()(i));
    if (a < 0) a += kTwoPi;
    if (a >= kTwoPi) a -= kTwoPi;
    out[static_cast<std::size_t>(i)] = a;
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Discriminant of x^3 - t x^2 + conj(t) x - 1, the characteristic polynomial
// of a normalized symbol with trace t. Real by construction.
inline double trace_discriminant(cd t) {
  double a2 = std::norm(t);                     // |t|^2
  double re_t3 = (t * t * t).real();
  return a2 * a2 + 18.0 * a2 - 27.0 - 8.0 * re_t3;
}

// Two bands agree at k iff the normalized trace sits on the boundary of the
// SU(3) trace set, equivalently iff the cubic has a repeated root. Decided by
// |discriminant| <= tol (default 1e-9, a documented knob).
inline bool band_touch_test(cd t, double tol = 1e-9) {
  return std::abs(trace_discriminant(t)) <= tol;
}

// Exactly solvable 6x6 block of the fully localized walk. The four phases
// follow the standard labeling: w0 on the A site, w1/w2/w3 on the three
// B sites of the block (in generator order b5, b6, b4).
struct LocalizedBlock {
  Mat6 matrix;
  cd theta;  // exp(i(3*w0 + w1 + w2 + w3)); matrix^6 == theta * I
};

inline LocalizedBlock localized_block(double w0, double w1, double w2, double w3) {
  // Basis order: b1..b3 = A-site coins 1..3, b4 = B(j,k) coin 3,
  // b5 = B(j,k-1) coin 1, b6 = B(j+1,k-1) coin 2. The localized coin routes
  // the six elements around a single cycle:
  //   b1 -> b4 (phase w3), b4 -> b2 (w0), b2 -> b5 (w1),
  //   b5 -> b3 (w0), b3 -> b6 (w2), b6 -> b1 (w0).
  LocalizedBlock out;
  out.matrix = Mat6::Zero();
  auto arc = [&](int from, int to, double w) {
    out.matrix(to - 1, from - 1) = std::exp(cd(0, w));
  };
  arc(1, 4, w3);
  arc(4, 2, w0);
  arc(2, 5, w1);
  arc(5, 3, w0);
  arc(3, 6, w2);
  arc(6, 1, w0);
  out.theta = std::exp(cd(0, 3 * w0 + w1 + w2 + w3));
  return out;
}

// Theta of one invariant block under a given disorder field: the product of
// the six arc phases around the block cycle. Works for both disorder modes.
inline cd block_theta(const BlockId& id, const DisorderField& dis) {
  const Site a{id.j, id.k, Sub::A};
  const Site b_down{id.j, id.k - 1, Sub::B};   // carries coin 1
  const Site b_right{id.j + 1, id.k - 1, Sub::B};  // carries coin 2
  const Site b_up{id.j, id.k, Sub::B};         // carries coin 3
  double total = dis.phase(b_up, 3) + dis.phase(a, 2) + dis.phase(b_down, 1) +
                 dis.phase(a, 3) + dis.phase(b_right, 2) + dis.phase(a, 1);
  return std::exp(cd(0, total));
}

// Normalized length of the arc cut out of the unit circle by the closed ball
// B_eta(z), from the law of cosines. Zero when the ball misses the circle.
inline double arc_length_fraction(cd z, double eta) {
  double r = std::abs(z);
  if (r == 0.0) return eta >= 1.0 ? 1.0 : 0.0;
  double c = (1.0 + r * r - eta * eta) / (2.0 * r);
  if (c >= 1.0) return 0.0;
  if (c <= -1.0) return 1.0;
  return std::acos(c) / kPi;
}

// Closed-form probability that the fully localized box operator has spectrum
// within eta of z: 1 - (1 - 6*l)^vol with l the arc fraction. Valid while
// l < 1/6 (six preimage arcs of the sixth-root map stay disjoint).
inline double gap_probability_exact(cd z, double eta, const BoxSpec& box) {
  if (!(eta > 0.0 && eta < 1.0))
    throw contract_error("gap_probability_exact: eta must be in (0, 1)");
  if (std::abs(std::abs(z) - 1.0) == 0.0)
    throw contract_error("gap_probability_exact: |z| must differ from 1");
  double l = arc_length_fraction(z, eta);
  if (l >= 1.0 / 6.0)
    throw contract_error("gap_probability_exact: arc fraction >= 1/6, outside "
                         "the closed-form regime");
  double vol = static_cast<double>(volume(box));
  return 1.0 - std::pow(1.0 - 6.0 * l, vol);
}

struct GapEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  long samples = 0;
};

// Monte Carlo frequency of dist(z, spectrum) <= eta for the fully localized
// walk on the box. Spectra are assembled blockwise from the block phases, so
// no eigensolve is needed. The localized coin is implied.
inline GapEstimate gap_probability_mc(cd z, double eta, const BoxSpec& box,
                                      long samples, std::uint64_t seed,
                                      DisorderMode mode = DisorderMode::correlated) {
  if (samples < 100)
    throw contract_error("gap_probability_mc: need at least 100 samples");
  const auto blocks = box_blocks(box);
  long hits = 0;
  for (long s = 0; s < samples; ++s) {
    DisorderField dis(mode, seed, static_cast<std::uint64_t>(s));
    bool hit = false;
    for (const BlockId& id : blocks) {
      cd theta = block_theta(id, dis);
      // Eigenvalues are the six sixth roots of theta.
      double base = std::arg(theta) / 6.0;
      for (int m = 0; m < 6 && !hit; ++m) {
        cd lambda = std::exp(cd(0, base + m * (kTwoPi / 6.0)));
        if (std::abs(lambda - z) <= eta) hit = true;
      }
      if (hit) break;
    }
    if (hit) ++hits;
  }
  GapEstimate out;
  out.samples = samples;
  out.estimate = static_cast<double>(hits) / static_cast<double>(samples);
  out.stderr_ = std::sqrt(out.estimate * (1.0 - out.estimate) /
                          static_cast<double>(samples));
  return out;
}

// Max deviation of the reduced-symbol trace from its value at k = 0 over an
// n x n grid; a flat band family has constant trace.
inline double trace_flatness(const Mat3& c_a, const Mat3& c_b, int n = 64) {
  cd t0 = reduced_symbol(0, 0, c_a, c_b).trace();
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double k1 = kTwoPi * i / n;
      double k2 = kTwoPi * j / n;
      worst = std::max(worst,
                       std::abs(reduced_symbol(k1, k2, c_a, c_b).trace() - t0));
    }
  return worst;
}

inline bool is_flat_band(const Mat3& c_a, const Mat3& c_b, int n = 64,
                         double tol = 1e-10) {
  return trace_flatness(c_a, c_b, n) <= tol;
}

}  // namespace hexwalk
