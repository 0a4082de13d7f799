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

#include <optional>
#include <string>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "hexwalk/common.hpp"
#include "hexwalk/lattice.hpp"
#include "hexwalk/rng.hpp"

namespace hexwalk {

// The fully localized coin: permutation matrix sending e1->e3, e2->e1, e3->e2.
inline Mat3 coin_c0() {
  Mat3 m = Mat3::Zero();
  m(0, 1) = 1;
  m(1, 2) = 1;
  m(2, 0) = 1;
  return m;
}

// The other localizing permutation, cycling e1->e2, e2->e3, e3->e1.
inline Mat3 coin_c0_tilde() {
  Mat3 m = Mat3::Zero();
  m(1, 0) = 1;
  m(2, 1) = 1;
  m(0, 2) = 1;
  return m;
}

inline Mat3 coin_identity() { return Mat3::Identity(); }

inline Mat3 coin_swap12() {
  Mat3 m = Mat3::Zero();
  m(0, 1) = 1;
  m(1, 0) = 1;
  m(2, 2) = 1;
  return m;
}

// One-parameter family that meets the localized coin entrywise at theta = 0
// while carrying continuous spectrum for generic theta.
inline Mat3 coin_theta(double theta) {
  Mat3 m = Mat3::Zero();
  m(0, 1) = std::cos(theta);
  m(0, 2) = std::sin(theta);
  m(1, 1) = -std::sin(theta);
  m(1, 2) = std::cos(theta);
  m(2, 0) = 1;
  return m;
}

// Entrywise max-abs distance between coin matrices.
inline double coin_distance(const Mat3& a, const Mat3& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// Assignment of a coin matrix to every site: per-sublattice defaults plus
// optional per-site overrides. Every stored matrix is validated as unitary.
class CoinField {
 public:
  explicit CoinField(const Mat3& constant) : CoinField(constant, constant) {}

  CoinField(const Mat3& on_a, const Mat3& on_b) : default_a_(on_a), default_b_(on_b) {
    require_unitary(on_a, 1e-12, "CoinField");
    require_unitary(on_b, 1e-12, "CoinField");
  }

  void set(const Site& site, const Mat3& m) {
    require_unitary(m, 1e-12, "CoinField::set");
    overrides_[site] = m;
  }

  const Mat3& at(const Site& site) const {
    if (!overrides_.empty()) {
      auto it = overrides_.find(site);
      if (it != overrides_.end()) return it->second;
    }
    return site.sub == Sub::A ? default_a_ : default_b_;
  }

  const Mat3& default_a() const { return default_a_; }
  const Mat3& default_b() const { return default_b_; }
  bool is_constant() const {
    return overrides_.empty() && coin_distance(default_a_, default_b_) == 0.0;
  }
  bool has_overrides() const { return !overrides_.empty(); }
  std::size_t override_count() const { return overrides_.size(); }

  CoinField translated(const Site& v) const {
    CoinField out(default_a_, default_b_);
    for (const auto& [site, m] : overrides_)
      out.overrides_.emplace(hexwalk::translated(site, v), m);
    return out;
  }

  // Stable identity string used as provenance in matrix metadata.
  std::string label;

 private:
  Mat3 default_a_;
  Mat3 default_b_;
  std::unordered_map<Site, Mat3, SiteHash> overrides_;
};

// Haar-ish random unitary: QR of a complex Gaussian matrix with phase fix.
inline Mat3 random_unitary(CounterRng& rng) {
  Mat3 g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g(i, j) = cd(rng.normal(), rng.normal());
  Eigen::HouseholderQR<Mat3> qr(g);
  Mat3 q = qr.householderQ();
  Mat3 r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < 3; ++i) {
    cd d = r(i, i);
    q.col(i) *= (std::abs(d) > 0 ? d / std::abs(d) : cd(1, 0));
  }
  return q;
}

// Unitary at a prescribed entrywise max distance from the localized coin.
// The coin is c0 * exp(t K) for a random anti-Hermitian K; t is rescaled by
// bisection until the distance is within `tol` of `radius`.
inline Mat3 coin_near_c0(double radius, std::uint64_t seed, double tol = 1e-6) {
  if (radius < 0 || radius >= 2.0)
    throw contract_error("coin_near_c0: radius must be in [0, 2)");
  const Mat3 c0 = coin_c0();
  if (radius == 0) return c0;

  CounterRng rng(seed, RngStream::coin_sampler);
  Mat3 h;  // Hermitian generator, K = i*h
  for (int i = 0; i < 3; ++i) {
    h(i, i) = cd(rng.normal(), 0.0);
    for (int j = i + 1; j < 3; ++j) {
      h(i, j) = cd(rng.normal(), rng.normal());
      h(j, i) = std::conj(h(i, j));
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(h);
  const Mat3 v = es.eigenvectors();
  const Eigen::Vector3d lam = es.eigenvalues();

  auto at = [&](double t) {
    Eigen::Vector3cd ph;
    for (int i = 0; i < 3; ++i) ph(i) = std::exp(cd(0.0, t * lam(i)));
    Mat3 u = v * ph.asDiagonal() * v.adjoint();
    return (c0 * u).eval();
  };
  auto dist = [&](double t) { return coin_distance(at(t), c0); };

  double hi = 1.0;
  while (dist(hi) < radius) {
    hi *= 2.0;
    if (hi > 64.0)
      throw numerical_error("coin_near_c0: generator cannot reach radius");
  }
  double lo = 0.0, mid = hi;
  for (int iter = 0; iter < 200; ++iter) {
    mid = 0.5 * (lo + hi);
    double d = dist(mid);
    if (std::abs(d - radius) <= tol * 0.5) break;
    (d < radius ? lo : hi) = mid;
  }
  Mat3 out = at(mid);
  if (std::abs(coin_distance(out, c0) - radius) > tol)
    throw numerical_error("coin_near_c0: bisection failed to hit radius");
  return out;
}

}  // namespace hexwalk
