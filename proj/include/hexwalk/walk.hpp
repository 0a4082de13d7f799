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

#include <cstdio>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/SVD>

#include "hexwalk/coin.hpp"
#include "hexwalk/common.hpp"
#include "hexwalk/disorder.hpp"
#include "hexwalk/lattice.hpp"

namespace hexwalk {

// Shared index of the interior basis of a box, in the canonical order.
class BasisIndex {
 public:
  explicit BasisIndex(const BoxSpec& box) : box_(box), elements_(box_interior(box)) {
    lookup_.reserve(elements_.size());
    for (std::size_t i = 0; i < elements_.size(); ++i)
      lookup_.emplace(elements_[i], static_cast<int>(i));
  }

  const BoxSpec& box() const { return box_; }
  const std::vector<BasisElement>& elements() const { return elements_; }
  int size() const { return static_cast<int>(elements_.size()); }

  int index_of(const BasisElement& b) const {
    auto it = lookup_.find(b);
    if (it == lookup_.end())
      throw contract_error("BasisIndex: element outside the box interior");
    return it->second;
  }

  bool contains(const BasisElement& b) const { return lookup_.count(b) != 0; }

 private:
  BoxSpec box_;
  std::vector<BasisElement> elements_;
  std::unordered_map<BasisElement, int, BasisElementHash> lookup_;
};

// Exactly-unitary finite walk matrix over the interior basis of an ambient
// box, with its construction inputs kept for contract checks.
struct WalkMatrix {
  SpMat matrix;
  std::shared_ptr<const BasisIndex> basis;
  BoxSpec ambient;
  std::optional<BoxSpec> inner;          // extra pinned ring, if any
  std::shared_ptr<const CoinField> coins;
  std::optional<DisorderField> disorder;

  int dim() const { return static_cast<int>(matrix.rows()); }

  double unitarity_defect() const {
    SpMat gram = SpMat(matrix.adjoint()) * matrix;
    double worst = 0.0;
    for (int c = 0; c < gram.outerSize(); ++c)
      for (SpMat::InnerIterator it(gram, c); it; ++it) {
        cd expect = it.row() == it.col() ? cd(1, 0) : cd(0, 0);
        worst = std::max(worst, std::abs(it.value() - expect));
      }
    return worst;
  }
};

namespace detail {

// Column action of the one-step walk on basis element (x, e_j): apply the
// local coin, then shift each coin component, then the target-site phase.
template <typename Emit>
void walk_column(const Site& x, int j, const Mat3& coin,
                 const std::optional<DisorderField>& disorder, Emit&& emit) {
  for (int i = 1; i <= 3; ++i) {
    cd amp = coin(i - 1, j - 1);
    if (amp == cd(0, 0)) continue;
    Site target = shift_target(x, i);
    if (disorder) amp *= disorder->factor(target, i);
    emit(BasisElement{target, i}, amp);
  }
}

inline bool site_in_ring(const Site& s, const BoxSpec& box) {
  if (s.sub != Sub::B) return false;
  int j = s.j - box.origin.j;
  int k = s.k - box.origin.k;
  return (k == box.l2 - 1 && j >= -box.l1 && j <= box.l1 - 1) ||
         (k == -box.l2 - 1 && j >= -box.l1 + 1 && j <= box.l1) ||
         (j == box.l1 && k >= -box.l2 && k <= box.l2 - 2) ||
         (j == -box.l1 && k >= -box.l2 && k <= box.l2 - 2);
}

inline WalkMatrix build_walk(const BoxSpec& ambient,
                             std::shared_ptr<const CoinField> coins,
                             const std::optional<DisorderField>& disorder,
                             const std::optional<BoxSpec>& inner,
                             std::shared_ptr<const BasisIndex> basis) {
  if (!basis) basis = std::make_shared<BasisIndex>(ambient);
  const Mat3 c0 = coin_c0();
  const auto& elems = basis->elements();

  std::vector<Eigen::Triplet<cd>> triplets;
  triplets.reserve(elems.size() * 3);
  for (std::size_t col = 0; col < elems.size(); ++col) {
    const BasisElement& src = elems[col];
    const Mat3* coin = &coins->at(src.site);
    if (site_in_ring(src.site, ambient)) coin = &c0;
    else if (inner && site_in_ring(src.site, *inner)) coin = &c0;
    walk_column(src.site, src.coin, *coin, disorder,
                [&](const BasisElement& dst, cd amp) {
                  // Pinned rings make the interior invariant, so every image
                  // element must resolve within the basis.
                  triplets.emplace_back(basis->index_of(dst),
                                        static_cast<int>(col), amp);
                });
  }

  WalkMatrix w;
  w.matrix.resize(basis->size(), basis->size());
  w.matrix.setFromTriplets(triplets.begin(), triplets.end());
  w.matrix.makeCompressed();
  w.basis = std::move(basis);
  w.ambient = ambient;
  w.inner = inner;
  w.coins = std::move(coins);
  w.disorder = disorder;
  return w;
}

}  // namespace detail

// Matrix of the one-step walk on the ambient box: coins are pinned to the
// localized coin on the ambient boundary ring, which decouples the interior
// from the complement and keeps the truncation exactly unitary. No disorder
// means unit phases.
inline WalkMatrix assemble_walk(const BoxSpec& ambient, const CoinField& coins,
                                const std::optional<DisorderField>& disorder = {},
                                std::shared_ptr<const BasisIndex> basis = {}) {
  return detail::build_walk(ambient, std::make_shared<CoinField>(coins), disorder,
                            std::nullopt, std::move(basis));
}

// As assemble_walk, but with coins additionally pinned on the boundary ring
// of `inner`. The result is block-diagonal with respect to the inner box
// partition. `inner` must sit inside the ambient interior with at least two
// blocks of margin in every direction.
inline WalkMatrix restrict_box(const BoxSpec& ambient, const CoinField& coins,
                               const std::optional<DisorderField>& disorder,
                               const BoxSpec& inner,
                               std::shared_ptr<const BasisIndex> basis = {}) {
  if (inner != ambient) {  // identical boxes pin the same ring, a no-op
    int dj = inner.origin.j - ambient.origin.j;
    int dk = inner.origin.k - ambient.origin.k;
    bool fits = dj - inner.l1 - 2 >= -ambient.l1 &&
                dj + inner.l1 + 1 <= ambient.l1 - 1 &&
                dk - inner.l2 - 2 >= -ambient.l2 &&
                dk + inner.l2 + 1 <= ambient.l2 - 1;
    if (!fits)
      throw size_error("restrict_box: inner box does not fit in the ambient "
                       "interior with a two-block margin");
  }
  return detail::build_walk(ambient, std::make_shared<CoinField>(coins), disorder,
                            inner, std::move(basis));
}

// Schur bound sqrt(max row sum * max column sum) >= spectral norm.
inline double schur_bound(const SpMat& m) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(m.rows());
  Eigen::VectorXd col = Eigen::VectorXd::Zero(m.cols());
  for (int c = 0; c < m.outerSize(); ++c)
    for (SpMat::InnerIterator it(m, c); it; ++it) {
      double a = std::abs(it.value());
      row(it.row()) += a;
      col(it.col()) += a;
    }
  double xi = m.rows() ? row.maxCoeff() : 0.0;
  double eta = m.cols() ? col.maxCoeff() : 0.0;
  return std::sqrt(xi * eta);
}

// Spectral norm by power iteration on m^* m (relative tolerance on the
// Rayleigh quotient). Falls back to a dense SVD if the iteration stalls and
// the matrix is small enough for that to be sane.
inline double spectral_norm(const SpMat& m, double rel_tol = 1e-10,
                            int max_iter = 10000) {
  if (m.nonZeros() == 0) return 0.0;
  const SpMat mh = m.adjoint();
  VecX v = VecX::Ones(m.cols());
  v.normalize();
  double prev = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    VecX w = mh * (m * v);
    double lambda = w.norm();
    if (lambda == 0.0) return 0.0;
    v = w / lambda;
    if (it > 0 && std::abs(lambda - prev) <= rel_tol * lambda)
      return std::sqrt(lambda);
    prev = lambda;
  }
  if (m.rows() < 2000) {
    Eigen::MatrixXcd dense(m);
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(dense);
    return svd.singularValues()(0);
  }
  return std::sqrt(prev);  // best available estimate
}

struct TransitionOperator {
  SpMat matrix;
  double norm = 0.0;        // spectral norm estimate
  double schur = 0.0;       // Schur test upper bound
};

// Difference between the ambient walk and its box restriction. Both inputs
// must share the basis and construction inputs except for the inner pinning.
inline TransitionOperator transition_operator(const WalkMatrix& full,
                                              const WalkMatrix& restricted) {
  if (full.basis != restricted.basis)
    throw contract_error("transition_operator: operands do not share a basis");
  if (full.ambient != restricted.ambient ||
      full.disorder != restricted.disorder || full.inner.has_value() ||
      !restricted.inner.has_value())
    throw contract_error("transition_operator: operands must be an ambient walk "
                         "and its box restriction");
  if (coin_distance(full.coins->default_a(), restricted.coins->default_a()) != 0 ||
      coin_distance(full.coins->default_b(), restricted.coins->default_b()) != 0 ||
      full.coins->override_count() != restricted.coins->override_count())
    throw contract_error("transition_operator: coin fields differ");
  TransitionOperator t;
  t.matrix = full.matrix - restricted.matrix;
  t.matrix.prune([](int, int, const cd& v) { return v != cd(0, 0); });
  t.schur = schur_bound(t.matrix);
  t.norm = spectral_norm(t.matrix);
  return t;
}

// Sparse triplet export with a header carrying the basis ordering metadata.
// Format: one "row col re im" line per stored entry, row-major sorted.
inline void write_triplets(std::ostream& os, const WalkMatrix& w,
                           const std::string& provenance) {
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "# hexwalk sparse v1 dim=%d ambient=%d,%d origin=%d,%d "
                "basis=lex(j,k,sub,coin) %s\n",
                w.dim(), w.ambient.l1, w.ambient.l2, w.ambient.origin.j,
                w.ambient.origin.k, provenance.c_str());
  os << buf;
  struct Entry {
    int r, c;
    cd v;
  };
  std::vector<Entry> entries;
  entries.reserve(w.matrix.nonZeros());
  for (int c = 0; c < w.matrix.outerSize(); ++c)
    for (SpMat::InnerIterator it(w.matrix, c); it; ++it)
      entries.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()),
                         it.value()});
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.r != b.r ? a.r < b.r : a.c < b.c;
  });
  for (const Entry& e : entries) {
    std::snprintf(buf, sizeof(buf), "%d %d %.17g %.17g\n", e.r, e.c,
                  e.v.real(), e.v.imag());
    os << buf;
  }
}

}  // namespace hexwalk
