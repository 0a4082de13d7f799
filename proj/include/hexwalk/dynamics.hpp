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

#include <cstdint>
#include <vector>

#include "hexwalk/common.hpp"
#include "hexwalk/greens.hpp"
#include "hexwalk/walk.hpp"

namespace hexwalk {

// Repeated sparse application W^n psi0 with a norm-drift contract.
inline VecX evolve(const WalkMatrix& w, const VecX& psi0, int n) {
  if (n < 0) throw contract_error("evolve: n must be >= 0");
  VecX psi = psi0;
  double norm0 = psi0.norm();
  for (int step = 0; step < n; ++step) {
    psi = w.matrix * psi;
    if (std::abs(psi.norm() - norm0) > 1e-10 * (step + 1))
      throw numerical_error("evolve: norm drift beyond contract");
  }
  return psi;
}

// max over 0 <= n <= n_max of |<x| W^n y>|, probing negative powers through
// the adjoint walk; the larger of the two one-sided sups is returned.
inline double sup_transition(const WalkMatrix& w, const BasisElement& x,
                             const BasisElement& y, int n_max) {
  if (n_max < 1) throw contract_error("sup_transition: n_max must be >= 1");
  const int xi = w.basis->index_of(x);
  const int yi = w.basis->index_of(y);
  const SpMat adjoint = w.matrix.adjoint();
  double best = 0.0;
  for (const SpMat* op : {&w.matrix, &adjoint}) {
    VecX psi = VecX::Zero(w.dim());
    psi(yi) = 1;
    best = std::max(best, std::abs(psi(xi)));
    for (int n = 1; n <= n_max; ++n) {
      psi = (*op) * psi;
      best = std::max(best, std::abs(psi(xi)));
    }
  }
  return best;
}

struct DynLocRequest {
  int max_distance = 12;
  int min_distance = 1;
  int n_max = 200;
  long samples = 100;
  std::uint64_t seed = 0;
  DisorderMode mode = DisorderMode::decorrelated;
  int dir_even = 2;
  int dir_odd = 3;
  int coin_index = 1;
  double guard_threshold = 1e-12;  // abort if this much amplitude nears the ring
};

namespace detail {

// Indices of basis elements within graph distance 2 of the pinned ring. The
// ring reflects rather than absorbs, so any amplitude arriving there would
// contaminate the run.
inline std::vector<int> guard_zone(const BasisIndex& basis) {
  std::unordered_set<Site, SiteHash> zone;
  for (const Site& s : boundary_coin_sites(basis.box())) {
    for (const auto& [site, d] : bfs_distances(s, 2)) zone.insert(site);
  }
  std::vector<int> idx;
  const auto& elems = basis.elements();
  for (std::size_t i = 0; i < elems.size(); ++i)
    if (zone.count(elems[i].site)) idx.push_back(static_cast<int>(i));
  return idx;
}

}  // namespace detail

// Monte Carlo mean of the truncated transition sup versus distance along a
// ray, with the same log-linear fit as the Green-function profiles. Runs in
// decorrelated mode by default. Aborts if amplitude reaches the ring guard.
inline DecayProfile dynloc_profile(const DynLocRequest& req, const CoinField& coins,
                                   const BoxSpec& ambient, unsigned threads = 1) {
  if (req.samples < 1) throw contract_error("dynloc_profile: samples >= 1");
  auto basis = std::make_shared<BasisIndex>(ambient);
  const BasisElement source{ambient.origin, req.coin_index};
  const int src = basis->index_of(source);

  std::vector<int> distances;
  std::vector<int> targets;
  for (int d = req.min_distance; d <= req.max_distance; ++d) {
    Site t = ray_site(ambient.origin, d, req.dir_even, req.dir_odd);
    targets.push_back(basis->index_of(BasisElement{t, req.coin_index}));
    distances.push_back(d);
  }
  const std::vector<int> guard = detail::guard_zone(*basis);

  const std::size_t n = static_cast<std::size_t>(req.samples);
  std::vector<std::vector<double>> sups(n);
  std::vector<char> contaminated(n, 0);
  parallel_for(n, threads, [&](std::size_t i) {
    DisorderField dis(req.mode, req.seed, static_cast<std::uint64_t>(i));
    const WalkMatrix w = assemble_walk(ambient, coins, dis, basis);
    const SpMat adjoint = w.matrix.adjoint();
    std::vector<double> best(targets.size(), 0.0);
    for (const SpMat* op : {&w.matrix, &adjoint}) {
      VecX psi = VecX::Zero(w.dim());
      psi(src) = 1;
      for (std::size_t t = 0; t < targets.size(); ++t)
        best[t] = std::max(best[t], std::abs(psi(targets[t])));
      for (int step = 1; step <= req.n_max; ++step) {
        psi = (*op) * psi;
        for (std::size_t t = 0; t < targets.size(); ++t)
          best[t] = std::max(best[t], std::abs(psi(targets[t])));
        for (int g : guard)
          if (std::abs(psi(g)) >= req.guard_threshold) {
            contaminated[i] = 1;
            return;
          }
      }
    }
    sups[i] = std::move(best);
  });
  for (std::size_t i = 0; i < n; ++i)
    if (contaminated[i])
      throw numerical_error(
          "dynloc_profile: amplitude reached the ambient ring guard; enlarge "
          "the box");

  DecayProfile profile;
  std::vector<double> xs, ys;
  bool any_nonzero = false;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    double sum = 0, sum2 = 0;
    bool all_zero = true;
    for (std::size_t i = 0; i < n; ++i) {
      double v = sups[i][t];
      sum += v;
      sum2 += v * v;
      if (v != 0.0) all_zero = false;
    }
    DecayPoint p;
    p.distance = distances[t];
    p.moment.samples = static_cast<long>(n);
    p.moment.mean = sum / static_cast<double>(n);
    double var = std::max(0.0, sum2 / static_cast<double>(n) -
                                   p.moment.mean * p.moment.mean);
    p.moment.stderr_ = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    p.moment.exact_zero = all_zero;
    if (!all_zero && p.moment.mean > 0) {
      p.used_in_fit = true;
      xs.push_back(static_cast<double>(p.distance));
      ys.push_back(std::log(p.moment.mean));
      any_nonzero = true;
    }
    profile.points.push_back(p);
  }
  if (!any_nonzero) {
    profile.exact_localization = true;
    return profile;
  }
  if (xs.size() < 4)
    throw numerical_error("dynloc_profile: fewer than 4 usable distances");
  profile.fit = fit_log_linear(xs, ys);
  return profile;
}

struct SpreadPoint {
  int step = 0;
  double mean_displacement = 0.0;
  double second_moment = 0.0;
};

// Graph-distance displacement statistics of |psi_n|^2 relative to the
// distribution's starting site.
inline std::vector<SpreadPoint> spread_moments(const WalkMatrix& w,
                                               const BasisElement& start,
                                               int n_max) {
  const auto& elems = w.basis->elements();
  const int radius = 2 * (w.ambient.l1 + w.ambient.l2) + 4;
  auto dist_map = bfs_distances(start.site, radius);
  std::vector<double> dist(elems.size(), 0.0);
  for (std::size_t i = 0; i < elems.size(); ++i) {
    auto it = dist_map.find(elems[i].site);
    if (it == dist_map.end())
      throw numerical_error("spread_moments: distance map does not cover box");
    dist[i] = static_cast<double>(it->second);
  }

  std::vector<SpreadPoint> out;
  VecX psi = VecX::Zero(w.dim());
  psi(w.basis->index_of(start)) = 1;
  for (int n = 0; n <= n_max; ++n) {
    if (n > 0) psi = w.matrix * psi;
    SpreadPoint p;
    p.step = n;
    for (int i = 0; i < w.dim(); ++i) {
      double weight = std::norm(psi(i));
      p.mean_displacement += weight * dist[static_cast<std::size_t>(i)];
      p.second_moment += weight * dist[static_cast<std::size_t>(i)] *
                         dist[static_cast<std::size_t>(i)];
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace hexwalk
