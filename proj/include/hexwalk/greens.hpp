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
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include "hexwalk/coin.hpp"
#include "hexwalk/common.hpp"
#include "hexwalk/disorder.hpp"
#include "hexwalk/lattice.hpp"
#include "hexwalk/rng.hpp"
#include "hexwalk/walk.hpp"

namespace hexwalk {

inline constexpr int kDirectSolveDimLimit = 20000;

// Resolvent application (W - z)^{-1} rhs with a residual contract of 1e-10
// relative. Direct sparse factorization up to kDirectSolveDimLimit, BiCGSTAB
// with an incomplete-LU preconditioner above. One instance amortizes the
// factorization over many right-hand sides.
class ResolventSolver {
 public:
  ResolventSolver(const SpMat& w, cd z, double rel_residual = 1e-10)
      : op_(w), z_(z), tol_(rel_residual) {
    if (std::abs(std::abs(z) - 1.0) < 1e-6)
      throw contract_error("ResolventSolver: |z| too close to the unit circle");
    op_.setIdentity();
    op_ = w - z * op_;
    op_.makeCompressed();
    if (op_.rows() <= kDirectSolveDimLimit) {
      lu_ = std::make_unique<Eigen::SparseLU<SpMat>>();
      lu_->compute(op_);
      if (lu_->info() != Eigen::Success)
        throw numerical_error("ResolventSolver: sparse factorization failed");
    } else {
      iter_ = std::make_unique<
          Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<cd>>>();
      iter_->setTolerance(rel_residual * 1e-2);
      iter_->setMaxIterations(20000);
      iter_->compute(op_);
      if (iter_->info() != Eigen::Success)
        throw numerical_error("ResolventSolver: preconditioner failed");
    }
  }

  VecX solve(const VecX& rhs) const {
    VecX u = lu_ ? lu_->solve(rhs).eval() : iter_->solve(rhs).eval();
    double residual = (op_ * u - rhs).norm();
    double scale = rhs.norm();
    if (!(residual <= tol_ * (scale > 0 ? scale : 1.0)))
      throw numerical_error("ResolventSolver: residual " +
                            std::to_string(residual) + " exceeds contract");
    return u;
  }

  // Column of the resolvent at basis index `col`.
  VecX column(int col) const {
    VecX rhs = VecX::Zero(op_.rows());
    rhs(col) = cd(1, 0);
    return solve(rhs);
  }

  cd z() const { return z_; }

 private:
  SpMat op_;
  cd z_;
  double tol_;
  std::unique_ptr<Eigen::SparseLU<SpMat>> lu_;
  std::unique_ptr<Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<cd>>> iter_;
};

// Single matrix element <x| (W - z)^{-1} |y>.
inline cd green_element(const WalkMatrix& w, cd z, const BasisElement& x,
                        const BasisElement& y) {
  ResolventSolver solver(w.matrix, z);
  VecX u = solver.column(w.basis->index_of(y));
  return u(w.basis->index_of(x));
}

// Straight ray of sites whose graph distance from `origin` grows by one per
// step: alternate two shift directions. The pairs (1,3), (2,1) and (3,2)
// compose to the identity and are rejected. The default pair walks the
// armchair line through A(j, 0).
inline Site ray_site(const Site& origin, int distance, int dir_even = 2,
                     int dir_odd = 3) {
  Site probe = shift_target(shift_target(origin, dir_even), dir_odd);
  if (probe == origin)
    throw contract_error("ray_site: direction pair composes to the identity");
  Site s = origin;
  for (int i = 0; i < distance; ++i)
    s = shift_target(s, i % 2 == 0 ? dir_even : dir_odd);
  return s;
}

struct MomentEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  long samples = 0;
  bool exact_zero = false;  // every sampled value was exactly 0
};

// Experiment description for fractional-moment estimation: moments of
// |<x_d|(U_w - z)^{-1}|y>|^s for targets x_d against a fixed source y.
struct GreensQuery {
  cd z;
  BasisElement source;
  std::vector<BasisElement> targets;
  double s = 0.2;
  long samples = 100;
  std::uint64_t seed = 0;
  DisorderMode mode = DisorderMode::decorrelated;

  void validate() const {
    if (std::abs(std::abs(z) - 1.0) < 1e-6)
      throw contract_error("GreensQuery: | |z| - 1 | must be >= 1e-6");
    if (!(s > 0.0 && s < 1.0))
      throw contract_error("GreensQuery: s must be in (0, 1)");
    if (samples < 1) throw contract_error("GreensQuery: samples must be >= 1");
  }
};

// Monte Carlo fractional moments over independent disorder fields. One
// disorder sample = one factorization = one solve. Failed solves are skipped
// and counted; more than 1% skips aborts the run.
inline std::vector<MomentEstimate> fractional_moment(const GreensQuery& query,
                                                     const CoinField& coins,
                                                     const BoxSpec& ambient,
                                                     unsigned threads = 1,
                                                     long* skipped_out = nullptr) {
  query.validate();
  auto basis = std::make_shared<BasisIndex>(ambient);
  const int src = basis->index_of(query.source);
  std::vector<int> tgt;
  tgt.reserve(query.targets.size());
  for (const BasisElement& t : query.targets) tgt.push_back(basis->index_of(t));

  const std::size_t n = static_cast<std::size_t>(query.samples);
  std::vector<std::vector<double>> values(n);
  std::vector<char> ok(n, 0);
  parallel_for(n, threads, [&](std::size_t i) {
    try {
      DisorderField dis(query.mode, query.seed, static_cast<std::uint64_t>(i));
      WalkMatrix w = assemble_walk(ambient, coins, dis, basis);
      ResolventSolver solver(w.matrix, query.z);
      VecX col = solver.column(src);
      std::vector<double> row(tgt.size());
      for (std::size_t t = 0; t < tgt.size(); ++t)
        row[t] = std::pow(std::abs(col(tgt[t])), query.s);
      values[i] = std::move(row);
      ok[i] = 1;
    } catch (const numerical_error&) {
      ok[i] = 0;
    }
  });

  long used = 0, skipped = 0;
  for (std::size_t i = 0; i < n; ++i) (ok[i] ? used : skipped)++;
  if (skipped_out) *skipped_out = skipped;
  if (skipped * 100 > static_cast<long>(n))
    throw numerical_error("fractional_moment: more than 1% of samples skipped");
  if (used == 0) throw numerical_error("fractional_moment: no usable samples");

  std::vector<MomentEstimate> out(tgt.size());
  for (std::size_t t = 0; t < tgt.size(); ++t) {
    double sum = 0.0, sum2 = 0.0;
    bool all_zero = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!ok[i]) continue;
      double v = values[i][t];
      sum += v;
      sum2 += v * v;
      if (v != 0.0) all_zero = false;
    }
    MomentEstimate& m = out[t];
    m.samples = used;
    m.mean = sum / used;
    double var = std::max(0.0, sum2 / used - m.mean * m.mean);
    m.stderr_ = used > 1 ? std::sqrt(var / (used - 1)) : 0.0;
    m.exact_zero = all_zero;
  }
  return out;
}

struct LinFit {
  double intercept = 0.0;  // log-amplitude log(c)
  double slope = 0.0;      // -g
  double r2 = 0.0;
  double rate() const { return -slope; }
  double amplitude() const { return std::exp(intercept); }
};

inline LinFit fit_log_linear(const std::vector<double>& xs,
                             const std::vector<double>& log_ys) {
  if (xs.size() != log_ys.size() || xs.size() < 2)
    throw contract_error("fit_log_linear: need at least two points");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += log_ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * log_ys[i];
  }
  LinFit fit;
  double denom = n * sxx - sx * sx;
  if (denom == 0) throw numerical_error("fit_log_linear: degenerate abscissae");
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0, ss_tot = 0, mean_y = sy / n;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double pred = fit.intercept + fit.slope * xs[i];
    ss_res += (log_ys[i] - pred) * (log_ys[i] - pred);
    ss_tot += (log_ys[i] - mean_y) * (log_ys[i] - mean_y);
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

struct DecayPoint {
  int distance = 0;
  MomentEstimate moment;
  bool used_in_fit = false;
};

struct DecayProfile {
  std::vector<DecayPoint> points;
  std::optional<LinFit> fit;
  bool exact_localization = false;  // every cross-distance moment exactly 0
};

struct DecayRequest {
  double s = 0.2;
  cd z = cd(0.95, 0);
  int max_distance = 12;
  int min_distance = 1;
  long samples = 100;
  std::uint64_t seed = 0;
  DisorderMode mode = DisorderMode::decorrelated;
  int dir_even = 2;
  int dir_odd = 3;
  int coin_index = 1;  // coin slot used for both source and targets
};

// Fractional moments along a lattice ray with a log-linear fit. The ambient
// box must keep every target at graph distance >= 5 from the pinned ring.
inline DecayProfile decay_profile(const DecayRequest& req, const CoinField& coins,
                                  const BoxSpec& ambient, unsigned threads = 1) {
  GreensQuery query;
  query.z = req.z;
  query.s = req.s;
  query.samples = req.samples;
  query.seed = req.seed;
  query.mode = req.mode;
  query.source = BasisElement{ambient.origin, req.coin_index};

  std::unordered_set<Site, SiteHash> ring;
  for (const Site& s : boundary_coin_sites(ambient)) ring.insert(s);
  std::vector<int> distances;
  for (int d = req.min_distance; d <= req.max_distance; ++d) {
    Site target = ray_site(ambient.origin, d, req.dir_even, req.dir_odd);
    // Margin contract against the pinned ring.
    for (const auto& [near, dist] : bfs_distances(target, 4))
      if (ring.count(near))
        throw size_error("decay_profile: target at distance " +
                         std::to_string(d) + " is within 5 sites of the ring");
    query.targets.push_back(BasisElement{target, req.coin_index});
    distances.push_back(d);
  }

  auto moments = fractional_moment(query, coins, ambient, threads);

  DecayProfile profile;
  std::vector<double> xs, ys;
  bool any_nonzero = false;
  for (std::size_t i = 0; i < moments.size(); ++i) {
    DecayPoint p;
    p.distance = distances[i];
    p.moment = moments[i];
    if (!moments[i].exact_zero && moments[i].mean > 0.0) {
      any_nonzero = true;
      p.used_in_fit = true;
      xs.push_back(static_cast<double>(p.distance));
      ys.push_back(std::log(moments[i].mean));
    }
    profile.points.push_back(p);
  }
  if (!any_nonzero) {
    profile.exact_localization = true;  // degenerate profile, no fit
    return profile;
  }
  if (xs.size() < 4)
    throw numerical_error("decay_profile: fewer than 4 usable distances");
  profile.fit = fit_log_linear(xs, ys);
  return profile;
}

struct BoxedScanRow {
  BoxSpec box;
  double coin_radius = 0.0;
  double max_moment = 0.0;  // max mean moment over sampled cross-block pairs
  double ratio = 0.0;       // max_moment * |L|^a
  long pairs = 0;
};

// For each box size, draw a coin at the prescribed distance from the
// localized coin, estimate the fractional moment over deterministically
// sampled cross-block pairs inside the box, and report the |L|^a-weighted
// ratio. Boundedness of the ratio along the list is the reported statistic.
inline std::vector<BoxedScanRow> boxed_decay_scan(
    double s, double p, double a, const std::vector<BoxSpec>& boxes, cd z,
    std::uint64_t seed, long samples = 40, unsigned threads = 1,
    long max_pairs = 200) {
  if (!(s > 0.0 && s < 1.0)) throw contract_error("boxed_decay_scan: s in (0,1)");
  if (!(p > 1.0 / (1.0 - s)))
    throw contract_error("boxed_decay_scan: p must exceed 1/(1-s)");
  if (a < 0.0) throw contract_error("boxed_decay_scan: a must be >= 0");

  std::vector<BoxedScanRow> rows;
  for (const BoxSpec& box : boxes) {
    if (std::min(box.l1, box.l2) < 3)
      throw contract_error("boxed_decay_scan: min(L1, L2) must be >= 3");
    BoxedScanRow row;
    row.box = box;
    double norm_l = box_norm(box);
    row.coin_radius = std::pow(norm_l, -(2.0 * a * p + 4.0 + a / s));
    Mat3 coin = coin_near_c0(row.coin_radius, seed ^ 0x9e37u);
    CoinField coins(coin);

    // Deterministic cross-block pair sample, grouped by source column.
    auto basis = std::make_shared<BasisIndex>(box);
    const auto& elems = basis->elements();
    CounterRng rng(seed, RngStream::pair_sampler,
                   static_cast<std::uint64_t>(box.l1) << 32 | box.l2);
    const long sources = std::max<long>(1, max_pairs / 10);
    std::vector<std::pair<int, std::vector<int>>> plan;
    long total_pairs = 0;
    for (long sidx = 0; sidx < sources && total_pairs < max_pairs; ++sidx) {
      int y = static_cast<int>(rng.u64() % elems.size());
      std::vector<int> xs;
      while (xs.size() < 10 && total_pairs < max_pairs) {
        int x = static_cast<int>(rng.u64() % elems.size());
        if (block_of(elems[x]) == block_of(elems[y])) continue;  // need x !~ y
        xs.push_back(x);
        ++total_pairs;
      }
      plan.emplace_back(y, std::move(xs));
    }
    row.pairs = total_pairs;

    // Mean |G|^s per pair over disorder samples; the box operator is the
    // ambient assembly itself (its ring pinning is the box restriction).
    std::vector<double> sums(static_cast<std::size_t>(total_pairs), 0.0);
    std::vector<double> all(static_cast<std::size_t>(samples * total_pairs), 0.0);
    parallel_for(static_cast<std::size_t>(samples), threads, [&](std::size_t i) {
      DisorderField dis(DisorderMode::correlated, seed,
                        static_cast<std::uint64_t>(i));
      WalkMatrix w = assemble_walk(box, coins, dis, basis);
      ResolventSolver solver(w.matrix, z);
      std::size_t offset = i * static_cast<std::size_t>(total_pairs);
      std::size_t slot = 0;
      for (const auto& [y, xs] : plan) {
        VecX col = solver.column(y);
        for (int x : xs) all[offset + slot++] = std::pow(std::abs(col(x)), s);
      }
    });
    for (long i = 0; i < samples; ++i)
      for (long q = 0; q < total_pairs; ++q)
        sums[static_cast<std::size_t>(q)] +=
            all[static_cast<std::size_t>(i * total_pairs + q)];
    double worst = 0.0;
    for (double v : sums) worst = std::max(worst, v / static_cast<double>(samples));
    row.max_moment = worst;
    row.ratio = worst * std::pow(norm_l, a);
    rows.push_back(row);
  }
  return rows;
}

// Verifies R2 = R1 + R2 (U1 - U2) R1 on random vectors; returns the largest
// relative residual over the trials.
inline double resolvent_identity_check(const WalkMatrix& w1, const WalkMatrix& w2,
                                       cd z, int trials, std::uint64_t seed = 1) {
  if (w1.basis != w2.basis && w1.dim() != w2.dim())
    throw contract_error("resolvent_identity_check: dimension mismatch");
  ResolventSolver r1(w1.matrix, z);
  ResolventSolver r2(w2.matrix, z);
  SpMat diff = w1.matrix - w2.matrix;
  CounterRng rng(seed, RngStream::generic, 0xabcd);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    VecX v(w1.dim());
    for (int i = 0; i < w1.dim(); ++i) v(i) = cd(rng.normal(), rng.normal());
    v.normalize();
    VecX a = r1.solve(v);
    VecX b = r2.solve(v);
    VecX c = r2.solve((diff * a).eval());
    worst = std::max(worst, (b - a - c).norm());
  }
  return worst;
}

}  // namespace hexwalk
