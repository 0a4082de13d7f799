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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hexwalk/common.hpp"

namespace hexwalk {

// Hexagonal lattice indexing. Vertices live on two interleaved triangular
// sublattices A and B; (j, k) are integer coefficients with respect to the
// two span vectors of the A sublattice.

enum class Sub : std::uint8_t { A = 0, B = 1 };

struct Site {
  int j = 0;
  int k = 0;
  Sub sub = Sub::A;

  friend bool operator==(const Site& a, const Site& b) {
    return a.j == b.j && a.k == b.k && a.sub == b.sub;
  }
  friend bool operator!=(const Site& a, const Site& b) { return !(a == b); }
  friend bool operator<(const Site& a, const Site& b) {
    if (a.j != b.j) return a.j < b.j;
    if (a.k != b.k) return a.k < b.k;
    return static_cast<int>(a.sub) < static_cast<int>(b.sub);
  }
};

// One element of the canonical product basis: a vertex together with a coin
// index in {1, 2, 3}. The global basis order is lexicographic in
// (j, k, sub, coin) so matrix indices are reproducible across runs.
struct BasisElement {
  Site site;
  int coin = 1;

  friend bool operator==(const BasisElement& a, const BasisElement& b) {
    return a.site == b.site && a.coin == b.coin;
  }
  friend bool operator!=(const BasisElement& a, const BasisElement& b) {
    return !(a == b);
  }
  friend bool operator<(const BasisElement& a, const BasisElement& b) {
    if (!(a.site == b.site)) return a.site < b.site;
    return a.coin < b.coin;
  }
};

struct BlockId {
  int j = 0;
  int k = 0;
  friend bool operator==(const BlockId& a, const BlockId& b) {
    return a.j == b.j && a.k == b.k;
  }
  friend bool operator!=(const BlockId& a, const BlockId& b) {
    return !(a == b);
  }
  friend bool operator<(const BlockId& a, const BlockId& b) {
    if (a.j != b.j) return a.j < b.j;
    return a.k < b.k;
  }
};

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept {
    std::uint64_t h = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.j)) << 33) ^
                      (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.k)) << 1) ^
                      static_cast<std::uint64_t>(s.sub);
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return static_cast<std::size_t>(h);
  }
};

struct BasisElementHash {
  std::size_t operator()(const BasisElement& b) const noexcept {
    return SiteHash{}(b.site) * 1000003u + static_cast<std::size_t>(b.coin);
  }
};

// Shift targets. Direction d moves along the d-th leg of the local star and
// always flips the sublattice:
//   S1: (j,k,A) -> (j,k-1,B),   (j,k,B) -> (j-1,k+1,A)
//   S2: (j,k,A) -> (j+1,k-1,B), (j,k,B) -> (j,k,A)
//   S3: (j,k,A) -> (j,k,B),     (j,k,B) -> (j,k+1,A)
inline Site shift_target(const Site& pos, int direction) {
  switch (direction) {
    case 1:
      return pos.sub == Sub::A ? Site{pos.j, pos.k - 1, Sub::B}
                               : Site{pos.j - 1, pos.k + 1, Sub::A};
    case 2:
      return pos.sub == Sub::A ? Site{pos.j + 1, pos.k - 1, Sub::B}
                               : Site{pos.j, pos.k, Sub::A};
    case 3:
      return pos.sub == Sub::A ? Site{pos.j, pos.k, Sub::B}
                               : Site{pos.j, pos.k + 1, Sub::A};
    default:
      throw contract_error("shift_target: direction must be 1, 2 or 3");
  }
}

// Unique site s with shift_target(s, direction) == pos.
inline Site shift_source(const Site& pos, int direction) {
  switch (direction) {
    case 1:
      return pos.sub == Sub::A ? Site{pos.j + 1, pos.k - 1, Sub::B}
                               : Site{pos.j, pos.k + 1, Sub::A};
    case 2:
      return pos.sub == Sub::A ? Site{pos.j, pos.k, Sub::B}
                               : Site{pos.j - 1, pos.k + 1, Sub::A};
    case 3:
      return pos.sub == Sub::A ? Site{pos.j, pos.k - 1, Sub::B}
                               : Site{pos.j, pos.k, Sub::A};
    default:
      throw contract_error("shift_source: direction must be 1, 2 or 3");
  }
}

inline std::array<Site, 3> neighbors(const Site& s) {
  return {shift_target(s, 1), shift_target(s, 2), shift_target(s, 3)};
}

// Graph distance on the hexagonal lattice (unit edge = one shift). BFS with a
// thread-local memo keyed by the translation-reduced pair; doubles as the
// reference implementation for desk-scale sizes.
inline int graph_distance(const Site& x, const Site& y) {
  if (x == y) return 0;
  // Distance is invariant under A-lattice translations, which act as
  // (j, k) -> (j + vj, k + vk) on both sublattices.
  const Site from{0, 0, x.sub};
  const Site to{y.j - x.j, y.k - x.k, y.sub};

  const std::uint64_t key =
      (static_cast<std::uint64_t>(static_cast<std::uint32_t>(to.j)) << 20) ^
      (static_cast<std::uint64_t>(static_cast<std::uint32_t>(to.k)) << 2) ^
      (static_cast<std::uint64_t>(x.sub) << 1) ^ static_cast<std::uint64_t>(to.sub);
  thread_local std::unordered_map<std::uint64_t, int> memo;
  if (auto it = memo.find(key); it != memo.end()) return it->second;

  std::unordered_map<Site, int, SiteHash> dist;
  std::deque<Site> queue;
  dist.emplace(from, 0);
  queue.push_back(from);
  int result = -1;
  while (!queue.empty()) {
    Site cur = queue.front();
    queue.pop_front();
    int d = dist[cur];
    if (cur == to) {
      result = d;
      break;
    }
    for (const Site& n : neighbors(cur)) {
      if (dist.emplace(n, d + 1).second) queue.push_back(n);
    }
  }
  memo.emplace(key, result);
  return result;
}

// All distances from `origin` out to `max_radius`, one BFS.
inline std::unordered_map<Site, int, SiteHash> bfs_distances(const Site& origin,
                                                             int max_radius) {
  std::unordered_map<Site, int, SiteHash> dist;
  std::deque<Site> queue;
  dist.emplace(origin, 0);
  queue.push_back(origin);
  while (!queue.empty()) {
    Site cur = queue.front();
    queue.pop_front();
    int d = dist[cur];
    if (d >= max_radius) continue;
    for (const Site& n : neighbors(cur)) {
      if (dist.emplace(n, d + 1).second) queue.push_back(n);
    }
  }
  return dist;
}

// Invariant six-dimensional block containing a basis element. The block
// (j, k) is spanned by the three coin states of A(j,k), coin 3 of B(j,k),
// coin 1 of B(j,k-1) and coin 2 of B(j+1,k-1).
inline BlockId block_of(const BasisElement& b) {
  if (b.site.sub == Sub::A) return {b.site.j, b.site.k};
  switch (b.coin) {
    case 1:
      return {b.site.j, b.site.k + 1};
    case 2:
      return {b.site.j - 1, b.site.k + 1};
    case 3:
      return {b.site.j, b.site.k};
    default:
      throw contract_error("block_of: coin index must be 1, 2 or 3");
  }
}

// The six basis elements of a block, in the canonical generator order.
inline std::array<BasisElement, 6> block_elements(const BlockId& id) {
  return {BasisElement{{id.j, id.k, Sub::A}, 1}, BasisElement{{id.j, id.k, Sub::A}, 2},
          BasisElement{{id.j, id.k, Sub::A}, 3}, BasisElement{{id.j, id.k, Sub::B}, 3},
          BasisElement{{id.j, id.k - 1, Sub::B}, 1},
          BasisElement{{id.j + 1, id.k - 1, Sub::B}, 2}};
}

// The unique element with an A-sublattice site in the same block, with the
// same coin index. Idempotent.
inline BasisElement a_representative(const BasisElement& b) {
  BlockId id = block_of(b);
  return BasisElement{{id.j, id.k, Sub::A}, b.coin};
}

// Finite box. Sides l1, l2 >= 1; origin is an A-site translation applied to
// the canonical box centered at 0.
struct BoxSpec {
  int l1 = 1;
  int l2 = 1;
  Site origin{0, 0, Sub::A};

  BoxSpec() = default;
  BoxSpec(int l1_, int l2_, Site origin_ = Site{0, 0, Sub::A})
      : l1(l1_), l2(l2_), origin(origin_) {
    if (l1 < 1 || l2 < 1) throw size_error("BoxSpec: sides must be >= 1");
    if (origin.sub != Sub::A)
      throw contract_error("BoxSpec: origin must be an A-sublattice site");
  }

  friend bool operator==(const BoxSpec& a, const BoxSpec& b) {
    return a.l1 == b.l1 && a.l2 == b.l2 && a.origin == b.origin;
  }
  friend bool operator!=(const BoxSpec& a, const BoxSpec& b) { return !(a == b); }
};

// Number of A-vertices enclosed: 4*L1*L2 - 1.
inline long volume(const BoxSpec& box) {
  return 4L * box.l1 * box.l2 - 1L;
}

inline double box_norm(const BoxSpec& box) {
  return std::sqrt(static_cast<double>(box.l1) * box.l1 +
                   static_cast<double>(box.l2) * box.l2);
}

// Block membership relative to the box origin: -L1 <= j <= L1-1,
// -L2 <= k <= L2-1, j+k > -L1-L2 (drops the single corner block).
inline bool box_contains_block(const BoxSpec& box, const BlockId& id) {
  int j = id.j - box.origin.j;
  int k = id.k - box.origin.k;
  return j >= -box.l1 && j <= box.l1 - 1 && k >= -box.l2 && k <= box.l2 - 1 &&
         j + k > -box.l1 - box.l2;
}

inline bool box_contains(const BoxSpec& box, const BasisElement& b) {
  return box_contains_block(box, block_of(b));
}

inline std::vector<BlockId> box_blocks(const BoxSpec& box) {
  std::vector<BlockId> out;
  out.reserve(static_cast<std::size_t>(volume(box)));
  for (int j = -box.l1; j <= box.l1 - 1; ++j)
    for (int k = -box.l2; k <= box.l2 - 1; ++k)
      if (j + k > -box.l1 - box.l2)
        out.push_back(BlockId{j + box.origin.j, k + box.origin.k});
  return out;
}

// Interior basis, sorted lexicographically in (j, k, sub, coin).
inline std::vector<BasisElement> box_interior(const BoxSpec& box) {
  std::vector<BasisElement> out;
  out.reserve(static_cast<std::size_t>(6 * volume(box)));
  for (const BlockId& id : box_blocks(box))
    for (const BasisElement& b : block_elements(id)) out.push_back(b);
  std::sort(out.begin(), out.end());
  return out;
}

// B-sites on which the coin is pinned so the box decouples from its
// complement. Four index ranges, no overlaps, translated by the box origin.
inline std::vector<Site> boundary_coin_sites(const BoxSpec& box) {
  std::vector<Site> out;
  const int l1 = box.l1, l2 = box.l2;
  auto push = [&](int j, int k) {
    out.push_back(Site{j + box.origin.j, k + box.origin.k, Sub::B});
  };
  for (int j = -l1; j <= l1 - 1; ++j) push(j, l2 - 1);
  for (int j = -l1 + 1; j <= l1; ++j) push(j, -l2 - 1);
  for (int k = -l2; k <= l2 - 2; ++k) push(l1, k);
  for (int k = -l2; k <= l2 - 2; ++k) push(-l1, k);
  std::sort(out.begin(), out.end());
  return out;
}

// Coin-sibling closure: add every coin state of every site present in S.
inline std::vector<BasisElement> closure(const std::vector<BasisElement>& s) {
  std::unordered_set<Site, SiteHash> sites;
  for (const BasisElement& b : s) sites.insert(b.site);
  std::vector<BasisElement> out;
  out.reserve(3 * sites.size());
  for (const Site& site : sites)
    for (int c = 1; c <= 3; ++c) out.push_back(BasisElement{site, c});
  std::sort(out.begin(), out.end());
  return out;
}

struct Boundaries {
  std::vector<BasisElement> interior;  // elements of the box near the pinned ring
  std::vector<BasisElement> exterior;  // ring-adjacent elements outside the box
};

// Basis elements whose site is a pinned boundary site or adjacent to one,
// split by box membership.
inline Boundaries boundaries(const BoxSpec& box) {
  std::unordered_set<Site, SiteHash> ring_or_adjacent;
  for (const Site& s : boundary_coin_sites(box)) {
    ring_or_adjacent.insert(s);
    for (const Site& n : neighbors(s)) ring_or_adjacent.insert(n);
  }
  Boundaries out;
  for (const Site& s : ring_or_adjacent) {
    for (int c = 1; c <= 3; ++c) {
      BasisElement b{s, c};
      (box_contains(box, b) ? out.interior : out.exterior).push_back(b);
    }
  }
  std::sort(out.interior.begin(), out.interior.end());
  std::sort(out.exterior.begin(), out.exterior.end());
  return out;
}

inline Site translated(const Site& s, const Site& v) {
  return Site{s.j + v.j, s.k + v.k, s.sub};
}

inline BasisElement translated(const BasisElement& b, const Site& v) {
  return BasisElement{translated(b.site, v), b.coin};
}

}  // namespace hexwalk
