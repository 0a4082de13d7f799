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

#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "hexwalk/lattice.hpp"
#include "hexwalk/rng.hpp"

using namespace hexwalk;

namespace {

// Independent oracle: plain BFS over an explicit adjacency map built on a
// bounded patch, with no reuse of the library's neighbor iteration order.
int bfs_oracle(const Site& from, const Site& to, int patch) {
  std::map<Site, std::vector<Site>> adj;
  for (int j = -patch; j <= patch; ++j)
    for (int k = -patch; k <= patch; ++k) {
      Site a{j, k, Sub::A};
      Site b{j, k, Sub::B};
      // A(j,k) touches B(j,k), B(j,k-1), B(j+1,k-1); record both directions.
      for (const Site& n : {Site{j, k, Sub::B}, Site{j, k - 1, Sub::B},
                            Site{j + 1, k - 1, Sub::B}}) {
        adj[a].push_back(n);
        adj[n].push_back(a);
      }
      (void)b;
    }
  std::map<Site, int> dist;
  std::vector<Site> frontier{from};
  dist[from] = 0;
  while (!frontier.empty()) {
    std::vector<Site> next;
    for (const Site& s : frontier) {
      if (s == to) return dist[s];
      for (const Site& n : adj[s])
        if (!dist.count(n)) {
          dist[n] = dist[s] + 1;
          next.push_back(n);
        }
    }
    frontier = std::move(next);
  }
  return -1;
}

Site random_site(CounterRng& rng, int range) {
  return Site{static_cast<int>(rng.u64() % (2 * range + 1)) - range,
              static_cast<int>(rng.u64() % (2 * range + 1)) - range,
              rng.u64() % 2 ? Sub::B : Sub::A};
}

}  // namespace

TEST_CASE("shift targets follow the displayed rules") {
  CHECK(shift_target({0, 0, Sub::A}, 1) == Site{0, -1, Sub::B});
  CHECK(shift_target({0, 0, Sub::B}, 2) == Site{0, 0, Sub::A});
  CHECK(shift_target({0, 0, Sub::A}, 2) == Site{1, -1, Sub::B});
  CHECK(shift_target({0, 0, Sub::A}, 3) == Site{0, 0, Sub::B});
  CHECK(shift_target({0, 0, Sub::B}, 1) == Site{-1, 1, Sub::A});
  CHECK(shift_target({0, 0, Sub::B}, 3) == Site{0, 1, Sub::A});
  CHECK_THROWS_AS(shift_target({0, 0, Sub::A}, 0), contract_error);
  CHECK_THROWS_AS(shift_target({0, 0, Sub::A}, 4), contract_error);
}

TEST_CASE("double shift returns to the original sublattice by a fixed vector") {
  CounterRng rng(11);
  for (int d = 1; d <= 3; ++d) {
    Site base{0, 0, Sub::A};
    Site twice0 = shift_target(shift_target(base, d), d);
    REQUIRE(twice0.sub == Sub::A);
    for (int trial = 0; trial < 20; ++trial) {
      Site s = random_site(rng, 30);
      Site t = shift_target(shift_target(s, d), d);
      CHECK(t.sub == s.sub);
      CHECK(t.j - s.j == twice0.j);
      CHECK(t.k - s.k == twice0.k);
    }
  }
}

TEST_CASE("shift_source inverts shift_target") {
  CounterRng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    Site s = random_site(rng, 20);
    for (int d = 1; d <= 3; ++d) {
      CHECK(shift_source(shift_target(s, d), d) == s);
      CHECK(shift_target(shift_source(s, d), d) == s);
    }
  }
}

TEST_CASE("graph distance basics and BFS oracle") {
  CHECK(graph_distance({2, -3, Sub::B}, {2, -3, Sub::B}) == 0);
  CHECK(graph_distance({0, 0, Sub::A}, {0, 0, Sub::B}) == 1);
  CHECK(graph_distance({0, 0, Sub::A}, {1, 0, Sub::A}) == 2);
  CHECK(graph_distance({0, 0, Sub::A}, {1, 0, Sub::A}) ==
        bfs_oracle({0, 0, Sub::A}, {1, 0, Sub::A}, 10));

  CounterRng rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    Site x = random_site(rng, 4);
    Site y = random_site(rng, 4);
    CHECK(graph_distance(x, y) == bfs_oracle(x, y, 12));
  }
}

TEST_CASE("graph distance is a metric on random triples") {
  CounterRng rng(14);
  for (int trial = 0; trial < 60; ++trial) {
    Site x = random_site(rng, 10);
    Site y = random_site(rng, 10);
    Site z = random_site(rng, 10);
    int dxy = graph_distance(x, y);
    int dyx = graph_distance(y, x);
    CHECK(dxy == dyx);
    CHECK((dxy == 0) == (x == y));
    CHECK(graph_distance(x, z) <= dxy + graph_distance(y, z));
  }
}

TEST_CASE("block membership matches the six generators") {
  CHECK(block_of({{0, 0, Sub::A}, 1}) == BlockId{0, 0});
  CHECK(block_of({{0, -1, Sub::B}, 1}) == BlockId{0, 0});
  CHECK(block_of({{1, -1, Sub::B}, 2}) == BlockId{0, 0});
  CHECK(block_of({{0, 0, Sub::B}, 3}) == BlockId{0, 0});

  CounterRng rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    BlockId id{static_cast<int>(rng.u64() % 41) - 20,
               static_cast<int>(rng.u64() % 41) - 20};
    auto elems = block_elements(id);
    std::set<BasisElement> unique(elems.begin(), elems.end());
    CHECK(unique.size() == 6);
    for (const BasisElement& b : elems) CHECK(block_of(b) == id);
  }
}

TEST_CASE("a_representative lands on the A site of the block, same coin") {
  CHECK(a_representative({{0, 0, Sub::A}, 2}) == BasisElement{{0, 0, Sub::A}, 2});
  CHECK(a_representative({{0, -1, Sub::B}, 1}) == BasisElement{{0, 0, Sub::A}, 1});
  CHECK(a_representative({{1, -1, Sub::B}, 2}) == BasisElement{{0, 0, Sub::A}, 2});

  CounterRng rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    BasisElement b{random_site(rng, 15), static_cast<int>(rng.u64() % 3) + 1};
    BasisElement rep = a_representative(b);
    CHECK(rep.site.sub == Sub::A);
    CHECK(rep.coin == b.coin);
    CHECK(block_of(rep) == block_of(b));
    CHECK(a_representative(rep) == rep);
  }
}

TEST_CASE("boundary coin sites: membership, cardinality, sublattice") {
  BoxSpec l33(3, 3);
  auto sites = boundary_coin_sites(l33);
  CHECK(std::find(sites.begin(), sites.end(), Site{-3, 2, Sub::B}) != sites.end());

  BoxSpec l11(1, 1);
  auto small = boundary_coin_sites(l11);
  // Four ranges of lengths 2L1, 2L1, 2L2-1, 2L2-1 with no overlaps.
  CHECK(small.size() == 6);
  std::set<Site> uniq(small.begin(), small.end());
  CHECK(uniq.size() == small.size());
  for (const Site& s : sites) CHECK(s.sub == Sub::B);
  for (const Site& s : small) CHECK(s.sub == Sub::B);
}

TEST_CASE("partition size and O(1) membership") {
  BoxSpec box(3, 3);
  CHECK(volume(box) == 35);
  auto interior = box_interior(box);
  CHECK(interior.size() == 210);
  CHECK(std::is_sorted(interior.begin(), interior.end()));
  for (const BasisElement& b : interior) CHECK(box_contains(box, b));
  CHECK(box_contains(box, BasisElement{{0, 0, Sub::A}, 1}));
  // The dropped corner block.
  CHECK_FALSE(box_contains(box, BasisElement{{-3, -3, Sub::A}, 1}));

  for (int l1 = 1; l1 <= 4; ++l1)
    for (int l2 = 1; l2 <= 4; ++l2) {
      BoxSpec b(l1, l2);
      CHECK(box_interior(b).size() ==
            static_cast<std::size_t>(6 * volume(b)));
    }
}

TEST_CASE("ring sites split between interior and exterior by coin state") {
  BoxSpec box(3, 3);
  bool saw_split = false;
  for (const Site& s : boundary_coin_sites(box)) {
    int inside = 0;
    for (int c = 1; c <= 3; ++c)
      if (box_contains(box, BasisElement{s, c})) ++inside;
    if (inside > 0 && inside < 3) saw_split = true;
  }
  CHECK(saw_split);
}

TEST_CASE("translation covariance of the partition") {
  BoxSpec base(2, 3);
  Site v{5, -4, Sub::A};
  BoxSpec moved(2, 3, v);
  auto a = box_interior(base);
  auto b = box_interior(moved);
  REQUIRE(a.size() == b.size());
  std::vector<BasisElement> shifted;
  shifted.reserve(a.size());
  for (const BasisElement& e : a) shifted.push_back(translated(e, v));
  std::sort(shifted.begin(), shifted.end());
  CHECK(shifted == b);
}

TEST_CASE("closure adds coin siblings") {
  CHECK(closure({}).empty());
  auto c = closure({BasisElement{{0, 0, Sub::A}, 1}});
  REQUIRE(c.size() == 3);
  CHECK(c[0] == BasisElement{{0, 0, Sub::A}, 1});
  CHECK(c[1] == BasisElement{{0, 0, Sub::A}, 2});
  CHECK(c[2] == BasisElement{{0, 0, Sub::A}, 3});
}

TEST_CASE("boundary sets sit on the right side and grow linearly") {
  std::vector<int> ls{5, 10, 20};
  std::vector<std::size_t> sizes;
  for (int l : ls) {
    BoxSpec box(l, l);
    Boundaries b = boundaries(box);
    for (const BasisElement& e : b.interior) CHECK(box_contains(box, e));
    for (const BasisElement& e : b.exterior) CHECK_FALSE(box_contains(box, e));
    // Every element's site is on the pinned ring or adjacent to it.
    std::set<Site> ring;
    for (const Site& s : boundary_coin_sites(box)) ring.insert(s);
    auto near_ring = [&](const Site& s) {
      if (ring.count(s)) return true;
      for (const Site& r : ring)
        if (graph_distance(s, r) == 1) return true;
      return false;
    };
    for (const BasisElement& e : b.interior) CHECK(near_ring(e.site));
    sizes.push_back(b.interior.size());
  }
  // Linear growth in L: size(2L) / size(L) close to 2.
  double r1 = static_cast<double>(sizes[1]) / sizes[0];
  double r2 = static_cast<double>(sizes[2]) / sizes[1];
  CHECK(r1 == Catch::Approx(2.0).margin(0.35));
  CHECK(r2 == Catch::Approx(2.0).margin(0.35));
}

TEST_CASE("box spec validation") {
  CHECK_THROWS_AS(BoxSpec(0, 3), size_error);
  CHECK_THROWS_AS(BoxSpec(3, 3, Site{0, 0, Sub::B}), contract_error);
}
