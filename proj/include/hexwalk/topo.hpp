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
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "hexwalk/coin.hpp"
#include "hexwalk/common.hpp"
#include "hexwalk/lattice.hpp"

namespace hexwalk {

// Scattering picture: the walker lives on directed edge centers; paths on the
// face decomposition of that graph carry a transport index. All geometry uses
// an exact integer frame with x in units of sqrt(3)/128 and y in units of
// 1/128 of the lattice constant: A(j,k) sits at (128j + 64k, 192k) and B(j,k)
// at (128j + 64k, 192k + 128).

struct Vec2i {
  std::int64_t x = 0;
  std::int64_t y = 0;
  friend Vec2i operator+(Vec2i a, Vec2i b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2i operator-(Vec2i a, Vec2i b) { return {a.x - b.x, a.y - b.y}; }
  friend bool operator==(Vec2i a, Vec2i b) { return a.x == b.x && a.y == b.y; }
  friend bool operator!=(Vec2i a, Vec2i b) { return !(a == b); }
  friend bool operator<(Vec2i a, Vec2i b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  }
};

inline std::int64_t cross(Vec2i a, Vec2i b) { return a.x * b.y - a.y * b.x; }
inline std::int64_t dot(Vec2i a, Vec2i b) { return a.x * b.x + a.y * b.y; }

inline Vec2i site_pos(const Site& s) {
  Vec2i p{128LL * s.j + 64LL * s.k, 192LL * s.k};
  if (s.sub == Sub::B) p.y += 128;
  return p;
}

inline std::optional<Site> site_at(Vec2i p) {
  std::int64_t rem = ((p.y % 192) + 192) % 192;
  Sub sub;
  std::int64_t y = p.y;
  if (rem == 0) {
    sub = Sub::A;
  } else if (rem == 128) {
    sub = Sub::B;
    y -= 128;
  } else {
    return std::nullopt;
  }
  std::int64_t k = y / 192;
  std::int64_t num = p.x - 64 * k;
  if (num % 128 != 0) return std::nullopt;
  Site s{static_cast<int>(num / 128), static_cast<int>(k), sub};
  return site_pos(s) == p ? std::optional<Site>(s) : std::nullopt;
}

// Centers of the three plaquettes around a site.
inline std::array<Vec2i, 3> adjacent_hexagons(const Site& s) {
  Vec2i p = site_pos(s);
  if (s.sub == Sub::A)
    return {p + Vec2i{64, 64}, p + Vec2i{-64, 64}, p + Vec2i{0, -128}};
  return {p + Vec2i{0, 128}, p + Vec2i{64, -64}, p + Vec2i{-64, -64}};
}

// Ring of a plaquette: alternating A and B sites in a fixed order.
inline std::array<Site, 6> hexagon_ring(Vec2i center) {
  static constexpr std::array<Vec2i, 6> offsets = {
      Vec2i{-64, -64}, Vec2i{-64, 64}, Vec2i{0, 128},
      Vec2i{64, 64},   Vec2i{64, -64}, Vec2i{0, -128}};
  std::array<Site, 6> out;
  for (std::size_t i = 0; i < 6; ++i) {
    auto s = site_at(center + offsets[i]);
    if (!s) throw contract_error("hexagon_ring: not a plaquette center");
    out[i] = *s;
  }
  return out;
}

inline bool is_hexagon_center(Vec2i center) {
  static constexpr std::array<Vec2i, 6> offsets = {
      Vec2i{-64, -64}, Vec2i{-64, 64}, Vec2i{0, 128},
      Vec2i{64, 64},   Vec2i{64, -64}, Vec2i{0, -128}};
  for (const Vec2i& o : offsets)
    if (!site_at(center + o)) return false;
  return true;
}

inline Vec2i edge_midpoint(const Site& a, const Site& b) {
  if (graph_distance(a, b) != 1)
    throw contract_error("edge_midpoint: sites are not adjacent");
  Vec2i pa = site_pos(a), pb = site_pos(b);
  return {(pa.x + pb.x) / 2, (pa.y + pb.y) / 2};
}

// The two plaquettes flanking an edge.
inline std::array<Vec2i, 2> edge_hexagons(const Site& a, const Site& b) {
  auto ha = adjacent_hexagons(a);
  auto hb = adjacent_hexagons(b);
  std::array<Vec2i, 2> out;
  int n = 0;
  for (const Vec2i& u : ha)
    for (const Vec2i& v : hb)
      if (u == v && n < 2) out[static_cast<std::size_t>(n++)] = u;
  if (n != 2) throw contract_error("edge_hexagons: expected two flanks");
  return out;
}

// Center of the directed edge from -> to: offset from the edge midpoint a
// quarter of the way toward the plaquette on the right of travel. This is
// the handedness that reproduces the reference block matrix.
inline Vec2i directed_center(const Site& from, const Site& to) {
  Vec2i m = edge_midpoint(from, to);
  Vec2i pf = site_pos(from);
  auto flanks = edge_hexagons(from, to);
  for (const Vec2i& h : flanks) {
    if (cross(site_pos(to) - pf, h - pf) < 0) {
      Vec2i d = h - m;
      return {m.x + d.x / 4, m.y + d.y / 4};
    }
  }
  throw contract_error("directed_center: no right-side plaquette");
}

// ---------------------------------------------------------------------------
// Faces

enum class FaceKind : std::uint8_t { triangle, trapezoid, parallelogram, hexagon };

struct Face {
  FaceKind kind = FaceKind::triangle;
  Vec2i center;
  friend bool operator==(const Face& a, const Face& b) {
    return a.kind == b.kind && a.center == b.center;
  }
  friend bool operator!=(const Face& a, const Face& b) { return !(a == b); }
  friend bool operator<(const Face& a, const Face& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.center < b.center;
  }
};

inline Face face_triangle(const Site& s) {
  return Face{FaceKind::triangle, site_pos(s)};
}

inline Face face_hexagon(Vec2i center) {
  if (!is_hexagon_center(center))
    throw contract_error("face_hexagon: not a plaquette center");
  return Face{FaceKind::hexagon, center};
}

inline Face face_parallelogram(const Site& a, const Site& b) {
  return Face{FaceKind::parallelogram, edge_midpoint(a, b)};
}

// Corner point of the small triangle at `s` on the edge toward `n`.
inline Vec2i triangle_corner(const Site& s, const Site& n) {
  Vec2i p = site_pos(s);
  Vec2i m = edge_midpoint(s, n);
  return {(p.x + m.x) / 2, (p.y + m.y) / 2};
}

// The two edges of a sector: neighbors of `s` on the plaquette ring.
inline std::array<Site, 2> sector_edges(const Site& s, Vec2i hexagon) {
  auto ring = hexagon_ring(hexagon);
  std::array<Site, 2> out;
  int n = 0;
  for (const Site& r : ring)
    if (graph_distance(s, r) == 1 && n < 2) out[static_cast<std::size_t>(n++)] = r;
  if (n != 2)
    throw contract_error("sector_edges: site is not on the plaquette ring");
  return out;
}

inline Face face_trapezoid(const Site& s, Vec2i hexagon) {
  auto [n1, n2] = sector_edges(s, hexagon);
  Vec2i a1 = triangle_corner(s, n1);
  Vec2i a2 = triangle_corner(s, n2);
  Vec2i m1 = edge_midpoint(s, n1), m2 = edge_midpoint(s, n2);
  auto rv = [&](Vec2i m) {
    Vec2i d = hexagon - m;
    return Vec2i{m.x + d.x / 4, m.y + d.y / 4};
  };
  Vec2i v1 = rv(m1), v2 = rv(m2);
  Vec2i c{(a1.x + a2.x + v1.x + v2.x) / 4, (a1.y + a2.y + v1.y + v2.y) / 4};
  return Face{FaceKind::trapezoid, c};
}

namespace detail {

struct TrapInfo {
  Site site;
  Vec2i hexagon;
};

inline std::optional<TrapInfo> trapezoid_info(Vec2i center) {
  static constexpr std::array<std::pair<Vec2i, Vec2i>, 6> table = {
      std::pair<Vec2i, Vec2i>{Vec2i{18, 18}, Vec2i{64, 64}},
      {Vec2i{-18, 18}, Vec2i{-64, 64}},
      {Vec2i{0, -36}, Vec2i{0, -128}},
      {Vec2i{18, -18}, Vec2i{64, -64}},
      {Vec2i{-18, -18}, Vec2i{-64, -64}},
      {Vec2i{0, 36}, Vec2i{0, 128}}};
  for (const auto& [delta, hex] : table) {
    if (auto s = site_at(center - delta)) {
      bool a_kind = delta.y == -36 || (delta.y == 18);
      bool matches = (s->sub == Sub::A) == a_kind;
      if (matches) return TrapInfo{*s, center - delta + hex};
    }
  }
  return std::nullopt;
}

struct EdgeInfo {
  Site a, b;
};

inline std::optional<EdgeInfo> parallelogram_info(Vec2i center) {
  static constexpr std::array<Vec2i, 3> deltas = {Vec2i{0, 64}, Vec2i{32, 32},
                                                  Vec2i{32, -32}};
  for (const Vec2i& d : deltas) {
    auto s1 = site_at(center - d);
    auto s2 = site_at(center + d);
    if (s1 && s2 && graph_distance(*s1, *s2) == 1) return EdgeInfo{*s1, *s2};
  }
  return std::nullopt;
}

}  // namespace detail

// Validated parse of a face from its kind and center coordinates.
inline Face make_face(FaceKind kind, Vec2i center) {
  switch (kind) {
    case FaceKind::triangle:
      if (!site_at(center)) throw contract_error("make_face: bad triangle center");
      break;
    case FaceKind::hexagon:
      if (!is_hexagon_center(center))
        throw contract_error("make_face: bad hexagon center");
      break;
    case FaceKind::parallelogram:
      if (!detail::parallelogram_info(center))
        throw contract_error("make_face: bad parallelogram center");
      break;
    case FaceKind::trapezoid:
      if (!detail::trapezoid_info(center))
        throw contract_error("make_face: bad trapezoid center");
      break;
  }
  return Face{kind, center};
}

// Face adjacency; crossing corners (parallelogram <-> hexagon contact) is
// not an adjacency.
inline bool faces_adjacent(const Face& f, const Face& g) {
  const Face* a = &f;
  const Face* b = &g;
  if (static_cast<int>(a->kind) > static_cast<int>(b->kind)) std::swap(a, b);
  if (a->kind == FaceKind::triangle && b->kind == FaceKind::trapezoid) {
    auto info = detail::trapezoid_info(b->center);
    return info && site_pos(info->site) == a->center;
  }
  if (a->kind == FaceKind::trapezoid && b->kind == FaceKind::hexagon) {
    auto info = detail::trapezoid_info(a->center);
    return info && info->hexagon == b->center;
  }
  if (a->kind == FaceKind::trapezoid && b->kind == FaceKind::parallelogram) {
    auto t = detail::trapezoid_info(a->center);
    auto e = detail::parallelogram_info(b->center);
    if (!t || !e) return false;
    if (!(t->site == e->a) && !(t->site == e->b)) return false;
    auto flanks = edge_hexagons(e->a, e->b);
    return flanks[0] == t->hexagon || flanks[1] == t->hexagon;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Oriented polyline sidedness with exact integer arithmetic.

namespace detail {

using i128 = __int128;

// Is v strictly inside the CCW arc from u to w (all nonzero)?
inline bool ccw_arc_contains(Vec2i u, Vec2i w, Vec2i v) {
  std::int64_t uw = cross(u, w);
  std::int64_t uv = cross(u, v);
  std::int64_t vw = cross(v, w);
  if (uw > 0) return uv > 0 && vw > 0;
  if (uw < 0) return uv > 0 || vw > 0;
  // u and w parallel: same direction means a degenerate (straight) corner.
  if (dot(u, w) > 0) return uv > 0;
  throw contract_error("ccw_arc_contains: path reverses onto itself");
}

struct Feature {
  // squared distance num/den, den > 0
  i128 num = 0;
  std::int64_t den = 1;
  int segment = -1;   // nearest segment
  int corner = -1;    // interior corner index if the projection clamps there
};

inline bool closer(const Feature& a, const Feature& b) {
  return a.num * b.den < b.num * a.den;
}

}  // namespace detail

// Side of point p relative to the oriented polyline: +1 left, -1 right.
// The polyline must not pass through p.
inline int side_of_polyline(const std::vector<Vec2i>& pts, Vec2i p) {
  using detail::Feature;
  if (pts.size() < 2)
    throw contract_error("side_of_polyline: need at least one segment");
  Feature best;
  bool have = false;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    Vec2i a = pts[i], b = pts[i + 1];
    Vec2i d = b - a;
    std::int64_t len2 = dot(d, d);
    if (len2 == 0) continue;
    std::int64_t t_num = dot(p - a, d);
    Feature f;
    if (t_num <= 0) {
      Vec2i r = p - a;
      f.num = static_cast<detail::i128>(dot(r, r));
      f.den = 1;
      f.segment = static_cast<int>(i);
      f.corner = static_cast<int>(i);
    } else if (t_num >= len2) {
      Vec2i r = p - b;
      f.num = static_cast<detail::i128>(dot(r, r));
      f.den = 1;
      f.segment = static_cast<int>(i);
      f.corner = static_cast<int>(i + 1);
    } else {
      std::int64_t c = cross(d, p - a);
      f.num = static_cast<detail::i128>(c) * c;
      f.den = len2;
      f.segment = static_cast<int>(i);
      f.corner = -1;
    }
    if (!have || detail::closer(f, best)) {
      best = f;
      have = true;
    }
  }
  if (!have) throw contract_error("side_of_polyline: degenerate polyline");
  if (best.num == 0)
    throw contract_error("side_of_polyline: point lies on the polyline");

  if (best.corner < 0 || best.corner == 0 ||
      best.corner == static_cast<int>(pts.size()) - 1) {
    // Segment interior, or an end point: use the segment's line.
    Vec2i a = pts[static_cast<std::size_t>(best.segment)];
    Vec2i b = pts[static_cast<std::size_t>(best.segment) + 1];
    std::int64_t c = cross(b - a, p - a);
    if (c == 0)
      throw contract_error("side_of_polyline: point on a segment line end");
    return c > 0 ? 1 : -1;
  }
  // Interior corner: left iff direction(p - corner) lies in the CCW arc from
  // the outgoing direction to the reversed incoming direction.
  std::size_t k = static_cast<std::size_t>(best.corner);
  Vec2i x = pts[k];
  Vec2i din = x - pts[k - 1];
  Vec2i dout = pts[k + 1] - x;
  Vec2i rev{-din.x, -din.y};
  return detail::ccw_arc_contains(dout, rev, p - x) ? 1 : -1;
}

// ---------------------------------------------------------------------------
// Paths and steps

struct ScatteringPath {
  std::vector<Face> waypoints;
};

enum class StepClass : std::uint8_t { hh, pp, hp };

inline const char* to_string(StepClass c) {
  switch (c) {
    case StepClass::hh: return "hh";
    case StepClass::pp: return "pp";
    default: return "hp";
  }
}

// One passage of the path by a lattice site. The partition stores which coin
// directions of the incoming and outgoing edge centers lie on the left of
// the oriented path.
struct PathStep {
  Site site;
  StepClass cls = StepClass::hh;
  int sign = 0;                  // +-1 for hp passages, 0 otherwise
  std::array<bool, 3> in_left{};   // S_in: in-edge d on the left
  std::array<bool, 3> out_left{};  // S_out: out-edge d on the left
  int variant = 0;               // 1..6 within the hh or pp table, 0 for hp
};

namespace detail {

struct LocalVertex {
  bool incoming = false;
  int dir = 0;
  Vec2i pos;
};

inline std::array<LocalVertex, 6> local_vertices(const Site& x) {
  std::array<LocalVertex, 6> out;
  for (int d = 1; d <= 3; ++d) {
    Site n = shift_target(x, d);
    out[static_cast<std::size_t>(d - 1)] =
        LocalVertex{false, d, directed_center(x, n)};
    Site s = shift_source(x, d);
    out[static_cast<std::size_t>(2 + d)] =
        LocalVertex{true, d, directed_center(s, x)};
  }
  return out;
}

// Variant tables for the six hh and six pp passages. The bindings follow
// from the left/right partition of the six local edge centers: hh passages
// cut the two centers of the edge shared by the entry and exit plaquettes,
// pp passages cut the two centers offset into the traversed sector. Under
// the handedness fixed by the reference hh block, the pp set is forced to
// the three diagonals plus the cyclic triple (2,3), (3,1), (1,2); no
// orientation convention can produce a transposed entry such as (2,1) in
// the third slot.
inline int hh_variant(int i, int j) {
  static constexpr int table[6][2] = {{2, 1}, {1, 3}, {3, 2},
                                      {2, 3}, {3, 1}, {1, 2}};
  for (int v = 0; v < 6; ++v)
    if (table[v][0] == i && table[v][1] == j) return v + 1;
  return 0;
}

inline int pp_variant(int i, int j) {
  static constexpr int table[6][2] = {{2, 3}, {3, 1}, {1, 2},
                                      {2, 2}, {3, 3}, {1, 1}};
  for (int v = 0; v < 6; ++v)
    if (table[v][0] == i && table[v][1] == j) return v + 1;
  return 0;
}

}  // namespace detail

// Coin coefficient (i, j) bound by an hh or pp step: the unique out-direction
// and in-direction singled out by the partition. hp steps carry none.
inline std::array<int, 2> step_coefficient(const PathStep& step) {
  if (step.cls == StepClass::hp)
    throw contract_error("step_coefficient: hp steps carry no coefficient");
  int n_in = 0, n_out = 0;
  for (int d = 0; d < 3; ++d) {
    n_in += step.in_left[static_cast<std::size_t>(d)];
    n_out += step.out_left[static_cast<std::size_t>(d)];
  }
  bool minority_left = n_in == 1;
  std::array<int, 2> out{0, 0};
  for (int d = 0; d < 3; ++d) {
    bool pick_out = step.out_left[static_cast<std::size_t>(d)] == minority_left;
    bool pick_in = step.in_left[static_cast<std::size_t>(d)] == minority_left;
    if (pick_out) out[0] = d + 1;
    if (pick_in) out[1] = d + 1;
  }
  return out;
}

// Phi^2 Q_x as a 3x3 matrix on the incoming subspace, built from the left
// partition and the local coin action.
inline Mat3 phi_block(const PathStep& step, const Mat3& coin) {
  Mat3 m = Mat3::Zero();
  auto in_left = [&](int j) { return step.in_left[static_cast<std::size_t>(j)]; };
  auto out_left = [&](int i) {
    return step.out_left[static_cast<std::size_t>(i)];
  };
  for (int j = 0; j < 3; ++j)
    for (int jp = 0; jp < 3; ++jp) {
      if (in_left(j) && in_left(jp)) {
        cd v(0, 0);
        for (int i = 0; i < 3; ++i)
          if (!out_left(i)) v += std::conj(coin(i, j)) * coin(i, jp);
        m(j, jp) = v;
      } else if (!in_left(j) && !in_left(jp)) {
        cd v(0, 0);
        for (int i = 0; i < 3; ++i)
          if (out_left(i)) v += std::conj(coin(i, j)) * coin(i, jp);
        m(j, jp) = v;
      }
    }
  return m;
}

inline double phi_norm(const PathStep& step, const Mat3& coin) {
  if (step.cls == StepClass::hp) return 1.0;
  auto [i, j] = step_coefficient(step);
  double c = std::abs(coin(i - 1, j - 1));
  return std::sqrt(std::max(0.0, 1.0 - c * c));
}

// Segment the waypoint list into passages and derive each passage's left
// partition from the explicit routing. The path must start and end on a
// hexagon or parallelogram and respect face adjacency throughout.
inline std::vector<PathStep> classify_path(const ScatteringPath& path) {
  const auto& wps = path.waypoints;
  if (wps.size() < 3) throw contract_error("classify_path: path too short");
  for (std::size_t i = 0; i + 1 < wps.size(); ++i)
    if (!faces_adjacent(wps[i], wps[i + 1]))
      throw contract_error(
          "classify_path: waypoints " + std::to_string(i) + " and " +
          std::to_string(i + 1) +
          " are not adjacent faces (corner crossings are not allowed)");

  auto is_boundary = [](const Face& f) {
    return f.kind == FaceKind::hexagon || f.kind == FaceKind::parallelogram;
  };
  if (!is_boundary(wps.front()) || !is_boundary(wps.back()))
    throw contract_error(
        "classify_path: path must start and end on a hexagon or parallelogram");

  std::vector<PathStep> steps;
  std::size_t seg_start = 0;
  for (std::size_t i = 1; i < wps.size(); ++i) {
    if (!is_boundary(wps[i])) continue;
    // Passage from seg_start to i with interior faces strictly between.
    if (i == seg_start + 1)
      throw contract_error("classify_path: adjacent boundary faces");
    std::optional<Site> owner;
    for (std::size_t k = seg_start + 1; k < i; ++k) {
      const Face& f = wps[k];
      Site s;
      if (f.kind == FaceKind::triangle) {
        s = *site_at(f.center);
      } else if (f.kind == FaceKind::trapezoid) {
        s = detail::trapezoid_info(f.center)->site;
      } else {
        throw contract_error("classify_path: interior face of wrong kind");
      }
      if (owner && !(*owner == s))
        throw contract_error("classify_path: a step must pass a single site");
      owner = s;
    }
    PathStep step;
    step.site = *owner;

    const bool from_hex = wps[seg_start].kind == FaceKind::hexagon;
    const bool to_hex = wps[i].kind == FaceKind::hexagon;
    step.cls = from_hex && to_hex   ? StepClass::hh
               : !from_hex && !to_hex ? StepClass::pp
                                      : StepClass::hp;

    // Oriented local polyline with one anchor on each side.
    std::vector<Vec2i> poly;
    Vec2i entry = wps[seg_start].center;
    Vec2i first_inner = wps[seg_start + 1].center;
    poly.push_back(seg_start > 0 ? wps[seg_start - 1].center
                                 : entry + (entry - first_inner));
    for (std::size_t k = seg_start; k <= i; ++k) poly.push_back(wps[k].center);
    Vec2i exit = wps[i].center;
    Vec2i last_inner = wps[i - 1].center;
    poly.push_back(i + 1 < wps.size() ? wps[i + 1].center
                                      : exit + (exit - last_inner));

    int n_in = 0, n_out = 0;
    for (const auto& v : detail::local_vertices(step.site)) {
      bool left = side_of_polyline(poly, v.pos) > 0;
      if (v.incoming) {
        step.in_left[static_cast<std::size_t>(v.dir - 1)] = left;
        n_in += left;
      } else {
        step.out_left[static_cast<std::size_t>(v.dir - 1)] = left;
        n_out += left;
      }
    }

    if (step.cls == StepClass::hp) {
      step.sign = n_out - n_in;
      if (step.sign != 1 && step.sign != -1)
        throw contract_error("classify_path: hp passage with bad partition");
    } else {
      if (n_in != n_out || n_in == 0 || n_in == 3)
        throw contract_error("classify_path: hh/pp passage with bad partition");
      auto [ci, cj] = step_coefficient(step);
      step.variant = step.cls == StepClass::hh ? detail::hh_variant(ci, cj)
                                               : detail::pp_variant(ci, cj);
      if (step.variant == 0)
        throw contract_error("classify_path: passage outside the variant table");
    }
    steps.push_back(step);
    seg_start = i;
  }
  if (steps.empty()) throw contract_error("classify_path: no passages");
  return steps;
}

// ---------------------------------------------------------------------------
// Index computation

struct PhiReport {
  bool well_defined = false;
  std::optional<int> index;
  enum class Classification {
    not_well_defined,
    bounded_only,
    compact,
    trace_class
  } classification = Classification::not_well_defined;
  double trace_estimate = 0.0;           // sum of tr |Phi| Q_x over passages
  std::map<Site, double> site_norms;     // sqrt(1 - |c|^2) per hh/pp passage
  int hp_count = 0;
  double min_outer_coefficient = 0.0;    // min |c| over the outer half
};

struct IndexOptions {
  double radius = 0.0;                // window |x| <= radius is ignored
  double well_defined_floor = 1e-8;   // strict positivity threshold
  double compact_margin = 1e-6;       // outer-half |c| >= 1 - margin
  double trace_tail_bound = 1e-6;     // outer-half tail sum bound
};

inline PhiReport compute_index(const ScatteringPath& path, const CoinField& coins,
                               const IndexOptions& opt = {}) {
  auto steps = classify_path(path);
  if (steps.front().cls != StepClass::hh || steps.back().cls != StepClass::pp)
    throw contract_error(
        "compute_index: path is not relevant (must open with hh and close "
        "with pp passages)");
  std::set<Face> seen;
  for (const Face& f : path.waypoints)
    if (!seen.insert(f).second)
      throw contract_error("compute_index: path contains a loop");

  PhiReport report;
  const Site origin{0, 0, Sub::A};
  int max_dist = 0;
  for (const PathStep& s : steps)
    max_dist = std::max(max_dist, graph_distance(origin, s.site));

  int signed_hp = 0;
  int dim_count = 0;
  double inf_c = 2.0;
  double outer_min = 2.0;
  double outer_tail = 0.0;
  for (const PathStep& s : steps) {
    int n_in = s.in_left[0] + s.in_left[1] + s.in_left[2];
    int n_out = s.out_left[0] + s.out_left[1] + s.out_left[2];
    dim_count += n_out - n_in;
    int dist = graph_distance(origin, s.site);
    if (s.cls == StepClass::hp) {
      signed_hp += s.sign;
      ++report.hp_count;
      report.trace_estimate += 1.0;  // the hp block has singular values 1,0,0
      continue;
    }
    auto [i, j] = step_coefficient(s);
    double c = std::abs(coins.at(s.site)(i - 1, j - 1));
    double norm = std::sqrt(std::max(0.0, 1.0 - c * c));
    report.site_norms.emplace(s.site, norm);
    report.trace_estimate += 2.0 * norm;
    if (dist > opt.radius) inf_c = std::min(inf_c, c);
    if (2 * dist > max_dist) {
      outer_min = std::min(outer_min, c);
      outer_tail += norm;
    }
  }
  if (signed_hp != dim_count)
    throw numerical_error("compute_index: hp count and dimension count differ");

  report.min_outer_coefficient = outer_min > 1.5 ? 0.0 : outer_min;
  report.well_defined = inf_c > opt.well_defined_floor && inf_c <= 1.5;
  if (!report.well_defined) {
    report.classification = PhiReport::Classification::not_well_defined;
    return report;
  }
  report.index = signed_hp;
  if (outer_tail <= opt.trace_tail_bound)
    report.classification = PhiReport::Classification::trace_class;
  else if (outer_min >= 1.0 - opt.compact_margin)
    report.classification = PhiReport::Classification::compact;
  else
    report.classification = PhiReport::Classification::bounded_only;
  return report;
}

// ---------------------------------------------------------------------------
// Path construction and normalization

// Canonical index-carrying path: hh passages down the A(0, m) column binding
// coefficient (2,1), one hp transition, then pp passages alternating down the
// A(1,-m)/B(1,-m) line binding (1,2) and (3,3).
inline ScatteringPath reference_index_path(int hh_legs, int pp_legs) {
  if (hh_legs < 1 || pp_legs < 1)
    throw contract_error("reference_index_path: need at least one leg each");
  ScatteringPath path;
  auto hexR = [](const Site& a) { return adjacent_hexagons(a)[0]; };
  auto hexL = [](const Site& a) { return adjacent_hexagons(a)[1]; };
  auto hexD = [](const Site& a) { return adjacent_hexagons(a)[2]; };

  // hh tail: enter at hex R of A(0, hh_legs-1), descend to A(0, 0).
  Site top{0, hh_legs - 1, Sub::A};
  path.waypoints.push_back(face_hexagon(hexR(top)));
  for (int m = hh_legs - 1; m >= 0; --m) {
    Site x{0, m, Sub::A};
    path.waypoints.push_back(face_trapezoid(x, hexR(x)));
    path.waypoints.push_back(face_triangle(x));
    path.waypoints.push_back(face_trapezoid(x, hexD(x)));
    path.waypoints.push_back(face_hexagon(hexD(x)));
  }
  // hp transition at A(1,-1): from hex D(A(0,0)) == hex L(A(1,-1)) into the
  // parallelogram toward B(1,-2).
  Site pivot{1, -1, Sub::A};
  path.waypoints.push_back(face_trapezoid(pivot, hexL(pivot)));
  path.waypoints.push_back(face_parallelogram(pivot, Site{1, -2, Sub::B}));
  // pp tail down the column x = 1.
  for (int m = 2; m < 2 + pp_legs; ++m) {
    Site b{1, -m, Sub::B};
    Site a{1, -m, Sub::A};
    path.waypoints.push_back(
        face_trapezoid(b, adjacent_hexagons(b)[1]));  // sector BR
    path.waypoints.push_back(face_parallelogram(b, a));
    path.waypoints.push_back(face_trapezoid(a, hexL(a)));
    path.waypoints.push_back(face_parallelogram(a, Site{1, -m - 1, Sub::B}));
  }
  return path;
}

// Remove loops: whenever a face repeats, excise the enclosed cycle. The index
// is invariant under such finite-rank changes of the projection.
inline ScatteringPath remove_loops(const ScatteringPath& path) {
  std::vector<Face> out;
  std::map<Face, std::size_t> position;
  for (const Face& f : path.waypoints) {
    auto it = position.find(f);
    if (it != position.end()) {
      while (out.size() > it->second + 1) {
        position.erase(out.back());
        out.pop_back();
      }
      continue;
    }
    position.emplace(f, out.size());
    out.push_back(f);
  }
  return ScatteringPath{std::move(out)};
}

namespace detail {

// Plaquette centers form a triangular lattice; neighbors share one edge.
inline std::array<Vec2i, 6> hexagon_neighbors(Vec2i c) {
  return {c + Vec2i{128, 0},  c + Vec2i{-128, 0}, c + Vec2i{64, 192},
          c + Vec2i{-64, 192}, c + Vec2i{64, -192}, c + Vec2i{-64, -192}};
}

// Waypoints realizing the hexagon-to-hexagon move through the smaller shared
// ring site.
inline void append_hexagon_move(std::vector<Face>& wps, Vec2i from, Vec2i to) {
  Vec2i mid{(from.x + to.x) / 2, (from.y + to.y) / 2};
  auto edge = parallelogram_info(mid);
  if (!edge) throw contract_error("append_hexagon_move: plaquettes not adjacent");
  Site x = edge->a < edge->b ? edge->a : edge->b;
  wps.push_back(face_trapezoid(x, from));
  wps.push_back(face_triangle(x));
  wps.push_back(face_trapezoid(x, to));
  wps.push_back(face_hexagon(to));
}

}  // namespace detail

// Canonical form of a relevant path: loops removed; when the path performs
// more than one hexagon/parallelogram transition, the middle is spliced out
// and replaced by an hh corridor ending in a single hp passage. The index is
// unchanged.
inline ScatteringPath normalize_path(const ScatteringPath& path) {
  ScatteringPath clean = remove_loops(path);
  auto steps = classify_path(clean);
  int hp = 0;
  for (const auto& s : steps)
    if (s.cls == StepClass::hp) ++hp;
  bool ordered = true;
  {
    bool seen_pp = false;
    for (const auto& s : steps) {
      if (s.cls != StepClass::hh) seen_pp = true;
      if (seen_pp && s.cls == StepClass::hh) ordered = false;
    }
  }
  if (hp <= 1 && ordered) return clean;

  const auto& wps = clean.waypoints;
  // End of the initial pure-hexagon prefix.
  std::size_t h_anchor = 0;
  for (std::size_t i = 0; i < wps.size(); ++i) {
    if (wps[i].kind == FaceKind::parallelogram) break;
    if (wps[i].kind == FaceKind::hexagon) h_anchor = i;
  }
  // Start of the final pure-parallelogram suffix.
  std::size_t p_anchor = wps.size() - 1;
  for (std::size_t i = wps.size(); i-- > 0;) {
    if (wps[i].kind == FaceKind::hexagon) break;
    if (wps[i].kind == FaceKind::parallelogram) p_anchor = i;
  }
  if (wps[h_anchor].kind != FaceKind::hexagon ||
      wps[p_anchor].kind != FaceKind::parallelogram || h_anchor >= p_anchor)
    throw contract_error("normalize_path: path has no splice anchors");

  // BFS over plaquettes from the prefix anchor to either flank of the target
  // parallelogram's edge.
  auto edge = detail::parallelogram_info(wps[p_anchor].center);
  auto flanks = edge_hexagons(edge->a, edge->b);
  std::map<Vec2i, Vec2i> parent;
  std::deque<Vec2i> queue;
  Vec2i start = wps[h_anchor].center;
  parent.emplace(start, start);
  queue.push_back(start);
  std::optional<Vec2i> goal;
  while (!queue.empty() && !goal) {
    Vec2i cur = queue.front();
    queue.pop_front();
    if (cur == flanks[0] || cur == flanks[1]) {
      goal = cur;
      break;
    }
    for (const Vec2i& nb : detail::hexagon_neighbors(cur))
      if (parent.emplace(nb, cur).second) queue.push_back(nb);
  }
  if (!goal) throw contract_error("normalize_path: no hexagon corridor found");
  std::vector<Vec2i> corridor{*goal};
  while (corridor.back() != start) corridor.push_back(parent[corridor.back()]);
  std::reverse(corridor.begin(), corridor.end());

  std::vector<Face> out(wps.begin(), wps.begin() + static_cast<long>(h_anchor) + 1);
  for (std::size_t i = 0; i + 1 < corridor.size(); ++i)
    detail::append_hexagon_move(out, corridor[i], corridor[i + 1]);
  // Single hp passage into the target parallelogram; both edge endpoints sit
  // on the goal plaquette's ring.
  Site x = edge->a < edge->b ? edge->a : edge->b;
  out.push_back(face_trapezoid(x, *goal));
  out.insert(out.end(), wps.begin() + static_cast<long>(p_anchor), wps.end());
  return remove_loops(ScatteringPath{std::move(out)});
}

// ---------------------------------------------------------------------------
// Scattering graph region

struct EdgeCenter {
  int id = -1;
  Site from, to;
  int dir = 0;  // shift direction of the move from -> to
  Vec2i pos;
};

struct SiteScattering {
  Site site;
  std::array<int, 3> incoming{-1, -1, -1};  // center ids by coin direction
  std::array<int, 3> outgoing{-1, -1, -1};
  bool complete = false;
};

struct Link {
  int from_center = -1;  // incoming edge center of the site
  int to_center = -1;    // outgoing edge center
  int out_dir = 0;       // coefficient row i
  int in_dir = 0;        // coefficient column j
  Site site;
};

struct ScatteringRegion {
  int radius = 0;
  std::vector<EdgeCenter> centers;
  std::vector<SiteScattering> sites;
  std::vector<Link> links;

  const SiteScattering* find_site(const Site& s) const {
    for (const auto& x : sites)
      if (x.site == s) return &x;
    return nullptr;
  }
};

// Enumerate directed edge centers and links within a graph-distance radius
// of the origin, with the per-site bijections between incoming edges and
// coin directions (and outgoing edges and the shifted directions).
inline ScatteringRegion build_scattering_region(int radius) {
  if (radius < 2) throw contract_error("build_scattering_region: radius >= 2");
  ScatteringRegion region;
  region.radius = radius;
  auto dist = bfs_distances(Site{0, 0, Sub::A}, radius);

  std::map<std::pair<Site, Site>, int> center_ids;
  auto center_id = [&](const Site& from, const Site& to) {
    auto key = std::make_pair(from, to);
    auto it = center_ids.find(key);
    if (it != center_ids.end()) return it->second;
    EdgeCenter c;
    c.id = static_cast<int>(region.centers.size());
    c.from = from;
    c.to = to;
    for (int d = 1; d <= 3; ++d)
      if (shift_target(from, d) == to) c.dir = d;
    c.pos = directed_center(from, to);
    center_ids.emplace(key, c.id);
    region.centers.push_back(c);
    return c.id;
  };

  std::vector<Site> ordered;
  for (const auto& [site, d] : dist) ordered.push_back(site);
  std::sort(ordered.begin(), ordered.end());
  for (const Site& x : ordered) {
    SiteScattering s;
    s.site = x;
    s.complete = true;
    for (int d = 1; d <= 3; ++d) {
      Site src = shift_source(x, d);
      Site tgt = shift_target(x, d);
      if (dist.count(src))
        s.incoming[static_cast<std::size_t>(d - 1)] = center_id(src, x);
      else
        s.complete = false;
      if (dist.count(tgt))
        s.outgoing[static_cast<std::size_t>(d - 1)] = center_id(x, tgt);
      else
        s.complete = false;
    }
    if (s.complete) {
      for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j)
          region.links.push_back(Link{s.incoming[static_cast<std::size_t>(j - 1)],
                                      s.outgoing[static_cast<std::size_t>(i - 1)],
                                      i, j, x});
    }
    region.sites.push_back(s);
  }
  return region;
}

}  // namespace hexwalk
