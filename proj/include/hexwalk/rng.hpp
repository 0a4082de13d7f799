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

#include "hexwalk/common.hpp"
#include "hexwalk/lattice.hpp"

namespace hexwalk {

// Counter-based deterministic generator. Every draw is a pure function of the
// key material, so parallel sampling is order-independent and identical seeds
// give identical fields on any platform.

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t absorb(std::uint64_t state, std::uint64_t word) {
  return mix64(state ^ word);
}

}  // namespace detail

// Reserved stream tags keep unrelated consumers of the same master seed
// statistically independent.
enum class RngStream : std::uint64_t {
  disorder = 1,
  coin_sampler = 2,
  pair_sampler = 3,
  generic = 4,
};

inline std::uint64_t keyed_u64(std::uint64_t seed, RngStream stream,
                               std::uint64_t a, std::uint64_t b,
                               std::uint64_t c, std::uint64_t d) {
  using detail::absorb;
  std::uint64_t s = detail::mix64(seed ^ 0x243f6a8885a308d3ULL);
  s = absorb(s, static_cast<std::uint64_t>(stream));
  s = absorb(s, a);
  s = absorb(s, b);
  s = absorb(s, c);
  s = absorb(s, d);
  return s;
}

// Uniform double in [0, 1) with 53 random bits.
inline double keyed_unit(std::uint64_t seed, RngStream stream, std::uint64_t a,
                         std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  return static_cast<double>(keyed_u64(seed, stream, a, b, c, d) >> 11) *
         0x1.0p-53;
}

inline std::uint64_t site_word(const Site& s) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.j)) << 33) |
         (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.k)) << 1) |
         static_cast<std::uint64_t>(s.sub);
}

// Phase in [0, 2*pi) keyed by (seed, site, slot). `sample` distinguishes
// independent disorder realizations drawn from one master seed.
inline double keyed_phase(std::uint64_t seed, std::uint64_t sample,
                          const Site& site, int slot) {
  return kTwoPi * keyed_unit(seed, RngStream::disorder, sample,
                             site_word(site), static_cast<std::uint64_t>(slot),
                             0);
}

// Small stateful convenience wrapper for test/sampler code that just needs a
// reproducible stream (still counter-based underneath).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, RngStream stream = RngStream::generic,
             std::uint64_t tag = 0)
      : seed_(seed), stream_(stream), tag_(tag) {}

  double unit() { return keyed_unit(seed_, stream_, tag_, counter_++, 0, 0); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  double phase() { return kTwoPi * unit(); }
  std::uint64_t u64() { return keyed_u64(seed_, stream_, tag_, counter_++, 0, 0); }
  // Standard normal via Box-Muller.
  double normal() {
    double u1 = unit(), u2 = unit();
    if (u1 <= 0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

 private:
  std::uint64_t seed_;
  RngStream stream_;
  std::uint64_t tag_;
  std::uint64_t counter_ = 0;
};

}  // namespace hexwalk
