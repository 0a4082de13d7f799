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
#include "hexwalk/rng.hpp"

namespace hexwalk {

// Correlated: one phase per site, shared by all three coin slots.
// Decorrelated: three independent phases per site.
enum class DisorderMode : std::uint8_t { correlated = 0, decorrelated = 1 };

// I.i.d. uniform phases on [0, 2*pi), realized lazily through the
// counter-based generator: the field is fully determined by
// (seed, sample, mode) and evaluation order never matters.
class DisorderField {
 public:
  DisorderField(DisorderMode mode, std::uint64_t seed, std::uint64_t sample = 0)
      : mode_(mode), seed_(seed), sample_(sample) {}

  DisorderMode mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t sample() const { return sample_; }

  // Phase attached to basis element (site, coin).
  double phase(const Site& site, int coin) const {
    const Site key{site.j - shift_.j, site.k - shift_.k, site.sub};
    int slot = mode_ == DisorderMode::correlated ? 0 : coin;
    return keyed_phase(seed_, sample_, key, slot);
  }

  cd factor(const Site& site, int coin) const {
    return std::exp(cd(0.0, phase(site, coin)));
  }

  // Same field moved by an A-lattice translation: the phase seen at site x+v
  // equals the phase the base field assigns to x.
  DisorderField translated(const Site& v) const {
    DisorderField out = *this;
    out.shift_ = Site{shift_.j + v.j, shift_.k + v.k, Sub::A};
    return out;
  }

  friend bool operator==(const DisorderField& a, const DisorderField& b) {
    return a.mode_ == b.mode_ && a.seed_ == b.seed_ && a.sample_ == b.sample_ &&
           a.shift_ == b.shift_;
  }

 private:
  DisorderMode mode_;
  std::uint64_t seed_;
  std::uint64_t sample_;
  Site shift_{0, 0, Sub::A};
};

// Deterministic sampler keyed by (seed, site, slot); the ambient box is
// irrelevant to the values and kept out of the key on purpose, so enlarging
// a box never reshuffles phases.
inline DisorderField sample_disorder(const BoxSpec& /*ambient*/, DisorderMode mode,
                                     std::uint64_t seed, std::uint64_t sample = 0) {
  return DisorderField(mode, seed, sample);
}

}  // namespace hexwalk
