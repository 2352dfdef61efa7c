/* Copyright 2026 The rsgrape Authors. All Rights Reserved.
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at
    http://www.apache.org/licenses/LICENSE-2.0
Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <cmath>
#include <cstdint>

namespace rsgrape::rng {

// Counter-based generation: every random value is a pure function of its
// integer coordinates, so parallel draws need no shared state and replay
// is exact regardless of thread count or call order.

/// splitmix64 finalizer (Steele, Lea, Flood; Vigna's fixed-increment form).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += UINT64_C(0x9E3779B97F4A7C15);
  x = (x ^ (x >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
  x = (x ^ (x >> 27)) * UINT64_C(0x94D049BB133111EB);
  return x ^ (x >> 31);
}

/// Absorbs one coordinate word into a running hash state.
constexpr std::uint64_t combine(std::uint64_t state, std::uint64_t word) {
  return splitmix64(state ^ (word + UINT64_C(0x9E3779B97F4A7C15) +
                             (state << 12) + (state >> 4)));
}

/// 64-bit word addressed by (seed, tag, iteration, index, dim, sub).
constexpr std::uint64_t word_at(std::uint64_t seed, std::uint64_t tag,
                                std::uint64_t iteration, std::uint64_t index,
                                std::uint64_t dim = 0, std::uint64_t sub = 0) {
  std::uint64_t h = splitmix64(seed);
  h = combine(h, tag);
  h = combine(h, iteration);
  h = combine(h, index);
  h = combine(h, dim);
  h = combine(h, sub);
  return h;
}

/// Maps a 64-bit word to a double in [0, 1) using the top 53 bits.
inline double to_unit(std::uint64_t word) {
  return static_cast<double>(word >> 11) * 0x1.0p-53;
}

inline double uniform(std::uint64_t word, double lo, double hi) {
  return lo + to_unit(word) * (hi - lo);
}

/// Box-Muller from two independent words; the first is kept away from zero
/// so the logarithm stays finite.
inline double gaussian(std::uint64_t word1, std::uint64_t word2, double mean,
                       double stddev) {
  const double u1 = (static_cast<double>(word1 >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = to_unit(word2);
  const double mag = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * mag * std::cos(6.283185307179586476925287 * u2);
}

}  // namespace rsgrape::rng
