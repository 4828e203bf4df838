// Copyright 2026 The hamlearn Authors
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

#include <cmath>
#include <cstdint>

namespace hamlearn {

/// SplitMix64 (Steele, Lea & Flood 2014). Chosen over std::mt19937_64 +
/// <random> distributions because the standard leaves distribution output
/// implementation-defined; this generator plus the mappings below give
/// bit-identical streams on every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Uniform integer in [0, bound). Uses rejection to avoid modulo bias.
  std::uint64_t next_index(std::uint64_t bound) {
    std::uint64_t threshold = (0 - bound) % bound;
    while (true) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  /// Standard normal via Box-Muller. Draws two uniforms per call; no spare
  /// is cached so the stream position is a pure function of the call count.
  double normal() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 == 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::uint64_t state_;
};

/// Derives an independent stream seed from (seed, stream). Feeding the mix
/// through one SplitMix64 round decorrelates consecutive stream indices.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 g(seed ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
  return g.next_u64();
}

}  // namespace hamlearn
