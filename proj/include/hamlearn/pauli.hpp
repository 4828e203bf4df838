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

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hamlearn/common.hpp"

namespace hamlearn {

/// Single-site operator letters. Proj0 (= |0><0|) only appears while the PXP
/// builder assembles terms; every stored Hamiltonian contains pure
/// {I, X, Y, Z} strings.
enum class PauliLetter : char {
  I = 'I',
  X = 'X',
  Y = 'Y',
  Z = 'Z',
  Proj0 = 'P',
};

inline PauliLetter letter_from_char(char c) {
  switch (c) {
    case 'I': return PauliLetter::I;
    case 'X': return PauliLetter::X;
    case 'Y': return PauliLetter::Y;
    case 'Z': return PauliLetter::Z;
    case 'P': return PauliLetter::Proj0;
    default:
      throw std::invalid_argument(std::string("unknown Pauli letter '") + c +
                                  "'");
  }
}

/// Bit-mask form of a Pauli string, precomputed for O(2^N) application.
///
/// Site/bit convention (fixed project-wide): sites are 1-indexed in
/// user-facing notation and 0-indexed internally; basis-state index b carries
/// site 1 as its most significant bit, i.e. internal site s occupies bit
/// (N-1-s) counted from the LSB.
struct StringMasks {
  std::uint64_t flip = 0;    // bits where the letter is X or Y
  std::uint64_t phase = 0;   // bits where the letter is Y or Z
  std::uint64_t proj = 0;    // bits where the letter is Proj0
  complex base_phase = 1.0;  // i^(#Y letters)
};

/// A tensor product of single-site operators over N sites.
class PauliString {
 public:
  PauliString() = default;

  explicit PauliString(std::vector<PauliLetter> letters)
      : letters_(std::move(letters)) {
    if (letters_.empty()) throw std::invalid_argument("empty Pauli string");
  }

  /// Parses "IXYZ..." (site 1 first).
  explicit PauliString(std::string_view s) {
    if (s.empty()) throw std::invalid_argument("empty Pauli string");
    letters_.reserve(s.size());
    for (char c : s) letters_.push_back(letter_from_char(c));
  }

  int num_sites() const { return static_cast<int>(letters_.size()); }

  /// Letter at internal (0-indexed) site.
  PauliLetter letter(int site) const {
    return letters_[static_cast<std::size_t>(site)];
  }

  const std::vector<PauliLetter>& letters() const { return letters_; }

  bool is_pure_pauli() const {
    for (PauliLetter l : letters_)
      if (l == PauliLetter::Proj0) return false;
    return true;
  }

  /// Number of non-identity letters (the polynomial order of the term).
  int weight() const {
    int w = 0;
    for (PauliLetter l : letters_)
      if (l != PauliLetter::I) ++w;
    return w;
  }

  std::string str() const {
    std::string out;
    out.reserve(letters_.size());
    for (PauliLetter l : letters_) out.push_back(static_cast<char>(l));
    return out;
  }

  StringMasks masks() const {
    StringMasks m;
    const int n = num_sites();
    int ny = 0;
    for (int s = 0; s < n; ++s) {
      std::uint64_t bit = 1ull << (n - 1 - s);
      switch (letters_[static_cast<std::size_t>(s)]) {
        case PauliLetter::I: break;
        case PauliLetter::X: m.flip |= bit; break;
        case PauliLetter::Y:
          m.flip |= bit;
          m.phase |= bit;
          ++ny;
          break;
        case PauliLetter::Z: m.phase |= bit; break;
        case PauliLetter::Proj0: m.proj |= bit; break;
      }
    }
    static const complex ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    m.base_phase = ipow[ny % 4];
    return m;
  }

  bool operator==(const PauliString& o) const = default;

 private:
  std::vector<PauliLetter> letters_;
};

/// out = (matrix of masks) * in over 2^n amplitudes. in and out must not
/// alias. Basis states with a 1 under a Proj0 letter are annihilated.
inline void apply_masks(const StringMasks& m, int n,
                        std::span<const complex> in, std::span<complex> out) {
  const std::size_t dim = 1ull << n;
  for (std::size_t i = 0; i < dim; ++i) out[i] = 0.0;
  for (std::size_t b = 0; b < dim; ++b) {
    if ((b & m.proj) != 0) continue;
    complex amp = in[b];
    if (std::popcount(b & m.phase) & 1) amp = -amp;
    out[b ^ m.flip] = m.base_phase * amp;
  }
}

/// out += coeff * (matrix of masks) * in. Accumulating variant used by the
/// weighted-sum kernels.
inline void accumulate_masks(const StringMasks& m, int n, double coeff,
                             std::span<const complex> in,
                             std::span<complex> out) {
  const std::size_t dim = 1ull << n;
  const complex scale = coeff * m.base_phase;
  for (std::size_t b = 0; b < dim; ++b) {
    if ((b & m.proj) != 0) continue;
    complex amp = in[b];
    if (std::popcount(b & m.phase) & 1) amp = -amp;
    out[b ^ m.flip] += scale * amp;
  }
}

}  // namespace hamlearn
