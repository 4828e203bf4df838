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
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hamlearn/common.hpp"
#include "hamlearn/pauli.hpp"
#include "hamlearn/rng.hpp"

namespace hamlearn {

/// 2^N complex amplitudes. Index convention: site 1 is the most significant
/// bit of the amplitude index (see StringMasks).
class StateVector {
 public:
  StateVector() = default;

  explicit StateVector(int num_sites)
      : num_sites_(num_sites), amps_(std::size_t{1} << num_sites, 0.0) {
    if (num_sites < 1) throw std::invalid_argument("need at least one site");
  }

  StateVector(int num_sites, std::vector<complex> amps)
      : num_sites_(num_sites), amps_(std::move(amps)) {
    if (amps_.size() != (std::size_t{1} << num_sites))
      throw std::invalid_argument("amplitude count is not 2^num_sites");
  }

  int num_sites() const { return num_sites_; }
  std::size_t dim() const { return amps_.size(); }

  complex& operator[](std::size_t i) { return amps_[i]; }
  const complex& operator[](std::size_t i) const { return amps_[i]; }

  std::span<complex> amplitudes() { return amps_; }
  std::span<const complex> amplitudes() const { return amps_; }

  double norm_sq() const {
    double s = 0.0;
    for (const complex& a : amps_) s += std::norm(a);
    return s;
  }

  double norm() const { return std::sqrt(norm_sq()); }

  StateVector normalized() const {
    double n = norm();
    if (n == 0.0) throw std::domain_error("cannot normalize zero state");
    StateVector out = *this;
    for (complex& a : out.amps_) a /= n;
    return out;
  }

 private:
  int num_sites_ = 0;
  std::vector<complex> amps_;
};

inline void check_same_sites(const StateVector& a, const StateVector& b) {
  if (a.num_sites() != b.num_sites())
    throw std::invalid_argument("state size mismatch");
}

/// Computational basis state |index> for n sites.
inline StateVector basis_state(int n, std::uint64_t index) {
  if (n < 1 || n > 63) throw std::invalid_argument("bad site count");
  if (index >> n) throw std::invalid_argument("basis index needs > n bits");
  StateVector psi(n);
  psi[index] = 1.0;
  return psi;
}

/// Parses a bitstring like "101" (site 1 first) into an amplitude index.
inline std::uint64_t parse_bitstring(std::string_view bits) {
  std::uint64_t idx = 0;
  for (char c : bits) {
    if (c != '0' && c != '1') throw std::invalid_argument("bad bitstring");
    idx = (idx << 1) | static_cast<std::uint64_t>(c - '0');
  }
  return idx;
}

inline std::string format_bitstring(std::uint64_t index, int n) {
  std::string out(static_cast<std::size_t>(n), '0');
  for (int s = 0; s < n; ++s)
    if (index >> (n - 1 - s) & 1) out[static_cast<std::size_t>(s)] = '1';
  return out;
}

inline complex inner_product(const StateVector& a, const StateVector& b) {
  check_same_sites(a, b);
  complex s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

/// Overlap fidelity |<a|b>|^2.
inline double fidelity(const StateVector& a, const StateVector& b) {
  return std::norm(inner_product(a, b));
}

/// Per-site measurement axes, one of {X, Y, Z} per site. Identity letters are
/// deliberately excluded: every shot then produces a full N-bit outcome.
class PauliBasis {
 public:
  explicit PauliBasis(std::vector<PauliLetter> letters)
      : letters_(std::move(letters)) {
    if (letters_.empty()) throw std::invalid_argument("empty basis");
    for (PauliLetter l : letters_)
      if (l != PauliLetter::X && l != PauliLetter::Y && l != PauliLetter::Z)
        throw std::invalid_argument("basis letters must be X, Y or Z");
  }

  explicit PauliBasis(std::string_view s) : PauliBasis(parse(s)) {}

  int num_sites() const { return static_cast<int>(letters_.size()); }
  PauliLetter letter(int site) const {
    return letters_[static_cast<std::size_t>(site)];
  }

  std::string str() const {
    std::string out;
    out.reserve(letters_.size());
    for (PauliLetter l : letters_) out.push_back(static_cast<char>(l));
    return out;
  }

  /// Uniform draw over {X,Y,Z}^n.
  static PauliBasis random(int n, SplitMix64& rng) {
    static const PauliLetter axes[3] = {PauliLetter::X, PauliLetter::Y,
                                        PauliLetter::Z};
    std::vector<PauliLetter> letters(static_cast<std::size_t>(n));
    for (auto& l : letters) l = axes[rng.next_index(3)];
    return PauliBasis(std::move(letters));
  }

  bool operator==(const PauliBasis& o) const = default;

 private:
  static std::vector<PauliLetter> parse(std::string_view s) {
    std::vector<PauliLetter> out;
    out.reserve(s.size());
    for (char c : s) out.push_back(letter_from_char(c));
    return out;
  }

  std::vector<PauliLetter> letters_;
};

namespace detail {

/// Applies the 2x2 unitary {{u00,u01},{u10,u11}} to the given internal site.
inline void apply_single_site(std::span<complex> amps, int n, int site,
                              complex u00, complex u01, complex u10,
                              complex u11) {
  const std::size_t stride = std::size_t{1} << (n - 1 - site);
  const std::size_t dim = amps.size();
  for (std::size_t base = 0; base < dim; base += 2 * stride) {
    for (std::size_t off = 0; off < stride; ++off) {
      complex a0 = amps[base + off];
      complex a1 = amps[base + off + stride];
      amps[base + off] = u00 * a0 + u01 * a1;
      amps[base + off + stride] = u10 * a0 + u11 * a1;
    }
  }
}

/// Rotates measurement axes onto the computational basis, in place:
/// Z -> identity, X -> H, Y -> H.S^dagger with S = diag(1, i).
inline void rotate_to_basis_inplace(std::span<complex> amps, int n,
                                    const PauliBasis& basis) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  for (int s = 0; s < n; ++s) {
    switch (basis.letter(s)) {
      case PauliLetter::Z:
        break;
      case PauliLetter::X:
        apply_single_site(amps, n, s, inv_sqrt2, inv_sqrt2, inv_sqrt2,
                          -inv_sqrt2);
        break;
      case PauliLetter::Y:
        apply_single_site(amps, n, s, inv_sqrt2, complex(0, -inv_sqrt2),
                          inv_sqrt2, complex(0, inv_sqrt2));
        break;
      default:
        throw std::invalid_argument("bad basis letter");
    }
  }
}

}  // namespace detail

inline StateVector rotate_to_basis(const StateVector& psi,
                                   const PauliBasis& basis) {
  if (psi.num_sites() != basis.num_sites())
    throw std::invalid_argument("basis size mismatch");
  StateVector out = psi;
  detail::rotate_to_basis_inplace(out.amplitudes(), psi.num_sites(), basis);
  return out;
}

/// Born-rule outcome distribution for measuring psi in the given basis.
/// Renormalized by the state's squared norm so that small non-unitary drift
/// (from the neural field term) still yields a valid distribution.
inline std::vector<double> outcome_probabilities(const StateVector& psi,
                                                 const PauliBasis& basis) {
  StateVector rot = rotate_to_basis(psi, basis);
  double total = rot.norm_sq();
  if (!(total > 0.0)) throw std::domain_error("zero-norm state");
  std::vector<double> p(rot.dim());
  for (std::size_t i = 0; i < rot.dim(); ++i) p[i] = std::norm(rot[i]) / total;
  return p;
}

/// M i.i.d. outcome indices drawn by inverse-CDF over the full 2^N
/// distribution (exact at the <= 256-outcome scale this library targets).
inline std::vector<std::uint64_t> sample_bitstrings(const StateVector& psi,
                                                    const PauliBasis& basis,
                                                    std::size_t shots,
                                                    SplitMix64& rng) {
  if (shots == 0) throw std::invalid_argument("need at least one shot");
  std::vector<double> p = outcome_probabilities(psi, basis);
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    cdf[i] = acc;
  }
  cdf.back() = 1.0;
  std::vector<std::uint64_t> out(shots);
  for (std::size_t s = 0; s < shots; ++s) {
    double u = rng.next_double();
    std::size_t lo = 0, hi = cdf.size() - 1;
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (cdf[mid] <= u)
        lo = mid + 1;
      else
        hi = mid;
    }
    out[s] = lo;
  }
  return out;
}

}  // namespace hamlearn
