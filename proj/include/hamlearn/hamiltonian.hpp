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

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hamlearn/pauli.hpp"
#include "hamlearn/statevector.hpp"

namespace hamlearn {

using MatrixXcd = Eigen::MatrixXcd;

/// Weighted sum of pure {I,X,Y,Z} Pauli strings with real coefficients.
/// Projector letters never appear here; the PXP builder eliminates them
/// before construction so every downstream code path sees genuine Paulis.
class PauliSumHamiltonian {
 public:
  struct Term {
    double coeff;
    PauliString string;
  };

  PauliSumHamiltonian(int num_sites, std::vector<Term> terms,
                      std::vector<int> term_tags = {})
      : num_sites_(num_sites),
        terms_(std::move(terms)),
        term_tags_(std::move(term_tags)) {
    if (num_sites < 1) throw std::invalid_argument("need at least one site");
    for (const Term& t : terms_) {
      if (t.string.num_sites() != num_sites)
        throw std::invalid_argument("term length differs from num_sites");
      if (!t.string.is_pure_pauli())
        throw std::invalid_argument(
            "stored Hamiltonians must not contain projector letters");
    }
    if (!term_tags_.empty() && term_tags_.size() != terms_.size())
      throw std::invalid_argument("term_tags length mismatch");
    masks_.reserve(terms_.size());
    for (const Term& t : terms_) masks_.push_back(t.string.masks());
  }

  int num_sites() const { return num_sites_; }
  const std::vector<Term>& terms() const { return terms_; }
  const std::vector<int>& term_tags() const { return term_tags_; }
  const std::vector<StringMasks>& masks() const { return masks_; }

 private:
  int num_sites_;
  std::vector<Term> terms_;
  std::vector<int> term_tags_;  // polynomial order per term, may be empty
  std::vector<StringMasks> masks_;
};

inline StateVector apply_string(const PauliString& s, const StateVector& psi) {
  if (s.num_sites() != psi.num_sites())
    throw std::invalid_argument("string/state size mismatch");
  StateVector out(psi.num_sites());
  apply_masks(s.masks(), psi.num_sites(), psi.amplitudes(), out.amplitudes());
  return out;
}

inline StateVector apply_hamiltonian(const PauliSumHamiltonian& h,
                                     const StateVector& psi) {
  if (h.num_sites() != psi.num_sites())
    throw std::invalid_argument("hamiltonian/state size mismatch");
  StateVector out(psi.num_sites());
  for (std::size_t j = 0; j < h.terms().size(); ++j)
    accumulate_masks(h.masks()[j], h.num_sites(), h.terms()[j].coeff,
                     psi.amplitudes(), out.amplitudes());
  return out;
}

namespace detail {

inline Eigen::Matrix2cd letter_matrix(PauliLetter l) {
  Eigen::Matrix2cd m;
  switch (l) {
    case PauliLetter::I: m << 1, 0, 0, 1; break;
    case PauliLetter::X: m << 0, 1, 1, 0; break;
    case PauliLetter::Y: m << 0, complex(0, -1), complex(0, 1), 0; break;
    case PauliLetter::Z: m << 1, 0, 0, -1; break;
    case PauliLetter::Proj0: m << 1, 0, 0, 0; break;
  }
  return m;
}

inline MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
  MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace detail

/// Dense 2^N x 2^N matrix of a single string, built by literal Kronecker
/// products (site 1 is the leftmost factor). Intentionally a different code
/// path from the bit-mask application kernels so the two can be checked
/// against each other.
inline MatrixXcd dense_matrix(const PauliString& s) {
  MatrixXcd out = MatrixXcd::Identity(1, 1);
  for (int site = 0; site < s.num_sites(); ++site)
    out = detail::kron(out, detail::letter_matrix(s.letter(site)));
  return out;
}

inline MatrixXcd dense_matrix(const PauliSumHamiltonian& h,
                              int site_cap = 12) {
  if (h.num_sites() > site_cap)
    throw std::runtime_error("dense matrix request exceeds site cap");
  const Eigen::Index dim = Eigen::Index{1} << h.num_sites();
  MatrixXcd out = MatrixXcd::Zero(dim, dim);
  for (const auto& t : h.terms()) out += t.coeff * dense_matrix(t.string);
  return out;
}

// ---------------------------------------------------------------------------
// Hamiltonian families
// ---------------------------------------------------------------------------

enum class Family {
  Heisenberg,            // homogeneous couplings + local field
  AnisotropicHeisenberg,  // per-bond couplings + local field
  HeisenbergNNN,          // local fields + nearest + next-nearest couplings
  ThirdOrderHeisenberg,   // local fields + nearest + three-site couplings
  PXP,                    // projector-constrained X flips
  DenseNN,                // local fields + all 9 nearest-neighbour products
};

inline const char* family_name(Family f) {
  switch (f) {
    case Family::Heisenberg: return "heisenberg";
    case Family::AnisotropicHeisenberg: return "anisotropic_heisenberg";
    case Family::HeisenbergNNN: return "heisenberg_nnn";
    case Family::ThirdOrderHeisenberg: return "third_order_heisenberg";
    case Family::PXP: return "pxp";
    case Family::DenseNN: return "dense_nn";
  }
  throw std::invalid_argument("unknown family");
}

inline Family family_from_name(std::string_view name) {
  if (name == "heisenberg") return Family::Heisenberg;
  if (name == "anisotropic_heisenberg") return Family::AnisotropicHeisenberg;
  if (name == "heisenberg_nnn") return Family::HeisenbergNNN;
  if (name == "third_order_heisenberg") return Family::ThirdOrderHeisenberg;
  if (name == "pxp") return Family::PXP;
  if (name == "dense_nn") return Family::DenseNN;
  throw std::invalid_argument("unknown family '" + std::string(name) + "'");
}

inline int family_param_count(Family f, int n) {
  switch (f) {
    case Family::Heisenberg: return 3 + n;
    case Family::AnisotropicHeisenberg: return 3 * (n - 1) + n;
    case Family::HeisenbergNNN: return 3 * n + 3 * (n - 1) + 3 * (n - 2);
    case Family::ThirdOrderHeisenberg:
      return 3 * n + 3 * (n - 1) + 3 * (n - 2);
    case Family::PXP: return n - 2;
    case Family::DenseNN: return 3 * n + 9 * (n - 1);
  }
  throw std::invalid_argument("unknown family");
}

/// Expands projector letters through |0><0| = (I + Z)/2, producing pure
/// Pauli strings. Order: with the string's Proj0 sites listed ascending, the
/// k-th output replaces sites selected by the bits of k with Z (so the first
/// output has no Z from any projector, the last has Z at every one).
inline std::vector<std::pair<PauliString, double>> expand_projectors(
    const PauliString& s, double weight = 1.0) {
  std::vector<int> proj_sites;
  for (int i = 0; i < s.num_sites(); ++i)
    if (s.letter(i) == PauliLetter::Proj0) proj_sites.push_back(i);
  std::vector<std::pair<PauliString, double>> out;
  const std::size_t count = std::size_t{1} << proj_sites.size();
  const double w =
      weight / static_cast<double>(std::size_t{1} << proj_sites.size());
  for (std::size_t mask = 0; mask < count; ++mask) {
    std::vector<PauliLetter> letters = s.letters();
    for (std::size_t k = 0; k < proj_sites.size(); ++k)
      letters[static_cast<std::size_t>(proj_sites[k])] =
          (mask >> k & 1) ? PauliLetter::Z : PauliLetter::I;
    out.emplace_back(PauliString(std::move(letters)), w);
  }
  return out;
}

/// One term of a parameterized family: a pure Pauli string tied to parameter
/// `param` with a fixed multiplier `weight` (1 everywhere except the PXP
/// projector expansion, where each of the four fragments carries 1/4).
struct AnsatzTerm {
  PauliString string;
  StringMasks masks;
  int param;
  double weight;
};

/// The term structure of one Hamiltonian family at fixed size, with the
/// canonical parameter layout. The same flat vector indexed by `param` serves
/// as ground truth, trainable ansatz coefficients, and the operand of the
/// relative-error metric.
///
/// Canonical parameter order (sites 1-indexed as in user-facing notation):
///   heisenberg:             [Jx, Jy, Jz, h_1..h_N]
///   anisotropic_heisenberg: [Jx_1,Jy_1,Jz_1, .., Jx_{N-1},Jy_1,..][h_1..h_N]
///                           i.e. per-bond (x,y,z) triples, then fields
///   heisenberg_nnn:         per-site (hx,hy,hz), per-bond (Jx,Jy,Jz),
///                           per-(i,i+2) pair (Kx,Ky,Kz)
///   third_order_heisenberg: per-site (hx,hy,hz), per-bond (Jx,Jy,Jz),
///                           per-(i,i+1,i+2) triple (Kx,Ky,Kz)
///   pxp:                    [J_2..J_{N-1}] (interior sites)
///   dense_nn:               per-site (hx,hy,hz), then per bond the 9
///                           couplings in row-major {X,Y,Z}x{X,Y,Z} order
class Ansatz {
 public:
  Ansatz(Family family, int num_sites, std::vector<AnsatzTerm> terms,
         int num_params, std::vector<int> param_order)
      : family_(family),
        num_sites_(num_sites),
        terms_(std::move(terms)),
        num_params_(num_params),
        param_order_(std::move(param_order)) {}

  Family family() const { return family_; }
  int num_sites() const { return num_sites_; }
  int num_params() const { return num_params_; }
  const std::vector<AnsatzTerm>& terms() const { return terms_; }

  /// Polynomial order (max non-identity weight over tied terms) per
  /// parameter; drives the order-ascending curriculum.
  const std::vector<int>& param_order() const { return param_order_; }

  PauliSumHamiltonian materialize(std::span<const double> params) const {
    check_params(params.size());
    std::vector<PauliSumHamiltonian::Term> terms;
    std::vector<int> tags;
    terms.reserve(terms_.size());
    tags.reserve(terms_.size());
    for (const AnsatzTerm& t : terms_) {
      terms.push_back({params[static_cast<std::size_t>(t.param)] * t.weight,
                       t.string});
      tags.push_back(t.string.weight());
    }
    return PauliSumHamiltonian(num_sites_, std::move(terms), std::move(tags));
  }

  /// Inverse of materialize: recovers the parameter vector from a built
  /// Hamiltonian with this exact term structure. Division by the expansion
  /// weights (powers of two) is exact, so round-trips are bit-identical.
  std::vector<double> extract(const PauliSumHamiltonian& h) const {
    if (h.num_sites() != num_sites_ || h.terms().size() != terms_.size())
      throw std::invalid_argument("hamiltonian does not match this ansatz");
    std::vector<double> params(static_cast<std::size_t>(num_params_));
    std::vector<bool> seen(static_cast<std::size_t>(num_params_), false);
    for (std::size_t j = 0; j < terms_.size(); ++j) {
      if (!(h.terms()[j].string == terms_[j].string))
        throw std::invalid_argument("term structure mismatch");
      auto p = static_cast<std::size_t>(terms_[j].param);
      if (!seen[p]) {
        params[p] = h.terms()[j].coeff / terms_[j].weight;
        seen[p] = true;
      }
    }
    return params;
  }

  /// out = sum_j params[param_j] * weight_j * P_j * in.
  void apply_weighted(std::span<const double> params,
                      std::span<const complex> in,
                      std::span<complex> out) const {
    check_params(params.size());
    for (auto& a : out) a = 0.0;
    for (const AnsatzTerm& t : terms_)
      accumulate_masks(t.masks, num_sites_,
                       params[static_cast<std::size_t>(t.param)] * t.weight,
                       in, out);
  }

  /// Accumulates d<adj, H(params) x> / d params into grad, treating complex
  /// vectors as real pairs: grad_p += w_j * Re(adj . conj-pair P_j x).
  /// scratch must hold 2^N amplitudes.
  void accumulate_param_grad(std::span<const complex> adj,
                             std::span<const complex> x,
                             std::span<complex> scratch,
                             std::span<double> grad) const {
    for (const AnsatzTerm& t : terms_) {
      apply_masks(t.masks, num_sites_, x, scratch);
      double dot = 0.0;
      for (std::size_t k = 0; k < scratch.size(); ++k)
        dot += adj[k].real() * scratch[k].real() +
               adj[k].imag() * scratch[k].imag();
      grad[static_cast<std::size_t>(t.param)] += t.weight * dot;
    }
  }

 private:
  void check_params(std::size_t got) const {
    if (got != static_cast<std::size_t>(num_params_))
      throw std::invalid_argument("wrong parameter count for family");
  }

  Family family_;
  int num_sites_;
  std::vector<AnsatzTerm> terms_;
  int num_params_;
  std::vector<int> param_order_;
};

namespace detail {

inline PauliString string_with(
    int n, std::initializer_list<std::pair<int, PauliLetter>> sites) {
  // sites are 1-indexed here, matching the family definitions.
  std::vector<PauliLetter> letters(static_cast<std::size_t>(n),
                                   PauliLetter::I);
  for (auto [site, l] : sites) letters[static_cast<std::size_t>(site - 1)] = l;
  return PauliString(std::move(letters));
}

struct AnsatzBuilder {
  int n;
  std::vector<AnsatzTerm> terms;
  std::vector<int> param_order;

  int new_param(int order) {
    param_order.push_back(order);
    return static_cast<int>(param_order.size()) - 1;
  }

  void add(const PauliString& s, int param, double weight = 1.0) {
    terms.push_back({s, s.masks(), param, weight});
  }

  // per-site field triples (hx_i, hy_i, hz_i), i = 1..n
  void add_local_fields() {
    static const PauliLetter axes[3] = {PauliLetter::X, PauliLetter::Y,
                                        PauliLetter::Z};
    for (int i = 1; i <= n; ++i)
      for (PauliLetter a : axes)
        add(string_with(n, {{i, a}}), new_param(1));
  }

  // (A_i A_{i+gap}) triples for A in {X, Y, Z}, i = 1..n-gap
  void add_matched_pairs(int gap) {
    static const PauliLetter axes[3] = {PauliLetter::X, PauliLetter::Y,
                                        PauliLetter::Z};
    for (int i = 1; i + gap <= n; ++i)
      for (PauliLetter a : axes)
        add(string_with(n, {{i, a}, {i + gap, a}}), new_param(2));
  }
};

}  // namespace detail

/// Term structure and canonical parameter layout for one family at size n.
inline Ansatz make_ansatz(Family family, int n) {
  const int min_sites =
      (family == Family::HeisenbergNNN ||
       family == Family::ThirdOrderHeisenberg || family == Family::PXP)
          ? 3
          : 2;
  if (n < min_sites)
    throw std::invalid_argument("family needs more sites");
  static const PauliLetter axes[3] = {PauliLetter::X, PauliLetter::Y,
                                      PauliLetter::Z};
  detail::AnsatzBuilder b{n, {}, {}};
  using detail::string_with;
  switch (family) {
    case Family::Heisenberg: {
      // Shared couplings: each J parameter ties all n-1 bonds.
      int jp[3];
      for (int k = 0; k < 3; ++k) jp[k] = b.new_param(2);
      for (int i = 1; i < n; ++i)
        for (int k = 0; k < 3; ++k)
          b.add(string_with(n, {{i, axes[k]}, {i + 1, axes[k]}}), jp[k]);
      for (int i = 1; i <= n; ++i)
        b.add(string_with(n, {{i, PauliLetter::X}}), b.new_param(1));
      break;
    }
    case Family::AnisotropicHeisenberg: {
      b.add_matched_pairs(1);
      for (int i = 1; i <= n; ++i)
        b.add(string_with(n, {{i, PauliLetter::X}}), b.new_param(1));
      break;
    }
    case Family::HeisenbergNNN: {
      b.add_local_fields();
      b.add_matched_pairs(1);
      b.add_matched_pairs(2);
      break;
    }
    case Family::ThirdOrderHeisenberg: {
      b.add_local_fields();
      b.add_matched_pairs(1);
      for (int i = 1; i + 2 <= n; ++i)
        for (PauliLetter a : axes)
          b.add(string_with(n, {{i, a}, {i + 1, a}, {i + 2, a}}),
                b.new_param(3));
      break;
    }
    case Family::PXP: {
      for (int i = 2; i <= n - 1; ++i) {
        int p = b.new_param(3);
        std::vector<PauliLetter> letters(static_cast<std::size_t>(n),
                                         PauliLetter::I);
        letters[static_cast<std::size_t>(i - 2)] = PauliLetter::Proj0;
        letters[static_cast<std::size_t>(i - 1)] = PauliLetter::X;
        letters[static_cast<std::size_t>(i)] = PauliLetter::Proj0;
        for (auto& [s, w] : expand_projectors(PauliString(std::move(letters))))
          b.add(s, p, w);
      }
      break;
    }
    case Family::DenseNN: {
      b.add_local_fields();
      for (int i = 1; i < n; ++i)
        for (PauliLetter a : axes)
          for (PauliLetter c : axes)
            b.add(string_with(n, {{i, a}, {i + 1, c}}), b.new_param(2));
      break;
    }
  }
  const int num_params = static_cast<int>(b.param_order.size());
  Ansatz out(family, n, std::move(b.terms), num_params,
             std::move(b.param_order));
  if (out.num_params() != family_param_count(family, n))
    throw std::logic_error("builder parameter count mismatch");
  return out;
}

inline PauliSumHamiltonian build_hamiltonian(Family family, int n,
                                             std::span<const double> params) {
  return make_ansatz(family, n).materialize(params);
}

// ---------------------------------------------------------------------------
// Hamiltonian files: {num_sites, family?, terms: [{coeff, letters}]}
// ---------------------------------------------------------------------------

inline nlohmann::json hamiltonian_to_json(
    const PauliSumHamiltonian& h, std::optional<Family> family = {}) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : h.terms())
    terms.push_back({{"coeff", t.coeff}, {"letters", t.string.str()}});
  nlohmann::json out{{"num_sites", h.num_sites()}, {"terms", terms}};
  if (family) out["family"] = family_name(*family);
  return out;
}

inline PauliSumHamiltonian hamiltonian_from_json(const nlohmann::json& j) {
  int n = j.at("num_sites").get<int>();
  std::vector<PauliSumHamiltonian::Term> terms;
  for (const auto& t : j.at("terms"))
    terms.push_back({t.at("coeff").get<double>(),
                     PauliString(t.at("letters").get<std::string>())});
  return PauliSumHamiltonian(n, std::move(terms));
}

}  // namespace hamlearn
