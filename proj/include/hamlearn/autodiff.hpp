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
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hamlearn/common.hpp"
#include "hamlearn/hamiltonian.hpp"
#include "hamlearn/statevector.hpp"

namespace hamlearn {

// Shared forward kernels. The tape ops and the tape-free evaluation paths in
// model.hpp both call these, so recorded and plain forward values are
// bit-identical by construction.
namespace kernels {

inline void affine(std::span<const double> params, int w_off, int rows,
                   int cols, int b_off, std::span<const double> x,
                   std::span<double> y) {
  const double* w = params.data() + w_off;
  const double* b = params.data() + b_off;
  for (int r = 0; r < rows; ++r) {
    double acc = b[r];
    const double* wrow = w + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) acc += wrow[c] * x[static_cast<std::size_t>(c)];
    y[static_cast<std::size_t>(r)] = acc;
  }
}

inline void tanh_vec(std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
}

/// Complex multiply by -i on interleaved (re, im) pairs.
inline void scale_neg_i(std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i + 1 < x.size(); i += 2) {
    y[i] = x[i + 1];
    y[i + 1] = -x[i];
  }
}

inline void axpy(double alpha, std::span<const double> x,
                 std::span<const double> y, std::span<double> z) {
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = alpha * x[i] + y[i];
}

/// out = y + h*(k1 + 4*k2 + k3)/6, matching rk3_step's arithmetic exactly.
inline void rk3_combine(double h, std::span<const double> y,
                        std::span<const double> k1, std::span<const double> k2,
                        std::span<const double> k3, std::span<double> out) {
  for (std::size_t i = 0; i < y.size(); ++i)
    out[i] = y[i] + h * (k1[i] + 4.0 * k2[i] + k3[i]) / 6.0;
}

}  // namespace kernels

/// Append-only record of primitive operations with cached forward values.
/// Values are flat real vectors; complex quantities are interleaved (re, im)
/// pairs end to end, and the loss is real, so reverse mode never needs
/// Wirtinger calculus. Parameters are implicit leaves: ops that read the
/// bound parameter vector accumulate directly into the parameter gradient.
///
/// The tape borrows the parameter vector, any Ansatz passed to pauli_apply,
/// and nothing else; all three must outlive it. One tape per training step.
class Tape {
 public:
  explicit Tape(std::span<const double> params) : params_(params) {}

  std::span<const double> params() const { return params_; }
  std::size_t size() const { return nodes_.size(); }

  const std::vector<double>& value(int id) const {
    return nodes_[check_id(id)].value;
  }

  int constant(std::vector<double> v) {
    Node n{Op::Constant};
    n.value = std::move(v);
    return push(std::move(n));
  }

  /// Leaf view of params[offset .. offset+len).
  int param_slice(int offset, int len) {
    if (offset < 0 || len < 1 ||
        static_cast<std::size_t>(offset + len) > params_.size())
      throw std::invalid_argument("param_slice out of range");
    Node n{Op::ParamSlice};
    n.p0 = offset;
    n.p1 = len;
    n.value.assign(params_.begin() + offset, params_.begin() + offset + len);
    return push(std::move(n));
  }

  /// y = sum_j params[theta_off + param_j] * weight_j * P_j x  (complex).
  int pauli_apply(const Ansatz& ansatz, int theta_off, int x) {
    Node n{Op::PauliApply};
    n.a = check_id(x);
    n.ansatz = &ansatz;
    n.p0 = theta_off;
    n.value.resize(value(x).size());
    ansatz.apply_weighted(
        params_.subspan(static_cast<std::size_t>(theta_off),
                        static_cast<std::size_t>(ansatz.num_params())),
        as_complex(std::span<const double>(value(x))),
        as_complex(std::span<double>(n.value)));
    return push(std::move(n));
  }

  /// y = W x + b with W (rows x cols, row-major) at params[w_off] and b at
  /// params[b_off].
  int affine(int w_off, int rows, int cols, int b_off, int x) {
    if (value(x).size() != static_cast<std::size_t>(cols))
      throw std::invalid_argument("affine input size mismatch");
    Node n{Op::Affine};
    n.a = check_id(x);
    n.p0 = w_off;
    n.p1 = rows;
    n.p2 = cols;
    n.p3 = b_off;
    n.value.resize(static_cast<std::size_t>(rows));
    kernels::affine(params_, w_off, rows, cols, b_off, value(x), n.value);
    return push(std::move(n));
  }

  int tanh_op(int x) {
    Node n{Op::Tanh};
    n.a = check_id(x);
    n.value.resize(value(x).size());
    kernels::tanh_vec(value(x), n.value);
    return push(std::move(n));
  }

  int scale_neg_i(int x) {
    Node n{Op::ScaleNegI};
    n.a = check_id(x);
    n.value.resize(value(x).size());
    kernels::scale_neg_i(value(x), n.value);
    return push(std::move(n));
  }

  /// z = alpha * x + y (alpha a fixed real).
  int axpy(double alpha, int x, int y) {
    if (value(x).size() != value(y).size())
      throw std::invalid_argument("axpy size mismatch");
    Node n{Op::Axpy};
    n.a = check_id(x);
    n.b = check_id(y);
    n.alpha = alpha;
    n.value.resize(value(x).size());
    kernels::axpy(alpha, value(x), value(y), n.value);
    return push(std::move(n));
  }

  int scale(double alpha, int x) {
    Node n{Op::Scale};
    n.a = check_id(x);
    n.alpha = alpha;
    n.value.resize(value(x).size());
    for (std::size_t i = 0; i < n.value.size(); ++i)
      n.value[i] = alpha * value(x)[i];
    return push(std::move(n));
  }

  /// out = y + h*(k1 + 4 k2 + k3)/6; the RK3 update fused into one node.
  int rk3_combine(double h, int y, int k1, int k2, int k3) {
    Node n{Op::Rk3Combine};
    n.a = check_id(k1);
    n.b = check_id(k2);
    n.c = check_id(k3);
    n.d = check_id(y);
    n.alpha = h;
    n.value.resize(value(y).size());
    kernels::rk3_combine(h, value(y), value(k1), value(k2), value(k3),
                         n.value);
    return push(std::move(n));
  }

  /// Squared magnitudes of interleaved complex input: half-length output.
  int abs2(int x) {
    Node n{Op::Abs2};
    n.a = check_id(x);
    const auto& xv = value(x);
    n.value.resize(xv.size() / 2);
    for (std::size_t k = 0; k < n.value.size(); ++k)
      n.value[k] = xv[2 * k] * xv[2 * k] + xv[2 * k + 1] * xv[2 * k + 1];
    return push(std::move(n));
  }

  /// Elementwise log with the argument floored at floor_val; the derivative
  /// is zero below the floor. Keeps finite-shot outcomes that land on
  /// near-zero-probability bins from producing infinities.
  int log_clamped(int x, double floor_val) {
    Node n{Op::LogClamped};
    n.a = check_id(x);
    n.alpha = floor_val;
    const auto& xv = value(x);
    n.value.resize(xv.size());
    for (std::size_t k = 0; k < xv.size(); ++k)
      n.value[k] = std::log(xv[k] < floor_val ? floor_val : xv[k]);
    return push(std::move(n));
  }

  /// p = x / sum(x).
  int normalize(int x) {
    Node n{Op::Normalize};
    n.a = check_id(x);
    const auto& xv = value(x);
    double total = 0.0;
    for (double v : xv) total += v;
    if (!(total > 0.0)) throw std::domain_error("normalize of zero-sum input");
    n.value.resize(xv.size());
    for (std::size_t k = 0; k < xv.size(); ++k) n.value[k] = xv[k] / total;
    return push(std::move(n));
  }

  /// scalar = sum_k coeffs[k] * x[k] with fixed coeffs.
  int dot_const(std::vector<double> coeffs, int x) {
    if (coeffs.size() != value(x).size())
      throw std::invalid_argument("dot_const size mismatch");
    Node n{Op::DotConst};
    n.a = check_id(x);
    n.cvec = std::move(coeffs);
    double acc = 0.0;
    for (std::size_t k = 0; k < n.cvec.size(); ++k)
      acc += n.cvec[k] * value(x)[k];
    n.value = {acc};
    return push(std::move(n));
  }

  /// scalar = sum of squares of params[offset .. offset+len).
  int sumsq_params(int offset, int len) {
    Node n{Op::SumSqParams};
    n.p0 = offset;
    n.p1 = len;
    double acc = 0.0;
    for (int k = 0; k < len; ++k) {
      double p = params_[static_cast<std::size_t>(offset + k)];
      acc += p * p;
    }
    n.value = {acc};
    return push(std::move(n));
  }

  /// y = U_basis x: the per-site measurement-basis rotation (complex).
  int basis_rotate(const PauliBasis& basis, int x) {
    Node n{Op::BasisRotate};
    n.a = check_id(x);
    n.basis = basis;
    n.value = value(x);
    auto amps = as_complex(std::span<double>(n.value));
    detail::rotate_to_basis_inplace(amps, basis.num_sites(), basis);
    return push(std::move(n));
  }

  /// Reverse-mode derivative of the recorded scalar with respect to the
  /// bound parameter vector.
  std::vector<double> grad(int loss_id) const {
    const Node& loss = nodes_[check_id(loss_id)];
    if (loss.value.size() != 1)
      throw std::invalid_argument("grad target must be a scalar node");
    if (!std::isfinite(loss.value[0]))
      throw DivergenceError(0, "non-finite loss value");
    std::vector<std::vector<double>> adj(nodes_.size());
    std::vector<double> pgrad(params_.size(), 0.0);
    adj[static_cast<std::size_t>(loss_id)] = {1.0};
    for (int id = loss_id; id >= 0; --id) {
      auto& g = adj[static_cast<std::size_t>(id)];
      if (g.empty()) continue;
      backward(nodes_[static_cast<std::size_t>(id)], g, adj, pgrad);
    }
    return pgrad;
  }

 private:
  enum class Op : std::uint8_t {
    Constant,
    ParamSlice,
    PauliApply,
    Affine,
    Tanh,
    ScaleNegI,
    Axpy,
    Scale,
    Rk3Combine,
    Abs2,
    LogClamped,
    Normalize,
    DotConst,
    SumSqParams,
    BasisRotate,
  };

  struct Node {
    Op op;
    std::int32_t a = -1, b = -1, c = -1, d = -1;
    double alpha = 0.0;
    std::int32_t p0 = 0, p1 = 0, p2 = 0, p3 = 0;
    const Ansatz* ansatz = nullptr;
    std::optional<PauliBasis> basis;
    std::vector<double> cvec;
    std::vector<double> value;
  };

  int check_id(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
      throw std::invalid_argument("bad tape node id");
    return id;
  }

  int push(Node&& n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<double>& touch(std::vector<std::vector<double>>& adj,
                             int id) const {
    auto& slot = adj[static_cast<std::size_t>(id)];
    if (slot.empty())
      slot.assign(nodes_[static_cast<std::size_t>(id)].value.size(), 0.0);
    return slot;
  }

  void backward(const Node& n, const std::vector<double>& g,
                std::vector<std::vector<double>>& adj,
                std::vector<double>& pgrad) const {
    switch (n.op) {
      case Op::Constant:
        break;
      case Op::ParamSlice:
        for (int k = 0; k < n.p1; ++k)
          pgrad[static_cast<std::size_t>(n.p0 + k)] += g[static_cast<std::size_t>(k)];
        break;
      case Op::PauliApply: {
        const auto& xv = nodes_[static_cast<std::size_t>(n.a)].value;
        auto& xg = touch(adj, n.a);
        // d/dx: the weighted sum is Hermitian (real coefficients, Hermitian
        // strings), so the pair-space transpose is the map itself.
        std::vector<double> tmp(g.size());
        n.ansatz->apply_weighted(
            params_.subspan(static_cast<std::size_t>(n.p0),
                            static_cast<std::size_t>(n.ansatz->num_params())),
            as_complex(std::span<const double>(g)),
            as_complex(std::span<double>(tmp)));
        for (std::size_t i = 0; i < xg.size(); ++i) xg[i] += tmp[i];
        // d/dtheta_p: sum of <g, P_j x> real pairings over tied terms.
        std::vector<complex> scratch(g.size() / 2);
        n.ansatz->accumulate_param_grad(
            as_complex(std::span<const double>(g)),
            as_complex(std::span<const double>(xv)), scratch,
            std::span<double>(pgrad).subspan(
                static_cast<std::size_t>(n.p0),
                static_cast<std::size_t>(n.ansatz->num_params())));
        break;
      }
      case Op::Affine: {
        const auto& xv = nodes_[static_cast<std::size_t>(n.a)].value;
        auto& xg = touch(adj, n.a);
        const double* w = params_.data() + n.p0;
        double* wg = pgrad.data() + n.p0;
        double* bg = pgrad.data() + n.p3;
        for (int r = 0; r < n.p1; ++r) {
          const double gr = g[static_cast<std::size_t>(r)];
          const double* wrow = w + static_cast<std::size_t>(r) * n.p2;
          double* wgrow = wg + static_cast<std::size_t>(r) * n.p2;
          for (int col = 0; col < n.p2; ++col) {
            xg[static_cast<std::size_t>(col)] += wrow[col] * gr;
            wgrow[col] += gr * xv[static_cast<std::size_t>(col)];
          }
          bg[r] += gr;
        }
        break;
      }
      case Op::Tanh: {
        auto& xg = touch(adj, n.a);
        for (std::size_t i = 0; i < g.size(); ++i)
          xg[i] += (1.0 - n.value[i] * n.value[i]) * g[i];
        break;
      }
      case Op::ScaleNegI: {
        // Adjoint of multiplication by -i is multiplication by +i.
        auto& xg = touch(adj, n.a);
        for (std::size_t i = 0; i + 1 < g.size(); i += 2) {
          xg[i] += -g[i + 1];
          xg[i + 1] += g[i];
        }
        break;
      }
      case Op::Axpy: {
        auto& xg = touch(adj, n.a);
        auto& yg = touch(adj, n.b);
        for (std::size_t i = 0; i < g.size(); ++i) {
          xg[i] += n.alpha * g[i];
          yg[i] += g[i];
        }
        break;
      }
      case Op::Scale: {
        auto& xg = touch(adj, n.a);
        for (std::size_t i = 0; i < g.size(); ++i) xg[i] += n.alpha * g[i];
        break;
      }
      case Op::Rk3Combine: {
        auto& k1g = touch(adj, n.a);
        auto& k2g = touch(adj, n.b);
        auto& k3g = touch(adj, n.c);
        auto& yg = touch(adj, n.d);
        const double c1 = n.alpha / 6.0;
        const double c2 = n.alpha * 4.0 / 6.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
          yg[i] += g[i];
          k1g[i] += c1 * g[i];
          k2g[i] += c2 * g[i];
          k3g[i] += c1 * g[i];
        }
        break;
      }
      case Op::Abs2: {
        const auto& xv = nodes_[static_cast<std::size_t>(n.a)].value;
        auto& xg = touch(adj, n.a);
        for (std::size_t k = 0; k < g.size(); ++k) {
          xg[2 * k] += 2.0 * xv[2 * k] * g[k];
          xg[2 * k + 1] += 2.0 * xv[2 * k + 1] * g[k];
        }
        break;
      }
      case Op::LogClamped: {
        const auto& xv = nodes_[static_cast<std::size_t>(n.a)].value;
        auto& xg = touch(adj, n.a);
        for (std::size_t k = 0; k < g.size(); ++k)
          if (xv[k] >= n.alpha) xg[k] += g[k] / xv[k];
        break;
      }
      case Op::Normalize: {
        const auto& xv = nodes_[static_cast<std::size_t>(n.a)].value;
        auto& xg = touch(adj, n.a);
        double total = 0.0;
        for (double v : xv) total += v;
        double dot = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) dot += g[k] * n.value[k];
        for (std::size_t k = 0; k < g.size(); ++k)
          xg[k] += (g[k] - dot) / total;
        break;
      }
      case Op::DotConst: {
        auto& xg = touch(adj, n.a);
        for (std::size_t k = 0; k < xg.size(); ++k)
          xg[k] += n.cvec[k] * g[0];
        break;
      }
      case Op::SumSqParams: {
        for (int k = 0; k < n.p1; ++k)
          pgrad[static_cast<std::size_t>(n.p0 + k)] +=
              2.0 * params_[static_cast<std::size_t>(n.p0 + k)] * g[0];
        break;
      }
      case Op::BasisRotate: {
        auto& xg = touch(adj, n.a);
        // x_adj += U^dagger g; the per-site adjoint gates commute across
        // sites, so site order is irrelevant.
        std::vector<double> tmp(g.begin(), g.end());
        auto amps = as_complex(std::span<double>(tmp));
        const PauliBasis& basis = *n.basis;
        constexpr double inv_sqrt2 = 0.70710678118654752440;
        for (int s = 0; s < basis.num_sites(); ++s) {
          switch (basis.letter(s)) {
            case PauliLetter::Z:
              break;
            case PauliLetter::X:
              detail::apply_single_site(amps, basis.num_sites(), s, inv_sqrt2,
                                        inv_sqrt2, inv_sqrt2, -inv_sqrt2);
              break;
            case PauliLetter::Y:
              // (H S^dagger)^dagger = S H
              detail::apply_single_site(amps, basis.num_sites(), s, inv_sqrt2,
                                        inv_sqrt2, complex(0, inv_sqrt2),
                                        complex(0, -inv_sqrt2));
              break;
            default:
              throw std::invalid_argument("bad basis letter");
          }
        }
        for (std::size_t i = 0; i < xg.size(); ++i) xg[i] += tmp[i];
        break;
      }
    }
  }

  std::span<const double> params_;
  std::vector<Node> nodes_;
};

}  // namespace hamlearn
