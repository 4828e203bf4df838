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
#include <nlohmann/json.hpp>
#include <span>
#include <stdexcept>
#include <vector>

#include "hamlearn/autodiff.hpp"
#include "hamlearn/dynamics.hpp"
#include "hamlearn/hamiltonian.hpp"
#include "hamlearn/rng.hpp"
#include "hamlearn/statevector.hpp"

namespace hamlearn {

/// Fully connected network shape: tanh hidden activations, linear output,
/// first and last widths pinned to the real dimension 2 * 2^N of the state.
struct MlpSpec {
  std::vector<int> layer_widths;
  double weight_decay = 1e-3;

  static MlpSpec defaults_for(int num_sites) {
    int io = 2 << num_sites;  // 2 * 2^N interleaved reals
    return MlpSpec{{io, 64, 64, io}, 1e-3};
  }

  void validate(int num_sites) const {
    int io = 2 << num_sites;
    if (layer_widths.size() < 3)
      throw std::invalid_argument("MLP needs at least one hidden layer");
    if (layer_widths.front() != io || layer_widths.back() != io)
      throw std::invalid_argument("MLP I/O widths must equal 2*2^N");
    for (int w : layer_widths)
      if (w < 1) throw std::invalid_argument("bad layer width");
    if (weight_decay < 0.0)
      throw std::invalid_argument("weight_decay must be non-negative");
  }

  int param_count() const {
    int total = 0;
    for (std::size_t l = 0; l + 1 < layer_widths.size(); ++l)
      total += layer_widths[l + 1] * layer_widths[l] + layer_widths[l + 1];
    return total;
  }
};

/// Offsets of the named segments inside the flat trainable vector:
/// [theta (canonical family order) | phi (per layer: weights row-major,
/// then biases)].
struct ParamLayout {
  struct Layer {
    int w_off, rows, cols, b_off;
  };

  int theta_offset = 0;
  int theta_count = 0;
  int phi_offset = 0;
  int phi_count = 0;
  std::vector<Layer> layers;

  int total() const { return theta_count + phi_count; }
};

inline ParamLayout make_layout(const Ansatz& ansatz, const MlpSpec& mlp) {
  ParamLayout lay;
  lay.theta_offset = 0;
  lay.theta_count = ansatz.num_params();
  lay.phi_offset = lay.theta_count;
  int off = lay.phi_offset;
  for (std::size_t l = 0; l + 1 < mlp.layer_widths.size(); ++l) {
    ParamLayout::Layer seg;
    seg.rows = mlp.layer_widths[l + 1];
    seg.cols = mlp.layer_widths[l];
    seg.w_off = off;
    seg.b_off = off + seg.rows * seg.cols;
    off = seg.b_off + seg.rows;
    lay.layers.push_back(seg);
  }
  lay.phi_count = off - lay.phi_offset;
  return lay;
}

/// The learnable vector field d psi/dt = -i (H_A(theta) psi + NN(psi; phi)),
/// with the network term switchable (off = the ansatz-only vanilla model,
/// excluded from forward and backward passes alike).
class HybridModel {
 public:
  HybridModel(Ansatz ansatz, MlpSpec mlp)
      : ansatz_(std::move(ansatz)), mlp_(std::move(mlp)) {
    mlp_.validate(ansatz_.num_sites());
    layout_ = make_layout(ansatz_, mlp_);
  }

  static HybridModel with_defaults(Family family, int n) {
    return HybridModel(make_ansatz(family, n), MlpSpec::defaults_for(n));
  }

  const Ansatz& ansatz() const { return ansatz_; }
  const MlpSpec& mlp() const { return mlp_; }
  const ParamLayout& layout() const { return layout_; }
  int num_sites() const { return ansatz_.num_sites(); }

  bool nn_enabled() const { return nn_enabled_; }
  void set_nn_enabled(bool on) { nn_enabled_ = on; }
  bool theta_frozen() const { return theta_frozen_; }
  void set_theta_frozen(bool frozen) { theta_frozen_ = frozen; }

  /// theta ~ U[theta_lo, theta_hi); weights ~ U(-1/sqrt(fan_in),
  /// 1/sqrt(fan_in)); biases zero. Draw order (theta first, then layers,
  /// weights before biases) is part of the seeding contract.
  std::vector<double> init_params(SplitMix64& rng, double theta_lo,
                                  double theta_hi) const {
    std::vector<double> p(static_cast<std::size_t>(layout_.total()), 0.0);
    for (int k = 0; k < layout_.theta_count; ++k)
      p[static_cast<std::size_t>(layout_.theta_offset + k)] =
          rng.uniform(theta_lo, theta_hi);
    for (const auto& seg : layout_.layers) {
      double bound = 1.0 / std::sqrt(static_cast<double>(seg.cols));
      for (int k = 0; k < seg.rows * seg.cols; ++k)
        p[static_cast<std::size_t>(seg.w_off + k)] =
            rng.uniform(-bound, bound);
      // biases stay zero
    }
    return p;
  }

  std::span<const double> theta(std::span<const double> params) const {
    return params.subspan(static_cast<std::size_t>(layout_.theta_offset),
                          static_cast<std::size_t>(layout_.theta_count));
  }

  /// Plain (tape-free) MLP pass on the interleaved real view of the state.
  std::vector<double> mlp_forward(std::span<const double> params,
                                  std::span<const double> x) const {
    std::vector<double> h(x.begin(), x.end());
    for (std::size_t l = 0; l < layout_.layers.size(); ++l) {
      const auto& seg = layout_.layers[l];
      std::vector<double> next(static_cast<std::size_t>(seg.rows));
      kernels::affine(params, seg.w_off, seg.rows, seg.cols, seg.b_off, h,
                      next);
      if (l + 1 < layout_.layers.size()) {
        kernels::tanh_vec(next, next);
      }
      h = std::move(next);
    }
    return h;
  }

  /// d psi/dt at a point, tape-free.
  StateVector vector_field(const StateVector& psi,
                           std::span<const double> params) const {
    check_params(params);
    if (psi.num_sites() != num_sites())
      throw std::invalid_argument("model/state size mismatch");
    StateVector sum(num_sites());
    ansatz_.apply_weighted(theta(params), psi.amplitudes(), sum.amplitudes());
    if (nn_enabled_) {
      std::vector<double> nn = mlp_forward(params, as_real(psi.amplitudes()));
      auto s = as_real(sum.amplitudes());
      for (std::size_t i = 0; i < s.size(); ++i) s[i] = nn[i] + s[i];
    }
    StateVector out(num_sites());
    kernels::scale_neg_i(as_real(sum.amplitudes()), as_real(out.amplitudes()));
    return out;
  }

  /// Integrates the model field over the grid, tape-free. When
  /// max_norm_drift is given it receives max_t abs(norm(psi_t) - 1) over the
  /// returned states.
  std::vector<StateVector> predict_states(const StateVector& psi0,
                                          std::span<const double> t_grid,
                                          const IntegratorConfig& cfg,
                                          std::span<const double> params,
                                          double* max_norm_drift = nullptr) const {
    auto field = [&](const StateVector& y) { return vector_field(y, params); };
    std::vector<StateVector> out = rk3_evolve(field, psi0, t_grid, cfg);
    if (max_norm_drift) {
      double drift = 0.0;
      for (const auto& s : out)
        drift = std::max(drift, std::abs(s.norm() - 1.0));
      *max_norm_drift = drift;
    }
    return out;
  }

  /// Records the field evaluation for one integration stage.
  int record_field(Tape& tape, int x) const {
    int hx = tape.pauli_apply(ansatz_, layout_.theta_offset, x);
    int s = hx;
    if (nn_enabled_) {
      int h = x;
      for (std::size_t l = 0; l < layout_.layers.size(); ++l) {
        const auto& seg = layout_.layers[l];
        h = tape.affine(seg.w_off, seg.rows, seg.cols, seg.b_off, h);
        if (l + 1 < layout_.layers.size()) h = tape.tanh_op(h);
      }
      s = tape.axpy(1.0, h, hx);
    }
    return tape.scale_neg_i(s);
  }

  /// Tape-recorded twin of predict_states; returns node ids of the grid
  /// states. Identical step schedule and arithmetic to the plain path.
  std::vector<int> record_predict(Tape& tape, const StateVector& psi0,
                                  std::span<const double> t_grid,
                                  const IntegratorConfig& cfg) const {
    cfg.validate();
    if (psi0.num_sites() != num_sites())
      throw std::invalid_argument("model/state size mismatch");
    StepSchedule schedule = make_step_schedule(t_grid, cfg.dt);
    auto psi0_real = as_real(psi0.amplitudes());
    int y = tape.constant(std::vector<double>(psi0_real.begin(),
                                              psi0_real.end()));
    std::vector<int> outputs;
    outputs.reserve(t_grid.size());
    std::size_t next_output = 0;
    for (std::size_t step = 0; step <= schedule.step_sizes.size(); ++step) {
      while (next_output < schedule.output_after.size() &&
             schedule.output_after[next_output] == step) {
        outputs.push_back(y);
        ++next_output;
      }
      if (step == schedule.step_sizes.size()) break;
      const double h = schedule.step_sizes[step];
      int k1 = record_field(tape, y);
      int y1 = tape.axpy(0.5 * h, k1, y);
      int k2 = record_field(tape, y1);
      int y2 = tape.axpy(2.0 * h, k2, tape.axpy(-h, k1, y));
      int k3 = record_field(tape, y2);
      y = tape.rk3_combine(h, y, k1, k2, k3);
      for (double v : tape.value(y))
        if (!std::isfinite(v))
          throw DivergenceError(step + 1, "non-finite state during rk3");
    }
    return outputs;
  }

  /// weight_decay * sum(phi^2); theta is never regularized.
  double regularization(std::span<const double> params) const {
    check_params(params);
    double acc = 0.0;
    for (int k = 0; k < layout_.phi_count; ++k) {
      double p = params[static_cast<std::size_t>(layout_.phi_offset + k)];
      acc += p * p;
    }
    return mlp_.weight_decay * acc;
  }

 private:
  void check_params(std::span<const double> params) const {
    if (params.size() != static_cast<std::size_t>(layout_.total()))
      throw std::invalid_argument("parameter vector layout mismatch");
  }

  Ansatz ansatz_;
  MlpSpec mlp_;
  ParamLayout layout_;
  bool nn_enabled_ = true;
  bool theta_frozen_ = false;
};

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline nlohmann::json checkpoint_to_json(const HybridModel& model,
                                         std::span<const double> params) {
  const auto& lay = model.layout();
  nlohmann::json j;
  j["format_version"] = 1;
  j["family"] = family_name(model.ansatz().family());
  j["num_sites"] = model.num_sites();
  j["mlp"] = {{"layer_widths", model.mlp().layer_widths},
              {"weight_decay", model.mlp().weight_decay}};
  j["nn_enabled"] = model.nn_enabled();
  j["theta_frozen"] = model.theta_frozen();
  j["theta"] = std::vector<double>(
      params.begin() + lay.theta_offset,
      params.begin() + lay.theta_offset + lay.theta_count);
  j["phi"] = std::vector<double>(
      params.begin() + lay.phi_offset,
      params.begin() + lay.phi_offset + lay.phi_count);
  return j;
}

struct Checkpoint {
  HybridModel model;
  std::vector<double> params;
};

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  Family family = family_from_name(j.at("family").get<std::string>());
  int n = j.at("num_sites").get<int>();
  MlpSpec mlp{j.at("mlp").at("layer_widths").get<std::vector<int>>(),
              j.at("mlp").at("weight_decay").get<double>()};
  HybridModel model(make_ansatz(family, n), mlp);
  model.set_nn_enabled(j.at("nn_enabled").get<bool>());
  model.set_theta_frozen(j.at("theta_frozen").get<bool>());
  auto theta = j.at("theta").get<std::vector<double>>();
  auto phi = j.at("phi").get<std::vector<double>>();
  const auto& lay = model.layout();
  if (theta.size() != static_cast<std::size_t>(lay.theta_count) ||
      phi.size() != static_cast<std::size_t>(lay.phi_count))
    throw std::invalid_argument("checkpoint segment sizes mismatch");
  std::vector<double> params(static_cast<std::size_t>(lay.total()));
  std::copy(theta.begin(), theta.end(),
            params.begin() + lay.theta_offset);
  std::copy(phi.begin(), phi.end(), params.begin() + lay.phi_offset);
  return Checkpoint{std::move(model), std::move(params)};
}

}  // namespace hamlearn
