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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "hamlearn/autodiff.hpp"
#include "hamlearn/common.hpp"
#include "hamlearn/dataset.hpp"
#include "hamlearn/model.hpp"
#include "hamlearn/rng.hpp"

namespace hamlearn {

struct TrainConfig {
  int warmup_steps = 200;
  int phase1_steps = 800;
  int phase2_steps = 200;
  double lr_theta = 5e-2;
  double lr_phi = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double success_threshold = 0.1;
  double theta_init_lo = -0.5;
  double theta_init_hi = 0.5;
  double prob_floor = 1e-12;
  IntegratorConfig integrator{};
  std::uint64_t seed = 0;

  void validate() const {
    if (warmup_steps < 0 || phase1_steps < 0 || phase2_steps < 0)
      throw std::invalid_argument("step counts must be non-negative");
    if (!(adam_beta1 > 0 && adam_beta1 < 1 && adam_beta2 > 0 &&
          adam_beta2 < 1))
      throw std::invalid_argument("adam betas must lie in (0, 1)");
    if (!(lr_theta > 0) || !(lr_phi > 0))
      throw std::invalid_argument("learning rates must be positive");
    integrator.validate();
  }
};

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

struct LossDiagnostics {
  double max_norm_drift = 0.0;
};

/// Records the full-dataset training loss: for every (state, time, basis)
/// key, the predicted state (one integration per state, shared across bases)
/// is rotated to the basis, squared amplitudes are renormalized into a
/// distribution, and outcome counts weight the clamped log-probabilities.
/// The total is the average negative log-likelihood over all records, plus
/// the network weight penalty when the network term is active.
inline int record_nll_loss(Tape& tape, const HybridModel& model,
                           const Dataset& dataset, const TrainConfig& cfg,
                           LossDiagnostics* diag = nullptr) {
  if (dataset.num_sites() != model.num_sites())
    throw std::invalid_argument("dataset/model size mismatch");
  const auto& times = dataset.timestamps();
  const std::size_t num_bases = dataset.basis_table().size();
  double drift = 0.0;
  int sum = -1;
  for (std::size_t l = 0; l < dataset.state_table().size(); ++l) {
    StateVector psi0 =
        basis_state(dataset.num_sites(), dataset.state_table()[l]);
    std::vector<int> state_nodes =
        model.record_predict(tape, psi0, times, cfg.integrator);
    for (std::size_t j = 0; j < times.size(); ++j) {
      if (diag) {
        double nsq = 0.0;
        for (double v : tape.value(state_nodes[j])) nsq += v * v;
        drift = std::max(drift, std::abs(std::sqrt(nsq) - 1.0));
      }
      for (std::size_t k = 0; k < num_bases; ++k) {
        auto counts = dataset.histogram(l, j, k);
        int rot = tape.basis_rotate(dataset.basis_table()[k], state_nodes[j]);
        int probs = tape.normalize(tape.abs2(rot));
        int logs = tape.log_clamped(probs, cfg.prob_floor);
        int key = tape.dot_const(
            std::vector<double>(counts.begin(), counts.end()), logs);
        sum = sum < 0 ? key : tape.axpy(1.0, key, sum);
      }
    }
  }
  int loss =
      tape.scale(-1.0 / static_cast<double>(dataset.total_records()), sum);
  if (model.nn_enabled() && model.mlp().weight_decay > 0.0) {
    int reg = tape.sumsq_params(model.layout().phi_offset,
                                model.layout().phi_count);
    loss = tape.axpy(model.mlp().weight_decay, reg, loss);
  }
  if (diag) diag->max_norm_drift = drift;
  return loss;
}

/// Loss value without keeping the tape around.
inline double nll_loss_value(const HybridModel& model,
                             std::span<const double> params,
                             const Dataset& dataset, const TrainConfig& cfg,
                             LossDiagnostics* diag = nullptr) {
  Tape tape(params);
  return tape.value(record_nll_loss(tape, model, dataset, cfg, diag))[0];
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct AdamState {
  std::vector<double> m, v;
  long step = 0;

  explicit AdamState(std::size_t size) : m(size, 0.0), v(size, 0.0) {}
};

/// Standard bias-corrected ADAM restricted to unmasked coordinates; masked
/// coordinates keep their value and moment estimates bit-identical.
inline void adam_step(std::span<double> params, std::span<const double> grads,
                      AdamState& state, std::span<const double> lr,
                      std::span<const std::uint8_t> mask, double beta1 = 0.9,
                      double beta2 = 0.999, double eps = 1e-8) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != lr.size() || params.size() != mask.size())
    throw std::invalid_argument("adam_step size mismatch");
  ++state.step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!mask[i]) continue;
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
    double m_hat = state.m[i] / bc1;
    double v_hat = state.v[i] / bc2;
    params[i] -= lr[i] * m_hat / (std::sqrt(v_hat) + eps);
  }
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// L1 relative error |theta - theta_est| / |theta|.
inline double relative_error(std::span<const double> theta_true,
                             std::span<const double> theta_est) {
  if (theta_true.size() != theta_est.size())
    throw std::invalid_argument("parameter layout mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < theta_true.size(); ++i) {
    num += std::abs(theta_true[i] - theta_est[i]);
    den += std::abs(theta_true[i]);
  }
  if (den == 0.0)
    throw std::domain_error("relative error undefined for zero truth");
  return num / den;
}

// ---------------------------------------------------------------------------
// Curricula
// ---------------------------------------------------------------------------

struct TrialResult {
  std::vector<double> theta_est;
  double relative_err = std::numeric_limits<double>::quiet_NaN();
  bool success = false;
  bool diverged = false;
  std::size_t diverged_step = 0;
  std::vector<double> loss_trace;
  std::vector<double> drift_trace;
  double wall_seconds = 0.0;  // informational only; not a primary artifact
};

namespace detail {

struct PhaseMask {
  std::vector<std::uint8_t> mask;
  std::vector<double> lr;
};

inline PhaseMask make_phase_mask(const HybridModel& model,
                                 const TrainConfig& cfg,
                                 std::span<const std::uint8_t> theta_active) {
  const auto& lay = model.layout();
  PhaseMask pm;
  pm.mask.assign(static_cast<std::size_t>(lay.total()), 0);
  pm.lr.assign(static_cast<std::size_t>(lay.total()), 0.0);
  for (int k = 0; k < lay.theta_count; ++k) {
    bool on = !model.theta_frozen() &&
              (theta_active.empty() || theta_active[static_cast<std::size_t>(k)]);
    pm.mask[static_cast<std::size_t>(lay.theta_offset + k)] = on ? 1 : 0;
    pm.lr[static_cast<std::size_t>(lay.theta_offset + k)] = cfg.lr_theta;
  }
  for (int k = 0; k < lay.phi_count; ++k) {
    pm.mask[static_cast<std::size_t>(lay.phi_offset + k)] =
        model.nn_enabled() ? 1 : 0;
    pm.lr[static_cast<std::size_t>(lay.phi_offset + k)] = cfg.lr_phi;
  }
  return pm;
}

/// Runs `steps` full-batch ADAM updates with the model's current flags.
/// Fresh optimizer state per phase: the three curriculum phases are distinct
/// training regimes, so moments never leak across a flag change.
inline void train_phase(HybridModel& model, std::vector<double>& params,
                        const Dataset& dataset, const TrainConfig& cfg,
                        int steps, TrialResult& result,
                        std::span<const std::uint8_t> theta_active = {}) {
  PhaseMask pm = make_phase_mask(model, cfg, theta_active);
  AdamState opt(params.size());
  for (int step = 0; step < steps; ++step) {
    Tape tape(params);
    LossDiagnostics diag;
    int loss = record_nll_loss(tape, model, dataset, cfg, &diag);
    result.loss_trace.push_back(tape.value(loss)[0]);
    result.drift_trace.push_back(diag.max_norm_drift);
    std::vector<double> grads = tape.grad(loss);
    adam_step(params, grads, opt, pm.lr, pm.mask, cfg.adam_beta1,
              cfg.adam_beta2, cfg.adam_eps);
  }
}

inline void finish_trial(TrialResult& result, std::span<const double> theta,
                         std::span<const double> truth, double threshold) {
  result.theta_est.assign(theta.begin(), theta.end());
  if (!truth.empty()) {
    result.relative_err = relative_error(truth, theta);
    result.success = result.relative_err < threshold;
  }
}

}  // namespace detail

/// Three-phase schedule: joint warm-up, network switched off while the
/// ansatz trains, then ansatz frozen while the network retrains. The ansatz
/// estimate is final after the middle phase.
inline TrialResult run_curriculum1(HybridModel& model, const Dataset& dataset,
                                   const TrainConfig& cfg,
                                   std::span<const double> truth = {}) {
  cfg.validate();
  auto t0 = std::chrono::steady_clock::now();
  TrialResult result;
  SplitMix64 rng(cfg.seed);
  std::vector<double> params =
      model.init_params(rng, cfg.theta_init_lo, cfg.theta_init_hi);
  const auto& lay = model.layout();
  try {
    model.set_nn_enabled(true);
    model.set_theta_frozen(false);
    detail::train_phase(model, params, dataset, cfg, cfg.warmup_steps, result);
    model.set_nn_enabled(false);
    detail::train_phase(model, params, dataset, cfg, cfg.phase1_steps, result);
    std::vector<double> theta_snapshot(
        params.begin() + lay.theta_offset,
        params.begin() + lay.theta_offset + lay.theta_count);
    model.set_nn_enabled(true);
    model.set_theta_frozen(true);
    detail::train_phase(model, params, dataset, cfg, cfg.phase2_steps, result);
    for (int k = 0; k < lay.theta_count; ++k)
      if (params[static_cast<std::size_t>(lay.theta_offset + k)] !=
          theta_snapshot[static_cast<std::size_t>(k)])
        throw std::logic_error("theta changed while frozen");
    detail::finish_trial(result, theta_snapshot, truth,
                         cfg.success_threshold);
  } catch (const DivergenceError& e) {
    result.diverged = true;
    result.diverged_step = e.step();
    detail::finish_trial(result, model.theta(params), truth,
                         cfg.success_threshold);
    result.success = false;
  }
  model.set_theta_frozen(false);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

/// Ansatz-only baseline: the network stays off for the whole run, with the
/// same total number of ansatz updates as the curriculum (warm-up + phase 1)
/// so the comparison isolates the neural augmentation.
inline TrialResult run_vanilla(HybridModel& model, const Dataset& dataset,
                               const TrainConfig& cfg,
                               std::span<const double> truth = {}) {
  cfg.validate();
  auto t0 = std::chrono::steady_clock::now();
  TrialResult result;
  SplitMix64 rng(cfg.seed);
  std::vector<double> params =
      model.init_params(rng, cfg.theta_init_lo, cfg.theta_init_hi);
  try {
    model.set_nn_enabled(false);
    model.set_theta_frozen(false);
    detail::train_phase(model, params, dataset, cfg,
                        cfg.warmup_steps + cfg.phase1_steps, result);
    detail::finish_trial(result, model.theta(params), truth,
                         cfg.success_threshold);
  } catch (const DivergenceError& e) {
    result.diverged = true;
    result.diverged_step = e.step();
    detail::finish_trial(result, model.theta(params), truth,
                         cfg.success_threshold);
    result.success = false;
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

/// Order-ascending schedule: parameters are batched by the polynomial order
/// of their Pauli strings; each batch runs the three-phase schedule with
/// higher-order coordinates pinned at exactly zero and previously trained
/// batches frozen. A single-order ansatz reduces to run_curriculum1.
inline TrialResult run_curriculum2(HybridModel& model, const Dataset& dataset,
                                   const TrainConfig& cfg, int max_order = 0,
                                   std::span<const double> truth = {}) {
  cfg.validate();
  auto t0 = std::chrono::steady_clock::now();
  TrialResult result;
  const auto& lay = model.layout();
  const std::vector<int>& order = model.ansatz().param_order();

  std::vector<int> batches;  // distinct orders, ascending
  for (int o : order)
    if (std::find(batches.begin(), batches.end(), o) == batches.end())
      batches.push_back(o);
  std::sort(batches.begin(), batches.end());
  if (max_order > 0) {
    while (!batches.empty() && batches.back() > max_order)
      batches.pop_back();
    if (batches.empty())
      throw std::invalid_argument("max_order excludes every parameter");
  }

  SplitMix64 rng(cfg.seed);
  std::vector<double> params =
      model.init_params(rng, cfg.theta_init_lo, cfg.theta_init_hi);
  // Orders above the first batch start at exactly zero and are unlocked one
  // batch at a time.
  for (int k = 0; k < lay.theta_count; ++k)
    if (order[static_cast<std::size_t>(k)] > batches.front())
      params[static_cast<std::size_t>(lay.theta_offset + k)] = 0.0;

  try {
    std::vector<double> theta_final(static_cast<std::size_t>(lay.theta_count),
                                    0.0);
    for (int active_order : batches) {
      std::vector<std::uint8_t> active(
          static_cast<std::size_t>(lay.theta_count), 0);
      for (int k = 0; k < lay.theta_count; ++k)
        active[static_cast<std::size_t>(k)] =
            order[static_cast<std::size_t>(k)] == active_order ? 1 : 0;
      model.set_nn_enabled(true);
      model.set_theta_frozen(false);
      detail::train_phase(model, params, dataset, cfg, cfg.warmup_steps,
                          result, active);
      model.set_nn_enabled(false);
      detail::train_phase(model, params, dataset, cfg, cfg.phase1_steps,
                          result, active);
      for (int k = 0; k < lay.theta_count; ++k)
        theta_final[static_cast<std::size_t>(k)] =
            params[static_cast<std::size_t>(lay.theta_offset + k)];
      model.set_nn_enabled(true);
      model.set_theta_frozen(true);
      detail::train_phase(model, params, dataset, cfg, cfg.phase2_steps,
                          result, active);
      model.set_theta_frozen(false);
    }
    detail::finish_trial(result, theta_final, truth, cfg.success_threshold);
  } catch (const DivergenceError& e) {
    result.diverged = true;
    result.diverged_step = e.step();
    detail::finish_trial(result, model.theta(params), truth,
                         cfg.success_threshold);
    result.success = false;
  }
  model.set_theta_frozen(false);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

// ---------------------------------------------------------------------------
// Success-rate harness
// ---------------------------------------------------------------------------

struct TrialOutcome {
  std::uint64_t truth_seed = 0;
  std::uint64_t data_seed = 0;
  std::uint64_t vanilla_init_seed = 0;
  std::uint64_t node_init_seed = 0;
  TrialResult vanilla;
  TrialResult node;
};

struct HarnessResult {
  Family family;
  int num_sites = 0;
  int num_trials = 0;
  bool vanilla_included = true;
  std::vector<TrialOutcome> trials;
  double vanilla_rate = 0.0;
  double node_rate = 0.0;
  // Smallest failed epsilon minus largest successful epsilon per model;
  // NaN when either side is empty.
  double vanilla_separation = std::numeric_limits<double>::quiet_NaN();
  double node_separation = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline double separation(const std::vector<TrialOutcome>& trials,
                         bool use_node) {
  double max_success = -std::numeric_limits<double>::infinity();
  double min_failure = std::numeric_limits<double>::infinity();
  for (const auto& t : trials) {
    const TrialResult& r = use_node ? t.node : t.vanilla;
    if (std::isnan(r.relative_err)) continue;
    if (r.success)
      max_success = std::max(max_success, r.relative_err);
    else
      min_failure = std::min(min_failure, r.relative_err);
  }
  if (!std::isfinite(max_success) || !std::isfinite(min_failure))
    return std::numeric_limits<double>::quiet_NaN();
  return min_failure - max_success;
}

}  // namespace detail

/// Table-1-style experiment: every trial draws a fresh ground truth from
/// U[-1,1], generates a fresh dataset, and trains the vanilla baseline and
/// the full curriculum on identical data with independently seeded inits.
/// Trials run in parallel; results are aggregated in trial order.
inline HarnessResult success_rate_harness(Family family, int n,
                                          int num_trials,
                                          const DatasetSpec& base_spec,
                                          const TrainConfig& cfg,
                                          unsigned jobs = 1,
                                          bool include_vanilla = true) {
  if (num_trials < 1) throw std::invalid_argument("need at least one trial");
  cfg.validate();
  HarnessResult out;
  out.family = family;
  out.num_sites = n;
  out.num_trials = num_trials;
  out.vanilla_included = include_vanilla;
  out.trials.resize(static_cast<std::size_t>(num_trials));

  parallel_for(static_cast<std::size_t>(num_trials), jobs, [&](std::size_t i) {
    TrialOutcome& trial = out.trials[i];
    trial.truth_seed = derive_seed(cfg.seed, 4 * i + 0);
    trial.data_seed = derive_seed(cfg.seed, 4 * i + 1);
    trial.vanilla_init_seed = derive_seed(cfg.seed, 4 * i + 2);
    trial.node_init_seed = derive_seed(cfg.seed, 4 * i + 3);

    std::vector<double> truth = sample_truth(family, n, trial.truth_seed);
    DatasetSpec spec = base_spec;
    spec.num_sites = n;
    spec.family = family;
    spec.truth_params = truth;
    spec.seed = trial.data_seed;
    Dataset dataset = generate_dataset(spec);

    if (include_vanilla) {
      HybridModel vanilla_model = HybridModel::with_defaults(family, n);
      TrainConfig vcfg = cfg;
      vcfg.seed = trial.vanilla_init_seed;
      trial.vanilla = run_vanilla(vanilla_model, dataset, vcfg, truth);
    }
    HybridModel node_model = HybridModel::with_defaults(family, n);
    TrainConfig ncfg = cfg;
    ncfg.seed = trial.node_init_seed;
    trial.node = run_curriculum1(node_model, dataset, ncfg, truth);
  });

  int v_success = 0, n_success = 0;
  for (const auto& t : out.trials) {
    v_success += t.vanilla.success ? 1 : 0;
    n_success += t.node.success ? 1 : 0;
  }
  out.vanilla_rate = static_cast<double>(v_success) / num_trials;
  out.node_rate = static_cast<double>(n_success) / num_trials;
  out.vanilla_separation = detail::separation(out.trials, false);
  out.node_separation = detail::separation(out.trials, true);
  return out;
}

}  // namespace hamlearn
