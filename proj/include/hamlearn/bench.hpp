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
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hamlearn/dataset.hpp"
#include "hamlearn/dynamics.hpp"
#include "hamlearn/model.hpp"
#include "hamlearn/train.hpp"

namespace hamlearn {

// ---------------------------------------------------------------------------
// Extrapolation curves
// ---------------------------------------------------------------------------

struct CurvePoint {
  double t;
  double infidelity;
};

/// Geometric time grid, matching the log-log axes the power-law fit works in.
inline std::vector<double> geometric_grid(double t_min, double t_max,
                                          int num_points) {
  if (!(t_min > 0) || !(t_max > t_min) || num_points < 2)
    throw std::invalid_argument("bad geometric grid");
  std::vector<double> out(static_cast<std::size_t>(num_points));
  double ratio = std::log(t_max / t_min) / (num_points - 1);
  for (int i = 0; i < num_points; ++i)
    out[static_cast<std::size_t>(i)] = t_min * std::exp(ratio * i);
  out.back() = t_max;
  return out;
}

/// Mean infidelity 1 - |<exact|predicted>|^2 over the given initial states at
/// every grid time. Predicted states are normalized before the overlap so
/// small non-unitary drift from the network term cannot push the infidelity
/// negative.
inline std::vector<CurvePoint> extrapolation_curve_on_grid(
    const HybridModel& model, std::span<const double> params,
    const PauliSumHamiltonian& truth_ham,
    std::span<const std::uint64_t> initial_states,
    std::span<const double> t_grid, const IntegratorConfig& cfg) {
  if (initial_states.empty())
    throw std::invalid_argument("need at least one test state");
  ExactPropagator propagator(truth_ham);
  std::vector<CurvePoint> out(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    out[i] = {t_grid[i], 0.0};
  for (std::uint64_t s : initial_states) {
    StateVector psi0 = basis_state(model.num_sites(), s);
    std::vector<StateVector> predicted =
        model.predict_states(psi0, t_grid, cfg, params);
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      StateVector exact = propagator.propagate(psi0, t_grid[i]);
      double f = fidelity(exact, predicted[i].normalized());
      out[i].infidelity += (1.0 - f) / static_cast<double>(initial_states.size());
    }
  }
  return out;
}

/// Draws `num_test_states` computational basis states disjoint from the
/// training set when 2^N allows, then evaluates the curve on a geometric
/// grid. When too few unseen states exist, reuse is allowed and flagged.
inline std::vector<CurvePoint> extrapolation_curve(
    const HybridModel& model, std::span<const double> params,
    const PauliSumHamiltonian& truth_ham,
    std::span<const std::uint64_t> training_states, int num_test_states,
    double t_min, double t_max, int num_points, const IntegratorConfig& cfg,
    std::uint64_t seed, bool* reused_training_states = nullptr) {
  if (num_test_states < 1)
    throw std::invalid_argument("need at least one test state");
  const std::uint64_t dim = std::uint64_t{1} << model.num_sites();
  const std::uint64_t unseen =
      dim - std::min<std::uint64_t>(dim, training_states.size());
  const bool must_reuse =
      unseen < static_cast<std::uint64_t>(num_test_states);
  if (reused_training_states) *reused_training_states = must_reuse;
  SplitMix64 rng(seed);
  std::vector<std::uint64_t> test_states;
  while (test_states.size() < static_cast<std::size_t>(num_test_states)) {
    std::uint64_t s = rng.next_index(dim);
    bool taken = false;
    for (std::uint64_t seen : test_states) taken = taken || (seen == s);
    if (!must_reuse)
      for (std::uint64_t seen : training_states) taken = taken || (seen == s);
    if (!taken) test_states.push_back(s);
  }
  std::vector<double> grid = geometric_grid(t_min, t_max, num_points);
  return extrapolation_curve_on_grid(model, params, truth_ham, test_states,
                                     grid, cfg);
}

// ---------------------------------------------------------------------------
// Power-law fit
// ---------------------------------------------------------------------------

/// infidelity(t) = A t^b fitted by ordinary least squares on (ln t, ln y),
/// with standard errors from the OLS covariance. stderr_A propagates the
/// intercept error through A = exp(intercept).
struct PowerLawFit {
  double A = 0.0;
  double b = 0.0;
  double stderr_A = 0.0;
  double stderr_b = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
  int num_points = 0;
  int num_filtered = 0;  // non-positive infidelities dropped before fitting
};

inline PowerLawFit fit_power_law(std::span<const CurvePoint> curve,
                                 double t_lo, double t_hi) {
  std::vector<double> xs, ys;
  int filtered = 0;
  for (const CurvePoint& p : curve) {
    if (p.t < t_lo || p.t > t_hi) continue;
    if (!(p.infidelity > 0.0)) {
      ++filtered;
      continue;
    }
    xs.push_back(std::log(p.t));
    ys.push_back(std::log(p.infidelity));
  }
  const std::size_t m = xs.size();
  if (m < 3)
    throw std::runtime_error(
        "power-law fit needs at least 3 positive points in the window");
  double x_mean = 0.0, y_mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    x_mean += xs[i];
    y_mean += ys[i];
  }
  x_mean /= static_cast<double>(m);
  y_mean /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - x_mean) * (xs[i] - x_mean);
    sxy += (xs[i] - x_mean) * (ys[i] - y_mean);
  }
  if (!(sxx > 0.0)) throw std::runtime_error("degenerate time window");
  const double slope = sxy / sxx;
  const double intercept = y_mean - slope * x_mean;
  double ssr = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double r = ys[i] - (intercept + slope * xs[i]);
    ssr += r * r;
  }
  const double sigma2 = m > 2 ? ssr / static_cast<double>(m - 2) : 0.0;
  PowerLawFit fit;
  fit.b = slope;
  fit.A = std::exp(intercept);
  fit.stderr_b = std::sqrt(sigma2 / sxx);
  fit.stderr_A =
      fit.A * std::sqrt(sigma2 * (1.0 / static_cast<double>(m) +
                                  x_mean * x_mean / sxx));
  fit.t_min = t_lo;
  fit.t_max = t_hi;
  fit.num_points = static_cast<int>(m);
  fit.num_filtered = filtered;
  return fit;
}

/// Time at which the fitted curve crosses a given infidelity level
/// (A t^b = level), the "1% error boundary" statistic.
inline double crossing_time(const PowerLawFit& fit, double level = 1e-2) {
  return std::pow(level / fit.A, 1.0 / fit.b);
}

// ---------------------------------------------------------------------------
// Measurement-budget sweep
// ---------------------------------------------------------------------------

struct SweepRow {
  int num_bases = 0;
  double success_rate = 0.0;
  double median_eps = 0.0;
  std::size_t records = 0;
};

struct SweepResult {
  Family family;
  int num_sites = 0;
  int num_trials = 0;
  std::vector<SweepRow> rows;     // strictly ordered by K
  int min_reliable_bases = -1;    // smallest K with success rate >= 1/2
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace detail

/// Runs the success-rate harness once per measurement budget K, holding
/// every other dataset parameter fixed. Divergent trials count as infinite
/// error. By default only the curriculum model runs (the sweep studies the
/// learning algorithm itself); the vanilla baseline can be included.
inline SweepResult pauli_budget_sweep(Family family, int n,
                                      std::span<const int> k_values,
                                      int num_trials,
                                      const DatasetSpec& base_spec,
                                      const TrainConfig& cfg,
                                      unsigned jobs = 1,
                                      bool include_vanilla = false) {
  if (k_values.empty()) throw std::invalid_argument("no K values");
  std::vector<int> ks(k_values.begin(), k_values.end());
  std::sort(ks.begin(), ks.end());
  SweepResult out;
  out.family = family;
  out.num_sites = n;
  out.num_trials = num_trials;
  for (int k : ks) {
    DatasetSpec spec = base_spec;
    spec.num_bases = k;
    HarnessResult h = success_rate_harness(family, n, num_trials, spec, cfg,
                                           jobs, include_vanilla);
    std::vector<double> eps;
    for (const auto& t : h.trials)
      eps.push_back(t.node.diverged || std::isnan(t.node.relative_err)
                        ? std::numeric_limits<double>::infinity()
                        : t.node.relative_err);
    SweepRow row;
    row.num_bases = k;
    row.success_rate = h.node_rate;
    row.median_eps = detail::median(std::move(eps));
    row.records = spec.cardinality();
    out.rows.push_back(row);
    if (out.min_reliable_bases < 0 && h.node_rate >= 0.5)
      out.min_reliable_bases = k;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loss-landscape scans
// ---------------------------------------------------------------------------

enum class ModelKind { Vanilla, Hybrid };

/// Loss values on the plane center + alpha d1 + beta d2 through parameter
/// space, with d1 and d2 random orthonormal directions. The scan space is the
/// family's canonical parameter space when it has at least two dimensions;
/// a one-parameter family (PXP at N = 3) falls back to the space of
/// individual term coefficients, which always has dimension >= 2 and reduces
/// to the same thing whenever parameters map 1:1 onto terms.
struct LandscapeScan {
  std::string scan_space;         // "family-params" or "term-coeffs"
  std::vector<double> center;
  std::vector<double> d1, d2;     // orthonormal, |<d1,d2>| <= 1e-10
  double extent = 0.0;
  int resolution = 0;
  std::vector<double> values;     // row-major: values[i*resolution + j]
  std::string phi_source;         // how the network weights were fixed

  double alpha(int i) const {
    return -extent + 2.0 * extent * i / (resolution - 1);
  }
  double value_at(int i, int j) const {
    return values[static_cast<std::size_t>(i) * resolution +
                  static_cast<std::size_t>(j)];
  }
};

namespace detail {

/// Ansatz with one independent parameter per term (the enclosing coefficient
/// space a tied-parameter family sits inside).
inline Ansatz free_ansatz(const Ansatz& a) {
  std::vector<AnsatzTerm> terms = a.terms();
  std::vector<int> order;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    terms[j].param = static_cast<int>(j);
    terms[j].weight = 1.0;
    order.push_back(terms[j].string.weight());
  }
  const int num_params = static_cast<int>(order.size());
  return Ansatz(a.family(), a.num_sites(), std::move(terms), num_params,
                std::move(order));
}

inline std::vector<double> random_unit(std::size_t dim, SplitMix64& rng) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.normal();
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (!(norm > 0)) throw std::runtime_error("degenerate direction draw");
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace detail

inline LandscapeScan landscape_scan(ModelKind kind, Family family, int n,
                                    std::span<const double> truth,
                                    const Dataset& dataset, double extent,
                                    int resolution, std::uint64_t seed,
                                    const TrainConfig& cfg,
                                    unsigned jobs = 1) {
  if (resolution < 3 || resolution % 2 == 0)
    throw std::invalid_argument("resolution must be odd and >= 3");
  if (!(extent > 0)) throw std::invalid_argument("extent must be positive");

  Ansatz base = make_ansatz(family, n);
  LandscapeScan scan;
  scan.extent = extent;
  scan.resolution = resolution;

  // Choose the scan space and its center (the ground-truth minimum).
  Ansatz scan_ansatz = base;
  if (base.num_params() >= 2) {
    scan.scan_space = "family-params";
    scan.center.assign(truth.begin(), truth.end());
  } else {
    scan.scan_space = "term-coeffs";
    scan_ansatz = detail::free_ansatz(base);
    PauliSumHamiltonian h = base.materialize(truth);
    for (const auto& t : h.terms()) scan.center.push_back(t.coeff);
  }

  // Two random orthonormal directions (Gram-Schmidt with bounded retries).
  SplitMix64 rng(seed);
  scan.d1 = detail::random_unit(scan.center.size(), rng);
  for (int attempt = 0;; ++attempt) {
    std::vector<double> d2 = detail::random_unit(scan.center.size(), rng);
    double dot = 0.0;
    for (std::size_t i = 0; i < d2.size(); ++i) dot += d2[i] * scan.d1[i];
    double norm = 0.0;
    for (std::size_t i = 0; i < d2.size(); ++i) {
      d2[i] -= dot * scan.d1[i];
      norm += d2[i] * d2[i];
    }
    norm = std::sqrt(norm);
    if (norm > 1e-6) {
      for (double& x : d2) x /= norm;
      // Second pass removes the rounding residue of the first projection.
      dot = 0.0;
      for (std::size_t i = 0; i < d2.size(); ++i) dot += d2[i] * scan.d1[i];
      for (std::size_t i = 0; i < d2.size(); ++i) d2[i] -= dot * scan.d1[i];
      norm = 0.0;
      for (double x : d2) norm += x * x;
      norm = std::sqrt(norm);
      for (double& x : d2) x /= norm;
      scan.d2 = std::move(d2);
      break;
    }
    if (attempt >= 16)
      throw std::runtime_error("could not draw orthogonal directions");
  }

  // Fix the network weights for the whole grid: zero for the vanilla scan;
  // for the hybrid scan, a snapshot taken after a seeded warm-up run on this
  // dataset.
  HybridModel proto(scan_ansatz, MlpSpec::defaults_for(n));
  std::vector<double> phi(static_cast<std::size_t>(proto.layout().phi_count),
                          0.0);
  if (kind == ModelKind::Hybrid) {
    HybridModel warm = HybridModel::with_defaults(family, n);
    TrainConfig wcfg = cfg;
    wcfg.seed = derive_seed(seed, 1000);
    SplitMix64 init_rng(wcfg.seed);
    std::vector<double> wparams =
        warm.init_params(init_rng, wcfg.theta_init_lo, wcfg.theta_init_hi);
    warm.set_nn_enabled(true);
    warm.set_theta_frozen(false);
    TrialResult scratch;
    detail::train_phase(warm, wparams, dataset, wcfg, wcfg.warmup_steps,
                        scratch);
    const auto& wl = warm.layout();
    for (int k = 0; k < wl.phi_count; ++k)
      phi[static_cast<std::size_t>(k)] =
          wparams[static_cast<std::size_t>(wl.phi_offset + k)];
    scan.phi_source = "warmup_snapshot(seed=" + std::to_string(wcfg.seed) +
                      ", steps=" + std::to_string(wcfg.warmup_steps) + ")";
  } else {
    scan.phi_source = "zero";
  }

  scan.values.assign(
      static_cast<std::size_t>(resolution) * resolution, 0.0);
  const std::size_t cells =
      static_cast<std::size_t>(resolution) * resolution;
  parallel_for(cells, jobs, [&](std::size_t cell) {
    const int i = static_cast<int>(cell) / resolution;
    const int j = static_cast<int>(cell) % resolution;
    const double a = scan.alpha(i);
    const double bta = scan.alpha(j);
    HybridModel model(scan_ansatz, MlpSpec::defaults_for(n));
    model.set_nn_enabled(kind == ModelKind::Hybrid);
    std::vector<double> params(
        static_cast<std::size_t>(model.layout().total()), 0.0);
    for (std::size_t p = 0; p < scan.center.size(); ++p)
      params[p] = scan.center[p] + a * scan.d1[p] + bta * scan.d2[p];
    for (std::size_t p = 0; p < phi.size(); ++p)
      params[static_cast<std::size_t>(model.layout().phi_offset) + p] = phi[p];
    scan.values[cell] = nll_loss_value(model, params, dataset, cfg);
  });
  return scan;
}

/// Number of strict local minima over existing 8-neighborhoods; a smooth
/// single-basin landscape yields exactly one.
inline int count_local_minima(const LandscapeScan& scan) {
  const int res = scan.resolution;
  int count = 0;
  for (int i = 0; i < res; ++i) {
    for (int j = 0; j < res; ++j) {
      double v = scan.value_at(i, j);
      bool is_min = true;
      for (int di = -1; di <= 1 && is_min; ++di) {
        for (int dj = -1; dj <= 1 && is_min; ++dj) {
          if (di == 0 && dj == 0) continue;
          int ni = i + di, nj = j + dj;
          if (ni < 0 || nj < 0 || ni >= res || nj >= res) continue;
          if (scan.value_at(ni, nj) <= v) is_min = false;
        }
      }
      if (is_min) ++count;
    }
  }
  return count;
}

}  // namespace hamlearn
