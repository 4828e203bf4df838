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

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "hamlearn/bench.hpp"
#include "support/test_helpers.hpp"

using namespace hamlearn;
using namespace hamlearn::testing;

TEST_CASE("power-law fit recovers exact data to machine precision",
          "[bench]") {
  std::vector<CurvePoint> curve;
  for (int i = 0; i < 50; ++i) {
    double t = 0.5 + 0.35 * i;
    curve.push_back({t, 2.0 * std::pow(t, 1.5)});
  }
  PowerLawFit fit = fit_power_law(curve, 0.0, 100.0);
  CHECK(std::abs(fit.A - 2.0) < 1e-10);
  CHECK(std::abs(fit.b - 1.5) < 1e-10);
  CHECK(fit.stderr_b < 1e-8);
  CHECK(fit.stderr_A < 1e-8);
  CHECK(fit.num_points == 50);
}

TEST_CASE("power-law fit recovers noisy data within three standard errors",
          "[bench]") {
  const double true_A = 3.2e-4, true_b = 1.7;
  SplitMix64 rng(515);
  std::vector<CurvePoint> curve;
  for (int i = 0; i < 50; ++i) {
    double t = 1.0 * std::pow(20.0, i / 49.0);
    double y = true_A * std::pow(t, true_b) * (1.0 + 0.01 * rng.normal());
    curve.push_back({t, y});
  }
  PowerLawFit fit = fit_power_law(curve, 0.5, 25.0);
  CHECK(std::abs(fit.b - true_b) < 3.0 * fit.stderr_b);
  CHECK(fit.stderr_b < 0.01);
}

TEST_CASE("power-law fit is scale equivariant", "[bench]") {
  SplitMix64 rng(516);
  std::vector<CurvePoint> curve, scaled;
  const double c = 3.7;
  for (int i = 0; i < 30; ++i) {
    double t = 1.0 + 0.63 * i;
    double y = 5e-3 * std::pow(t, 1.31) * (1.0 + 0.02 * rng.normal());
    curve.push_back({t, y});
    scaled.push_back({c * t, y});
  }
  PowerLawFit f1 = fit_power_law(curve, 0.0, 1e9);
  PowerLawFit f2 = fit_power_law(scaled, 0.0, 1e9);
  CHECK(std::abs(f1.b - f2.b) < 1e-9);
  CHECK(std::abs(f2.A - f1.A * std::pow(c, -f1.b)) <
        1e-9 * std::abs(f2.A));
}

TEST_CASE("power-law fit filters non-positive points and can fail", "[bench]") {
  std::vector<CurvePoint> curve = {
      {1.0, 0.0}, {2.0, -1e-9}, {3.0, 1e-4}, {4.0, 2e-4}, {5.0, 4e-4}};
  PowerLawFit fit = fit_power_law(curve, 0.0, 10.0);
  CHECK(fit.num_filtered == 2);
  CHECK(fit.num_points == 3);
  std::vector<CurvePoint> too_few = {{1.0, 1e-4}, {2.0, 0.0}, {3.0, 2e-4}};
  CHECK_THROWS_AS(fit_power_law(too_few, 0.0, 10.0), std::runtime_error);
}

TEST_CASE("one-percent crossing time inverts the fitted law", "[bench]") {
  PowerLawFit fit;
  fit.A = 1e-4;
  fit.b = 2.0;
  CHECK(std::abs(crossing_time(fit) - 10.0) < 1e-12);
}

TEST_CASE("extrapolation at the exact truth is integrator-limited",
          "[bench]") {
  std::vector<double> truth = {0.8};
  HybridModel model = HybridModel::with_defaults(Family::PXP, 3);
  model.set_nn_enabled(false);
  std::vector<double> params(static_cast<std::size_t>(model.layout().total()),
                             0.0);
  params[0] = truth[0];
  PauliSumHamiltonian h = build_hamiltonian(Family::PXP, 3, truth);

  // t = 0 gives exactly zero infidelity
  std::vector<std::uint64_t> states = {3};
  std::vector<double> zero_grid = {0.0};
  auto at_zero = extrapolation_curve_on_grid(model, params, h, states,
                                             zero_grid, IntegratorConfig{0.01});
  CHECK(at_zero[0].infidelity == 0.0);

  auto curve = extrapolation_curve(model, params, h, {}, 3, 0.2, 20.0, 12,
                                   IntegratorConfig{0.01}, 99);
  for (const auto& p : curve) CHECK(p.infidelity <= 1e-8);
}

TEST_CASE("extrapolation avoids training states when possible and flags reuse",
          "[bench]") {
  std::vector<double> truth = {0.5};
  HybridModel model = HybridModel::with_defaults(Family::PXP, 3);
  model.set_nn_enabled(false);
  std::vector<double> params(static_cast<std::size_t>(model.layout().total()),
                             0.0);
  params[0] = truth[0];
  PauliSumHamiltonian h = build_hamiltonian(Family::PXP, 3, truth);
  std::vector<std::uint64_t> training = {0, 1, 2, 3, 4};
  bool reused = true;
  auto curve = extrapolation_curve(model, params, h, training, 3, 0.5, 5.0, 6,
                                   IntegratorConfig{0.02}, 123, &reused);
  CHECK_FALSE(reused);
  CHECK(curve.size() == 6);

  // request more unseen states than exist
  std::vector<std::uint64_t> all8 = {0, 1, 2, 3, 4, 5, 6, 7};
  extrapolation_curve(model, params, h, all8, 2, 0.5, 5.0, 6,
                      IntegratorConfig{0.02}, 123, &reused);
  CHECK(reused);
}

TEST_CASE("local minima counting distinguishes bowls from ripples",
          "[bench]") {
  LandscapeScan bowl;
  bowl.resolution = 11;
  bowl.extent = 1.0;
  bowl.values.resize(121);
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j)
      bowl.values[static_cast<std::size_t>(i) * 11 + j] =
          (i - 5) * (i - 5) + (j - 5) * (j - 5);
  CHECK(count_local_minima(bowl) == 1);

  LandscapeScan twin = bowl;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      double a = (i - 2) * (i - 2) + (j - 2) * (j - 2);
      double b = (i - 8) * (i - 8) + (j - 8) * (j - 8) + 0.5;
      twin.values[static_cast<std::size_t>(i) * 11 + j] = std::min(a, b);
    }
  CHECK(count_local_minima(twin) == 2);
}

TEST_CASE("landscape scans are centered, orthonormal grids", "[bench]") {
  DatasetSpec spec;
  spec.num_sites = 3;
  spec.family = Family::Heisenberg;
  spec.truth_params = sample_truth(Family::Heisenberg, 3, 661);
  spec.num_states = 2;
  spec.timestamps = {0.2, 0.5};
  spec.num_bases = 5;
  spec.shots = 10;
  spec.seed = 662;
  Dataset ds = generate_dataset(spec);
  TrainConfig cfg;
  cfg.integrator.dt = 0.05;

  LandscapeScan scan =
      landscape_scan(ModelKind::Vanilla, Family::Heisenberg, 3,
                     spec.truth_params, ds, 0.8, 5, 663, cfg, 2);
  CHECK(scan.scan_space == "family-params");
  CHECK(scan.values.size() == 25);
  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < scan.d1.size(); ++i) {
    dot += scan.d1[i] * scan.d2[i];
    n1 += scan.d1[i] * scan.d1[i];
    n2 += scan.d2[i] * scan.d2[i];
  }
  CHECK(std::abs(dot) <= 1e-10);
  CHECK(std::abs(std::sqrt(n1) - 1.0) <= 1e-12);
  CHECK(std::abs(std::sqrt(n2) - 1.0) <= 1e-12);

  // center value equals the loss at the ground truth
  HybridModel model = HybridModel::with_defaults(Family::Heisenberg, 3);
  model.set_nn_enabled(false);
  std::vector<double> params(static_cast<std::size_t>(model.layout().total()),
                             0.0);
  std::copy(spec.truth_params.begin(), spec.truth_params.end(),
            params.begin());
  double center_loss = nll_loss_value(model, params, ds, cfg);
  CHECK(scan.value_at(2, 2) == Catch::Approx(center_loss).epsilon(1e-12));
  CHECK(scan.phi_source == "zero");

  CHECK_THROWS_AS(landscape_scan(ModelKind::Vanilla, Family::Heisenberg, 3,
                                 spec.truth_params, ds, 0.8, 4, 663, cfg),
                  std::invalid_argument);
}

TEST_CASE("one-parameter families scan the expanded term space", "[bench]") {
  DatasetSpec spec;
  spec.num_sites = 3;
  spec.family = Family::PXP;
  spec.truth_params = sample_truth(Family::PXP, 3, 717);
  spec.num_states = 2;
  spec.timestamps = {0.2, 0.5};
  spec.num_bases = 5;
  spec.shots = 10;
  spec.seed = 718;
  Dataset ds = generate_dataset(spec);
  TrainConfig cfg;
  cfg.integrator.dt = 0.05;
  LandscapeScan scan = landscape_scan(ModelKind::Vanilla, Family::PXP, 3,
                                      spec.truth_params, ds, 0.5, 3, 719, cfg);
  CHECK(scan.scan_space == "term-coeffs");
  CHECK(scan.center.size() == 4);  // four expansion fragments
  CHECK(scan.values.size() == 9);
  for (double v : scan.values) CHECK(std::isfinite(v));
}

TEST_CASE("budget sweep rows are ordered with linear record growth",
          "[bench]") {
  DatasetSpec base;
  base.num_sites = 2;
  base.family = Family::Heisenberg;
  base.truth_params.resize(5);
  base.num_states = 2;
  base.timestamps = {0.2, 0.6};
  base.shots = 8;
  TrainConfig cfg;
  cfg.warmup_steps = 3;
  cfg.phase1_steps = 4;
  cfg.phase2_steps = 2;
  cfg.integrator.dt = 0.1;
  cfg.seed = 777;
  std::vector<int> ks = {6, 2};
  SweepResult sweep =
      pauli_budget_sweep(Family::Heisenberg, 2, ks, 2, base, cfg, 2);
  REQUIRE(sweep.rows.size() == 2);
  CHECK(sweep.rows[0].num_bases == 2);
  CHECK(sweep.rows[1].num_bases == 6);
  CHECK(sweep.rows[0].records == 2u * 2u * 2u * 8u);
  CHECK(sweep.rows[1].records == 2u * 2u * 6u * 8u);
  for (const auto& row : sweep.rows) {
    CHECK(row.success_rate >= 0.0);
    CHECK(row.success_rate <= 1.0);
  }
}
