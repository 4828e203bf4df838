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

#include "hamlearn/autodiff.hpp"
#include "hamlearn/train.hpp"
#include "support/test_helpers.hpp"

using namespace hamlearn;
using namespace hamlearn::testing;

namespace {

Ansatz two_site_ansatz() {
  std::vector<AnsatzTerm> terms;
  PauliString xi("XI"), zz("ZZ");
  terms.push_back({xi, xi.masks(), 0, 1.0});
  terms.push_back({zz, zz.masks(), 1, 1.0});
  return Ansatz(Family::Heisenberg, 2, std::move(terms), 2, {1, 2});
}

std::vector<double> interleave(const StateVector& psi) {
  auto r = as_real(psi.amplitudes());
  return {r.begin(), r.end()};
}

}  // namespace

TEST_CASE("square function has gradient 2x", "[autodiff]") {
  std::vector<double> params = {3.0};
  Tape tape(params);
  int loss = tape.sumsq_params(0, 1);
  CHECK(tape.value(loss)[0] == 9.0);
  auto g = tape.grad(loss);
  CHECK(g[0] == 6.0);
}

TEST_CASE("a constant functional of parameterized input has zero gradient",
          "[autodiff]") {
  // sum(normalize(abs2(H(theta) psi))) == 1 identically, so the gradient
  // must vanish exactly, not merely to rounding.
  Ansatz ansatz = two_site_ansatz();
  std::vector<double> params = {0.83, -0.41};
  SplitMix64 rng(3);
  StateVector psi = random_state(2, rng);
  Tape tape(params);
  int x = tape.constant(interleave(psi));
  int hx = tape.pauli_apply(ansatz, 0, x);
  int p = tape.normalize(tape.abs2(hx));
  int loss = tape.dot_const({1.0, 1.0, 1.0, 1.0}, p);
  CHECK(std::abs(tape.value(loss)[0] - 1.0) < 1e-14);
  auto g = tape.grad(loss);
  // zero up to the rounding of the normalizing division
  CHECK(std::abs(g[0]) < 1e-14);
  CHECK(std::abs(g[1]) < 1e-14);
}

TEST_CASE("tanh derivative at zero is one", "[autodiff]") {
  std::vector<double> params = {0.0};
  Tape tape(params);
  int y = tape.tanh_op(tape.param_slice(0, 1));
  int loss = tape.dot_const({1.0}, y);
  auto g = tape.grad(loss);
  CHECK(g[0] == 1.0);
}

TEST_CASE("abs2 reverse rule flows 2a*g and 2b*g", "[autodiff]") {
  std::vector<double> params = {1.7, -0.6};
  const double upstream = 0.37;
  Tape tape(params);
  int q = tape.abs2(tape.param_slice(0, 2));
  int loss = tape.dot_const({upstream}, q);
  auto g = tape.grad(loss);
  CHECK(g[0] == 2.0 * 1.7 * upstream);
  CHECK(g[1] == 2.0 * (-0.6) * upstream);
}

TEST_CASE("log clamp floors the value and kills the gradient below it",
          "[autodiff]") {
  std::vector<double> params = {0.25, 1e-14};
  Tape tape(params);
  int lg = tape.log_clamped(tape.param_slice(0, 2), 1e-12);
  CHECK(tape.value(lg)[0] == std::log(0.25));
  CHECK(tape.value(lg)[1] == std::log(1e-12));
  int loss = tape.dot_const({1.0, 1.0}, lg);
  auto g = tape.grad(loss);
  CHECK(g[0] == 1.0 / 0.25);
  CHECK(g[1] == 0.0);
}

TEST_CASE("pauli_apply coefficient gradient matches finite differences",
          "[autodiff]") {
  Ansatz ansatz = two_site_ansatz();
  SplitMix64 rng(8);
  StateVector psi = random_state(2, rng);
  std::vector<double> c(4);
  for (double& v : c) v = rng.uniform(-1.0, 1.0);
  auto loss_fn = [&](std::span<const double> p) {
    Tape tape(p);
    int x = tape.constant(interleave(psi));
    int q = tape.abs2(tape.pauli_apply(ansatz, 0, x));
    return tape.value(tape.dot_const(c, q))[0];
  };
  std::vector<double> params = {0.9, -0.35};
  Tape tape(params);
  int x = tape.constant(interleave(psi));
  int q = tape.abs2(tape.pauli_apply(ansatz, 0, x));
  auto g = tape.grad(tape.dot_const(c, q));
  auto fd = finite_difference_grad(loss_fn, params);
  for (std::size_t i = 0; i < params.size(); ++i)
    CHECK(rel_diff(g[i], fd[i]) < 1e-6);
}

TEST_CASE("affine and tanh gradients match finite differences", "[autodiff]") {
  SplitMix64 rng(9);
  std::vector<double> params(2 * 3 + 2);
  for (double& v : params) v = rng.uniform(-1.0, 1.0);
  std::vector<double> x = {0.3, -1.1, 0.8};
  std::vector<double> c = {0.7, -0.2};
  auto loss_fn = [&](std::span<const double> p) {
    Tape tape(p);
    int y = tape.affine(0, 2, 3, 6, tape.constant(x));
    return tape.value(tape.dot_const(c, tape.tanh_op(y)))[0];
  };
  Tape tape(params);
  int y = tape.affine(0, 2, 3, 6, tape.constant(x));
  auto g = tape.grad(tape.dot_const(c, tape.tanh_op(y)));
  auto fd = finite_difference_grad(loss_fn, params);
  for (std::size_t i = 0; i < params.size(); ++i)
    CHECK(rel_diff(g[i], fd[i]) < 1e-6);
}

TEST_CASE("composite chain exercising every complex primitive matches FD",
          "[autodiff]") {
  Ansatz ansatz = two_site_ansatz();
  SplitMix64 rng(10);
  StateVector psi = random_state(2, rng);
  PauliBasis basis("XY");
  std::vector<double> c(4);
  for (double& v : c) v = rng.uniform(0.1, 1.0);
  auto build = [&](Tape& tape) {
    int x = tape.constant(interleave(psi));
    int k1 = tape.scale_neg_i(tape.pauli_apply(ansatz, 0, x));
    int k2 = tape.axpy(0.31, k1, x);
    int k3 = tape.scale(1.7, k2);
    int y = tape.rk3_combine(0.12, x, k1, k2, k3);
    int r = tape.basis_rotate(basis, y);
    int p = tape.normalize(tape.abs2(r));
    return tape.dot_const(c, tape.log_clamped(p, 1e-12));
  };
  auto loss_fn = [&](std::span<const double> p) {
    Tape tape(p);
    return tape.value(build(tape))[0];
  };
  std::vector<double> params = {0.45, -0.8};
  Tape tape(params);
  auto g = tape.grad(build(tape));
  auto fd = finite_difference_grad(loss_fn, params);
  for (std::size_t i = 0; i < params.size(); ++i)
    CHECK(rel_diff(g[i], fd[i]) < 1e-6);
}

TEST_CASE("gradient target must be scalar and finite", "[autodiff]") {
  std::vector<double> params = {1.0, 2.0};
  Tape tape(params);
  int v = tape.param_slice(0, 2);
  CHECK_THROWS_AS(tape.grad(v), std::invalid_argument);
  int bad = tape.log_clamped(tape.scale(-1.0, tape.sumsq_params(0, 2)), 0.0);
  CHECK(!std::isfinite(tape.value(bad)[0]));
  CHECK_THROWS_AS(tape.grad(bad), DivergenceError);
}

TEST_CASE("vanilla training loss gradient matches finite differences",
          "[autodiff][nll]") {
  DatasetSpec spec;
  spec.num_sites = 3;
  spec.family = Family::Heisenberg;
  spec.truth_params = sample_truth(Family::Heisenberg, 3, 555);
  spec.num_states = 2;
  spec.num_bases = 6;
  spec.shots = 20;
  spec.seed = 556;
  Dataset dataset = generate_dataset(spec);

  HybridModel model(make_ansatz(Family::Heisenberg, 3),
                    MlpSpec{{16, 8, 16}, 1e-3});
  model.set_nn_enabled(false);
  TrainConfig cfg;
  cfg.integrator.dt = 0.05;
  SplitMix64 rng(557);
  std::vector<double> params = model.init_params(rng, -0.5, 0.5);

  Tape tape(params);
  int loss = record_nll_loss(tape, model, dataset, cfg);
  auto g = tape.grad(loss);
  auto fd = finite_difference_grad(
      [&](std::span<const double> p) {
        return nll_loss_value(model, p, dataset, cfg);
      },
      params);
  const auto& lay = model.layout();
  for (int k = 0; k < lay.theta_count; ++k) {
    auto i = static_cast<std::size_t>(lay.theta_offset + k);
    INFO("theta coordinate " << k << " ad " << g[i] << " fd " << fd[i]);
    CHECK(rel_diff(g[i], fd[i], 1e-7) < 1e-4);
  }
  // phi coordinates are excluded from forward and backward when the network
  // is off
  for (int k = 0; k < lay.phi_count; ++k)
    CHECK(g[static_cast<std::size_t>(lay.phi_offset + k)] == 0.0);
}

TEST_CASE("forward and backward replay bit-identically", "[autodiff]") {
  DatasetSpec spec;
  spec.num_sites = 2;
  spec.family = Family::DenseNN;
  spec.truth_params = sample_truth(Family::DenseNN, 2, 31);
  spec.num_states = 2;
  spec.num_bases = 4;
  spec.shots = 10;
  spec.seed = 32;
  Dataset dataset = generate_dataset(spec);
  HybridModel model(make_ansatz(Family::DenseNN, 2),
                    MlpSpec{{8, 6, 8}, 1e-3});
  TrainConfig cfg;
  cfg.integrator.dt = 0.1;
  SplitMix64 rng(33);
  std::vector<double> params = model.init_params(rng, -0.5, 0.5);

  Tape t1(params), t2(params);
  int l1 = record_nll_loss(t1, model, dataset, cfg);
  int l2 = record_nll_loss(t2, model, dataset, cfg);
  CHECK(t1.value(l1)[0] == t2.value(l2)[0]);
  auto g1 = t1.grad(l1);
  auto g2 = t2.grad(l2);
  REQUIRE(g1.size() == g2.size());
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g2[i]);
}
