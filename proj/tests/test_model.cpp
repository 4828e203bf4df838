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

#include "hamlearn/model.hpp"
#include "hamlearn/train.hpp"
#include "support/test_helpers.hpp"

using namespace hamlearn;
using namespace hamlearn::testing;

namespace {

Ansatz single_z_ansatz() {
  // one-parameter H = theta * (Z x I) on two sites; the smallest model the
  // family builders do not cover
  PauliString zi("ZI");
  std::vector<AnsatzTerm> terms = {{zi, zi.masks(), 0, 1.0}};
  return Ansatz(Family::Heisenberg, 2, std::move(terms), 1, {1});
}

}  // namespace

TEST_CASE("vector field on an eigenstate is -i times the eigenvalue",
          "[model]") {
  HybridModel model(single_z_ansatz(), MlpSpec{{8, 4, 8}, 0.0});
  model.set_nn_enabled(false);
  std::vector<double> params(static_cast<std::size_t>(model.layout().total()),
                             0.0);
  params[0] = 1.0;
  StateVector psi = basis_state(2, 0);
  StateVector out = model.vector_field(psi, params);
  CHECK(out[0] == complex(0, -1));
  for (std::size_t i = 1; i < out.dim(); ++i) CHECK(out[i] == complex(0, 0));
}

TEST_CASE("zero network weights reproduce the vanilla field bit for bit",
          "[model]") {
  SplitMix64 rng(21);
  HybridModel model = HybridModel::with_defaults(Family::Heisenberg, 3);
  std::vector<double> params = model.init_params(rng, -0.5, 0.5);
  // zero out phi
  for (int k = 0; k < model.layout().phi_count; ++k)
    params[static_cast<std::size_t>(model.layout().phi_offset + k)] = 0.0;
  StateVector psi = random_state(3, rng);
  model.set_nn_enabled(true);
  StateVector hybrid = model.vector_field(psi, params);
  model.set_nn_enabled(false);
  StateVector vanilla = model.vector_field(psi, params);
  for (std::size_t i = 0; i < psi.dim(); ++i) CHECK(hybrid[i] == vanilla[i]);
}

TEST_CASE("hybrid field equals the independent Eigen MLP oracle", "[model]") {
  SplitMix64 rng(22);
  HybridModel model = HybridModel::with_defaults(Family::PXP, 3);
  std::vector<double> params = model.init_params(rng, -0.5, 0.5);
  StateVector psi = random_state(3, rng);
  model.set_nn_enabled(true);
  StateVector got = model.vector_field(psi, params);

  // oracle: -i * (H_A psi + MLP(psi)) with the MLP evaluated through Eigen
  const auto& lay = model.layout();
  Eigen::VectorXd h =
      Eigen::Map<const Eigen::VectorXd>(as_real(psi.amplitudes()).data(),
                                        static_cast<Eigen::Index>(2 * psi.dim()));
  for (std::size_t l = 0; l < lay.layers.size(); ++l) {
    const auto& seg = lay.layers[l];
    Eigen::MatrixXd w = Eigen::Map<const Eigen::MatrixXd>(
        params.data() + seg.w_off, seg.cols, seg.rows).transpose();
    Eigen::VectorXd b =
        Eigen::Map<const Eigen::VectorXd>(params.data() + seg.b_off, seg.rows);
    h = (w * h + b).eval();
    if (l + 1 < lay.layers.size()) h = h.array().tanh().matrix();
  }
  VectorXcd hpsi =
      dense_matrix(model.ansatz().materialize(model.theta(params))) *
      to_eigen(psi);
  for (std::size_t i = 0; i < psi.dim(); ++i) {
    complex nn(h[static_cast<Eigen::Index>(2 * i)],
               h[static_cast<Eigen::Index>(2 * i + 1)]);
    complex expected =
        complex(0, -1) * (hpsi[static_cast<Eigen::Index>(i)] + nn);
    CHECK(std::abs(got[i] - expected) < 1e-12);
  }
}

TEST_CASE("vanilla field is linear", "[model]") {
  SplitMix64 rng(23);
  HybridModel model = HybridModel::with_defaults(Family::DenseNN, 3);
  model.set_nn_enabled(false);
  std::vector<double> params = model.init_params(rng, -1.0, 1.0);
  StateVector a = random_state(3, rng), b = random_state(3, rng);
  complex alpha(0.3, -0.7), beta(-1.1, 0.2);
  StateVector mix(3);
  for (std::size_t i = 0; i < mix.dim(); ++i) mix[i] = alpha * a[i] + beta * b[i];
  StateVector fa = model.vector_field(a, params);
  StateVector fb = model.vector_field(b, params);
  StateVector fmix = model.vector_field(mix, params);
  for (std::size_t i = 0; i < mix.dim(); ++i)
    CHECK(std::abs(fmix[i] - (alpha * fa[i] + beta * fb[i])) < 1e-12);
}

TEST_CASE("prediction with zero field returns the input everywhere",
          "[model]") {
  HybridModel model(single_z_ansatz(), MlpSpec{{8, 4, 8}, 0.0});
  model.set_nn_enabled(true);
  std::vector<double> params(static_cast<std::size_t>(model.layout().total()),
                             0.0);
  StateVector psi = basis_state(2, 2);
  std::vector<double> grid = {0.2, 0.4, 1.0};
  auto states = model.predict_states(psi, grid, IntegratorConfig{0.05}, params);
  for (const auto& s : states)
    for (std::size_t i = 0; i < s.dim(); ++i) CHECK(s[i] == psi[i]);
}

TEST_CASE("vanilla prediction at the true parameters tracks exact evolution",
          "[model]") {
  SplitMix64 rng(24);
  std::vector<double> truth = sample_truth(Family::Heisenberg, 3, 2024);
  HybridModel model = HybridModel::with_defaults(Family::Heisenberg, 3);
  model.set_nn_enabled(false);
  std::vector<double> params(static_cast<std::size_t>(model.layout().total()),
                             0.0);
  std::copy(truth.begin(), truth.end(), params.begin());
  StateVector psi0 = basis_state(3, 5);
  std::vector<double> grid = {1.0};
  double drift = 0.0;
  auto states =
      model.predict_states(psi0, grid, IntegratorConfig{0.01}, params, &drift);
  PauliSumHamiltonian h = build_hamiltonian(Family::Heisenberg, 3, truth);
  StateVector exact = exact_evolve(h, psi0, 1.0);
  CHECK(fidelity(exact, states[0].normalized()) >= 1.0 - 1e-6);
  CHECK(drift <= 1e-6);  // unit-time drift bound for the unitary field

  // a hybrid with zero network weights integrates to the identical states
  model.set_nn_enabled(true);
  auto hybrid_states =
      model.predict_states(psi0, grid, IntegratorConfig{0.01}, params);
  for (std::size_t i = 0; i < exact.dim(); ++i)
    CHECK(hybrid_states[0][i] == states[0][i]);
}

TEST_CASE("taped prediction equals plain prediction bit for bit", "[model]") {
  SplitMix64 rng(25);
  HybridModel model = HybridModel::with_defaults(Family::PXP, 3);
  model.set_nn_enabled(true);
  std::vector<double> params = model.init_params(rng, -0.5, 0.5);
  StateVector psi0 = basis_state(3, 1);
  std::vector<double> grid = {0.2, 0.35, 0.8};
  IntegratorConfig cfg{0.04};
  auto plain = model.predict_states(psi0, grid, cfg, params);
  Tape tape(params);
  auto nodes = model.record_predict(tape, psi0, grid, cfg);
  REQUIRE(nodes.size() == plain.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const auto& val = tape.value(nodes[k]);
    auto flat = as_real(plain[k].amplitudes());
    REQUIRE(val.size() == flat.size());
    for (std::size_t i = 0; i < val.size(); ++i) CHECK(val[i] == flat[i]);
  }
}

TEST_CASE("network-off gradients ignore phi entirely", "[model]") {
  DatasetSpec spec;
  spec.num_sites = 2;
  spec.family = Family::DenseNN;
  spec.truth_params = sample_truth(Family::DenseNN, 2, 71);
  spec.num_states = 2;
  spec.num_bases = 5;
  spec.shots = 8;
  spec.seed = 72;
  Dataset dataset = generate_dataset(spec);
  HybridModel model(make_ansatz(Family::DenseNN, 2), MlpSpec{{8, 6, 8}, 1e-3});
  model.set_nn_enabled(false);
  TrainConfig cfg;
  cfg.integrator.dt = 0.1;

  SplitMix64 rng(73);
  std::vector<double> p1 = model.init_params(rng, -0.5, 0.5);
  std::vector<double> p2 = p1;
  // different phi, same theta
  for (int k = 0; k < model.layout().phi_count; ++k)
    p2[static_cast<std::size_t>(model.layout().phi_offset + k)] =
        rng.uniform(-1.0, 1.0);

  Tape t1(p1), t2(p2);
  int l1 = record_nll_loss(t1, model, dataset, cfg);
  int l2 = record_nll_loss(t2, model, dataset, cfg);
  CHECK(t1.value(l1)[0] == t2.value(l2)[0]);
  auto g1 = t1.grad(l1);
  auto g2 = t2.grad(l2);
  const auto& lay = model.layout();
  for (int k = 0; k < lay.theta_count; ++k)
    CHECK(g1[static_cast<std::size_t>(k)] == g2[static_cast<std::size_t>(k)]);
  for (int k = 0; k < lay.phi_count; ++k) {
    CHECK(g1[static_cast<std::size_t>(lay.phi_offset + k)] == 0.0);
    CHECK(g2[static_cast<std::size_t>(lay.phi_offset + k)] == 0.0);
  }
}

TEST_CASE("regularization is weight decay times the phi norm", "[model]") {
  HybridModel model(single_z_ansatz(), MlpSpec{{8, 2, 8}, 0.0});
  std::vector<double> params(static_cast<std::size_t>(model.layout().total()),
                             0.5);
  CHECK(model.regularization(params) == 0.0);

  HybridModel decayed(single_z_ansatz(), MlpSpec{{8, 2, 8}, 0.1});
  std::vector<double> p(static_cast<std::size_t>(decayed.layout().total()),
                        0.0);
  p[static_cast<std::size_t>(decayed.layout().phi_offset)] = 1.0;
  p[static_cast<std::size_t>(decayed.layout().phi_offset) + 1] = -1.0;
  CHECK(decayed.regularization(p) == Catch::Approx(0.2).epsilon(1e-14));

  // tape gradient of the penalty is 2 * wd * phi_k
  Tape tape(p);
  int reg = tape.sumsq_params(decayed.layout().phi_offset,
                              decayed.layout().phi_count);
  int loss = tape.scale(0.1, reg);
  auto g = tape.grad(loss);
  CHECK(g[static_cast<std::size_t>(decayed.layout().phi_offset)] ==
        Catch::Approx(0.2).epsilon(1e-12));
  auto fd = finite_difference_grad(
      [&](std::span<const double> q) {
        return decayed.regularization(q);
      },
      p);
  for (std::size_t i = 0; i < p.size(); ++i)
    CHECK(rel_diff(g[i], fd[i]) < 1e-6);
}

TEST_CASE("checkpoints round-trip parameters bit-exactly", "[model]") {
  SplitMix64 rng(26);
  HybridModel model = HybridModel::with_defaults(Family::HeisenbergNNN, 3);
  model.set_nn_enabled(true);
  model.set_theta_frozen(true);
  std::vector<double> params = model.init_params(rng, -0.7, 0.7);
  nlohmann::json j = checkpoint_to_json(model, params);
  Checkpoint back = checkpoint_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.model.num_sites() == 3);
  CHECK(back.model.nn_enabled());
  CHECK(back.model.theta_frozen());
  CHECK(back.model.mlp().layer_widths == model.mlp().layer_widths);
  REQUIRE(back.params.size() == params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    CHECK(back.params[i] == params[i]);
}

TEST_CASE("mlp spec validation", "[model]") {
  CHECK_THROWS_AS(MlpSpec({{16, 16}, 0.0}).validate(3),
                  std::invalid_argument);
  CHECK_THROWS_AS(MlpSpec({{8, 4, 16}, 0.0}).validate(3),
                  std::invalid_argument);
  CHECK_THROWS_AS(MlpSpec({{16, 4, 16}, -0.5}).validate(3),
                  std::invalid_argument);
  MlpSpec::defaults_for(3).validate(3);
}
