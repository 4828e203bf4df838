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
#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hamlearn/hamiltonian.hpp"
#include "hamlearn/statevector.hpp"

namespace hamlearn {

/// Numerically exact propagator e^{-iHt} from the eigendecomposition of the
/// dense Hamiltonian. Data generation uses this; the learner never does.
class ExactPropagator {
 public:
  explicit ExactPropagator(const PauliSumHamiltonian& h, int site_cap = 12)
      : num_sites_(h.num_sites()) {
    MatrixXcd m = dense_matrix(h, site_cap);
    double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-10)
      throw std::runtime_error("hamiltonian matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(m);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("eigendecomposition failed");
    eigenvalues_ = solver.eigenvalues();
    eigenvectors_ = solver.eigenvectors();
  }

  int num_sites() const { return num_sites_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const MatrixXcd& eigenvectors() const { return eigenvectors_; }

  /// V diag(e^{-i lambda t}) V^dagger psi.
  StateVector propagate(const StateVector& psi, double t) const {
    if (psi.num_sites() != num_sites_)
      throw std::invalid_argument("propagator/state size mismatch");
    Eigen::Map<const Eigen::VectorXcd> v(psi.amplitudes().data(),
                                         static_cast<Eigen::Index>(psi.dim()));
    Eigen::VectorXcd modes = eigenvectors_.adjoint() * v;
    for (Eigen::Index k = 0; k < modes.size(); ++k)
      modes[k] *= std::exp(complex(0.0, -eigenvalues_[k] * t));
    Eigen::VectorXcd out = eigenvectors_ * modes;
    return StateVector(num_sites_,
                       std::vector<complex>(out.data(), out.data() + out.size()));
  }

 private:
  int num_sites_;
  Eigen::VectorXd eigenvalues_;
  MatrixXcd eigenvectors_;
};

inline StateVector exact_evolve(const PauliSumHamiltonian& h,
                                const StateVector& psi0, double t) {
  return ExactPropagator(h).propagate(psi0, t);
}

/// Fixed-step integration settings. Output times that are not multiples of
/// dt get a shortened final sub-step; no adaptive control, so the unrolled
/// step structure (and therefore the autodiff tape) is static for a given
/// grid.
struct IntegratorConfig {
  double dt = 0.01;

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  }
};

using VectorField = std::function<StateVector(const StateVector&)>;

namespace detail {

inline bool all_finite(const StateVector& psi) {
  for (const complex& a : psi.amplitudes())
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) return false;
  return true;
}

}  // namespace detail

/// Pre-resolved step sizes for a requested output grid. Both the plain
/// integrator below and the tape-recorded one in model.hpp consume this, so
/// their step splitting is identical by construction.
struct StepSchedule {
  std::vector<double> step_sizes;
  std::vector<std::size_t> output_after;  // completed steps per grid point
};

inline StepSchedule make_step_schedule(std::span<const double> t_grid,
                                       double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  StepSchedule s;
  double prev = 0.0, t = 0.0;
  for (double t_target : t_grid) {
    if (t_target < prev || (t_target == prev && t_target != 0.0))
      throw std::invalid_argument("grid times must ascend from 0");
    prev = t_target;
    while (t < t_target - 1e-12) {
      double h = std::min(dt, t_target - t);
      s.step_sizes.push_back(h);
      t += h;
    }
    s.output_after.push_back(s.step_sizes.size());
  }
  return s;
}

/// One step of Kutta's third-order method (stages at 0, 1/2, 1 with weights
/// 1/6, 2/3, 1/6).
template <typename Field>
StateVector rk3_step(Field&& field, const StateVector& y, double dt) {
  StateVector k1 = field(y);
  StateVector y1(y.num_sites());
  for (std::size_t i = 0; i < y.dim(); ++i) y1[i] = y[i] + 0.5 * dt * k1[i];
  StateVector k2 = field(y1);
  StateVector y2(y.num_sites());
  for (std::size_t i = 0; i < y.dim(); ++i)
    y2[i] = y[i] - dt * k1[i] + 2.0 * dt * k2[i];
  StateVector k3 = field(y2);
  StateVector out(y.num_sites());
  for (std::size_t i = 0; i < y.dim(); ++i)
    out[i] = y[i] + dt * (k1[i] + 4.0 * k2[i] + k3[i]) / 6.0;
  return out;
}

/// Integrates dpsi/dt = field(psi) from t = 0 and returns the state at every
/// grid time. The grid must be non-negative and strictly ascending; a leading
/// 0 entry returns psi0 itself.
template <typename Field>
std::vector<StateVector> rk3_evolve(Field&& field, const StateVector& psi0,
                                    std::span<const double> t_grid,
                                    const IntegratorConfig& cfg) {
  cfg.validate();
  if (t_grid.empty()) return {};
  StepSchedule schedule = make_step_schedule(t_grid, cfg.dt);
  std::vector<StateVector> out;
  out.reserve(t_grid.size());
  StateVector y = psi0;
  std::size_t next_output = 0;
  for (std::size_t step = 0; step <= schedule.step_sizes.size(); ++step) {
    while (next_output < schedule.output_after.size() &&
           schedule.output_after[next_output] == step) {
      out.push_back(y);
      ++next_output;
    }
    if (step == schedule.step_sizes.size()) break;
    y = rk3_step(field, y, schedule.step_sizes[step]);
    if (!detail::all_finite(y))
      throw DivergenceError(step + 1, "non-finite state during rk3");
  }
  return out;
}

}  // namespace hamlearn
