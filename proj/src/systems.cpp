/*
 * Copyright 2026 The trase-node Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "trase/systems.hpp"

#include <cmath>

#include "trase/errors.hpp"

namespace trase {

SolverConfig truth_solver() {
  return SolverConfig{Dopri45{1e-10, 1e-12, 0.05}, Direction::Forward};
}

Scenario gen_linear_scalar(double u, double x0, const TimeGrid& grid) {
  const auto N = static_cast<Eigen::Index>(grid.size());
  Scenario sc;
  sc.u = u;
  sc.grid = grid;
  sc.states.resize(N, 1);
  sc.sensitivities = Matrix(N, 1);
  for (Eigen::Index i = 0; i < N; ++i) {
    const double e = std::exp(-3.0 * grid[static_cast<std::size_t>(i)]);
    sc.states(i, 0) = u / 3.0 + (x0 - u / 3.0) * e;
    (*sc.sensitivities)(i, 0) = (1.0 - e) / 3.0;
  }
  sc.state_labels = {"x"};
  return sc;
}

void OscillatorParams::validate() const {
  if (!(omega_n > 0.0)) throw ConfigError("oscillator.omega_n: must be > 0");
  if (!(zeta >= 0.0)) throw ConfigError("oscillator.zeta: must be >= 0");
  if (!std::isfinite(x0) || !std::isfinite(v0)) throw ConfigError("oscillator initial state must be finite");
}

Vector oscillator_truth_rhs(const OscillatorParams& p, double u, const Eigen::Ref<const Vector>& z) {
  if (z.size() != 4) throw DimensionError("z", 4, z.size());
  const double w2 = p.omega_n * p.omega_n;
  const double c = 2.0 * p.zeta * p.omega_n;
  Vector d(4);
  d[0] = z[1];
  d[1] = -w2 * z[0] - c * z[1] + u;
  d[2] = z[3];
  d[3] = -w2 * z[2] - c * z[3] + 1.0;
  return d;
}

Scenario gen_oscillator(const OscillatorParams& p, double u, const TimeGrid& grid,
                        const SolverConfig& cfg) {
  p.validate();
  Rhs rhs = [&](double, const Vector& z, Vector& dz) { dz = oscillator_truth_rhs(p, u, z); };
  Vector z0(4);
  z0 << p.x0, p.v0, 0.0, 0.0;
  SolverConfig fwd = cfg;
  fwd.direction = Direction::Forward;
  const Matrix z = integrate(rhs, z0, grid, fwd);
  Scenario sc;
  sc.u = u;
  sc.grid = grid;
  sc.states = z.leftCols(2);
  sc.sensitivities = Matrix(z.rightCols(2));
  sc.state_labels = {"x", "v"};
  return sc;
}

Scenario finite_diff_sensitivity(const Scenario& a, const Scenario& b) {
  a.validate();
  b.validate();
  if (!(a.grid == b.grid)) throw DataError("finite difference: scenario grids differ");
  if (a.states.cols() != b.states.cols()) {
    throw DataError("finite difference: state layouts differ");
  }
  if (!a.state_labels.empty() && !b.state_labels.empty() && a.state_labels != b.state_labels) {
    throw DataError("finite difference: state labels differ");
  }
  const double du = b.u - a.u;
  if (std::abs(du) < 1e-12) {
    throw DataError("finite difference: degenerate set-point spacing |u_b - u_a| < 1e-12");
  }
  Scenario out = a;
  out.sensitivities = Matrix((b.states - a.states) / du);
  out.sensitivity_present.clear();
  return out;
}

// ---------------------------------------------------------------------------

Matrix inverter_exogenous(const InverterFixtureParams& p, const TimeGrid& grid) {
  Matrix y(static_cast<Eigen::Index>(grid.size()), 2);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    double v = p.v_pre, f = 1.0;
    if (t > p.t_event) {
      const double dt = t - p.t_event;
      const double onset = 1.0 - std::exp(-dt / 0.04);
      v = p.v_pre - p.dip * onset * (0.45 + 0.55 * std::exp(-dt / 0.9)) +
          0.01 * onset * std::exp(-dt / 0.6) * std::sin(6.0 * dt);
      f = 1.0 - 0.004 * onset * std::exp(-dt / 1.5);
    }
    const auto r = static_cast<Eigen::Index>(i);
    y(r, 0) = v;
    y(r, 1) = f;
  }
  return y;
}

Vector inverter_rhs(const InverterFixtureParams& p, double v_ref,
                    const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  if (x.size() != 2) throw DimensionError("x", 2, x.size());
  if (y.size() != 2) throw DimensionError("y", 2, y.size());
  const double vt = y[0], ft = y[1];
  const double iq_cmd = p.i_max * std::tanh(p.k_v * (v_ref - vt) / p.i_max);
  const double id_lim = std::sqrt(std::max(p.i_max * p.i_max - x[1] * x[1], 0.01));
  const double id_cmd = id_lim * std::tanh((p.p_ref / vt - p.k_f * (ft - 1.0)) / id_lim);
  Vector d(2);
  d[0] = (id_cmd - x[0]) / p.tau_d;
  d[1] = (iq_cmd - x[1]) / p.tau_q;
  return d;
}

Scenario gen_inverter_fixture(const InverterFixtureParams& p, double v_ref,
                              const SolverConfig& cfg) {
  const TimeGrid grid = TimeGrid::uniform(0.0, p.t_end, p.points);
  const Matrix y = inverter_exogenous(p, grid);
  const ExogenousSignal ysig(grid, y);

  // Shared initial condition: the pre-event equilibrium at V_ref = 1.04.
  Vector x0(2);
  {
    const Vector y0 = y.row(0).transpose();
    x0 << 0.0, 0.0;
    for (int k = 0; k < 200; ++k) {
      const Vector d = inverter_rhs(p, 1.04, x0, y0);
      x0[0] += p.tau_d * d[0];
      x0[1] += p.tau_q * d[1];
    }
  }

  Vector yv;
  Rhs rhs = [&](double t, const Vector& x, Vector& dx) {
    ysig.at(t, yv);
    dx = inverter_rhs(p, v_ref, x, yv);
  };
  SolverConfig fwd = cfg;
  fwd.direction = Direction::Forward;
  Scenario sc;
  sc.u = v_ref;
  sc.grid = grid;
  sc.states = integrate(rhs, x0, grid, fwd);
  sc.exogenous = y;
  sc.state_labels = {"I_d", "I_q"};
  sc.exo_labels = {"V_t", "f_t"};
  return sc;
}

}  // namespace trase
