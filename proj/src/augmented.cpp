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

#include "trase/augmented.hpp"

#include "trase/errors.hpp"

namespace trase {
namespace {

void check_z(const NetSpec& spec, const Eigen::Ref<const Vector>& z) {
  if (z.size() != 2 * spec.state_dim) throw DimensionError("z", 2 * spec.state_dim, z.size());
}

}  // namespace

Vector AugState::stacked() const {
  if (x.size() != s.size()) throw DimensionError("s", x.size(), s.size());
  Vector z(x.size() + s.size());
  z << x, s;
  return z;
}

AugState AugState::split(const Eigen::Ref<const Vector>& z) {
  if (z.size() % 2 != 0) throw DimensionError("z (must be even)", z.size() + 1, z.size());
  const auto n = z.size() / 2;
  return AugState{z.head(n), z.tail(n)};
}

Vector g_eval(const NetSpec& spec, const ParamVector& theta, const Eigen::Ref<const Vector>& z,
              double t, double u, const Eigen::Ref<const Vector>& y) {
  check_z(spec, z);
  const int n = spec.state_dim;
  NetworkPass pass(spec, theta);
  pass.forward(ModelInput{z.head(n), t, u, y}, z.tail(n));
  Vector g(2 * n);
  g << pass.output(), pass.tangent_output();
  return g;
}

Matrix trase_forward(const NetSpec& spec, const ParamVector& theta, const Vector& x0, double u,
                     const ExogenousSignal* y, const TimeGrid& grid, const SolverConfig& cfg) {
  const int n = spec.state_dim;
  if (x0.size() != n) throw DimensionError("x0", n, x0.size());
  if ((y ? y->dim() : 0) != spec.exo_dim) {
    throw DimensionError("y", spec.exo_dim, y ? y->dim() : 0);
  }
  NetworkPass pass(spec, theta);
  Vector yv = no_exogenous();
  Rhs rhs = [&](double t, const Vector& z, Vector& dz) {
    if (y) y->at(t, yv);
    pass.forward(ModelInput{z.head(n), t, u, yv}, z.tail(n));
    dz.resize(2 * n);
    dz.head(n) = pass.output();
    dz.tail(n) = pass.tangent_output();
  };
  Vector z0 = Vector::Zero(2 * n);
  z0.head(n) = x0;
  return integrate(rhs, z0, grid, detail::with_direction(cfg, Direction::Forward));
}

Vector aug_adjoint_rhs(const NetSpec& spec, const ParamVector& theta,
                       const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Vector>& a_z,
                       double t, double u, const Eigen::Ref<const Vector>& y) {
  check_z(spec, z);
  check_z(spec, a_z);
  const int n = spec.state_dim;
  NetworkPass pass(spec, theta);
  pass.forward(ModelInput{z.head(n), t, u, y}, z.tail(n));
  const Vector a_s = a_z.tail(n);
  Vector gx(n), gs(n), gth = Vector::Zero(static_cast<Eigen::Index>(pass.param_count()));
  pass.reverse(a_z.head(n), &a_s, gx, &gs, gth);
  Vector out(2 * n);
  out << -gx, -gs;
  return out;
}

Matrix aug_jacobian(const NetSpec& spec, const ParamVector& theta,
                    const Eigen::Ref<const Vector>& z, double t, double u,
                    const Eigen::Ref<const Vector>& y) {
  check_z(spec, z);
  const int n = spec.state_dim;
  const ModelInput in{z.head(n), t, u, y};
  const auto sj = sens_rhs_jacobians(spec, theta, in, z.tail(n));
  Matrix J = Matrix::Zero(2 * n, 2 * n);
  J.topLeftCorner(n, n) = jac_x(spec, theta, in);
  J.bottomLeftCorner(n, n) = sj.d_x;
  J.bottomRightCorner(n, n) = sj.d_s;
  return J;
}

double trase_loss(const NetSpec& spec, const ParamVector& theta, const Scenario& sc,
                  const SolverConfig& cfg, const LossWeights& w) {
  detail::check_scenario_against(spec, sc);
  const int n = spec.state_dim;
  const auto y = sc.exogenous_signal();
  const Vector x0 = sc.states.row(0).transpose();
  const Matrix z = trase_forward(spec, theta, x0, sc.u, y ? &*y : nullptr, sc.grid, cfg);
  double loss = w.state * weighted_mse(z.leftCols(n), sc.states, w);
  if (sc.has_sensitivities()) {
    loss += w.sensitivity * weighted_mse(z.rightCols(n), *sc.sensitivities, w, sc.sensitivity_present);
  }
  return loss;
}

GradResult trase_adjoint_grad(const NetSpec& spec, const ParamVector& theta,
                              const Scenario& sc, const SolverConfig& cfg,
                              const LossWeights& w, const AdjointOptions& opts) {
  detail::check_scenario_against(spec, sc);
  w.validate(spec.state_dim);
  const int n = spec.state_dim;
  const auto N = static_cast<Eigen::Index>(sc.grid.size());
  const auto y = sc.exogenous_signal();
  const ExogenousSignal* ysig = y ? &*y : nullptr;
  const Vector x0 = sc.states.row(0).transpose();

  const Matrix z = trase_forward(spec, theta, x0, sc.u, ysig, sc.grid, cfg);
  GradResult out;
  out.loss = w.state * weighted_mse(z.leftCols(n), sc.states, w);

  Eigen::Index sens_rows = 0;
  if (sc.has_sensitivities()) {
    out.loss += w.sensitivity *
                weighted_mse(z.rightCols(n), *sc.sensitivities, w, sc.sensitivity_present);
    for (Eigen::Index i = 0; i < N; ++i) {
      if (sc.sensitivity_row_present(static_cast<std::size_t>(i))) ++sens_rows;
    }
  }
  const double x_scale = 2.0 * w.state / static_cast<double>(N * n);
  const double s_scale =
      sens_rows > 0 ? 2.0 * w.sensitivity / static_cast<double>(sens_rows * n) : 0.0;

  NetworkPass pass(spec, theta);
  Vector yv = no_exogenous(), gx(n), gs(n), a_s(n);
  // Backward state [x; s; a_x; a_s].
  RhsWithQuadrature rhs = [&](double t, const Vector& st, Vector& d, Vector& q) {
    if (ysig) ysig->at(t, yv);
    pass.forward(ModelInput{st.segment(0, n), t, sc.u, yv}, st.segment(n, n));
    a_s = st.segment(3 * n, n);
    q.setZero(static_cast<Eigen::Index>(pass.param_count()));
    pass.reverse(st.segment(2 * n, n), &a_s, gx, &gs, q);
    d.resize(4 * n);
    d.segment(0, n) = pass.output();
    d.segment(n, n) = pass.tangent_output();
    d.segment(2 * n, n) = -gx;
    d.segment(3 * n, n) = -gs;
  };
  GridHook hook = [&](std::size_t i, double, Vector& st) {
    const auto r = static_cast<Eigen::Index>(i);
    for (int c = 0; c < n; ++c) {
      st[2 * n + c] += x_scale * w.channel_weight(c) * (z(r, c) - sc.states(r, c));
    }
    if (sc.sensitivity_row_present(i)) {
      for (int c = 0; c < n; ++c) {
        st[3 * n + c] +=
            s_scale * w.channel_weight(c) * (z(r, n + c) - (*sc.sensitivities)(r, c));
      }
    }
    if (opts.stored_trajectory) st.head(2 * n) = z.row(r).transpose();
  };

  Vector end = Vector::Zero(4 * n);
  end.head(2 * n) = z.row(N - 1).transpose();
  const auto rev = integrate_reverse_with_accumulator(
      rhs, static_cast<Eigen::Index>(spec.param_count()), end, sc.grid, cfg, hook);
  out.grad = rev.accumulated;
  return out;
}

}  // namespace trase
