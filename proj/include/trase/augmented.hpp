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

#pragma once

#include "trase/diffnet.hpp"
#include "trase/node.hpp"
#include "trase/odeint.hpp"
#include "trase/scenario.hpp"

namespace trase {

/// z = [x; s]: the state and its sensitivity to the set-point.
struct AugState {
  Vector x;
  Vector s;

  Vector stacked() const;
  static AugState split(const Eigen::Ref<const Vector>& z);
};

/// g(z) = [f(x); df/du + df/dx * s].
Vector g_eval(const NetSpec& spec, const ParamVector& theta, const Eigen::Ref<const Vector>& z,
              double t, double u, const Eigen::Ref<const Vector>& y);

/// Integrates g from z(t0) = [x0; 0]; returns N x 2n samples.
Matrix trase_forward(const NetSpec& spec, const ParamVector& theta, const Vector& x0, double u,
                     const ExogenousSignal* y, const TimeGrid& grid, const SolverConfig& cfg);

/**
 * Right-hand side of the augmented adjoint ODE, -(dg/dz)^T a_z, computed
 * blockwise without forming dg/dz:
 *   d a_x/dt = -(J_x^T a_x + D_x^T a_s)
 *   d a_s/dt = -J_x^T a_s
 * where J_x = df/dx and D_x = d(sens_rhs)/dx.
 */
Vector aug_adjoint_rhs(const NetSpec& spec, const ParamVector& theta,
                       const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Vector>& a_z,
                       double t, double u, const Eigen::Ref<const Vector>& y);

/// Materialized 2n x 2n dg/dz = [[J_x, 0], [D_x, J_x]]. For inspection and
/// tests; the adjoint pass never builds it.
Matrix aug_jacobian(const NetSpec& spec, const ParamVector& theta,
                    const Eigen::Ref<const Vector>& z, double t, double u,
                    const Eigen::Ref<const Vector>& y);

/// Joint state + sensitivity loss of a forward prediction.
double trase_loss(const NetSpec& spec, const ParamVector& theta, const Scenario& sc,
                  const SolverConfig& cfg, const LossWeights& w);

/**
 * Adjoint gradient of the joint loss.
 *
 * Backward state is [x; s; a_x; a_s]; observation jumps add dL/dx(t_i) and
 * dL/ds(t_i) (the latter only on rows with sensitivity data), and the
 * accumulated integrand is a_x^T df/dtheta + a_s^T d(sens_rhs)/dtheta.
 * Scenarios without sensitivities contribute their state loss only.
 */
GradResult trase_adjoint_grad(const NetSpec& spec, const ParamVector& theta,
                              const Scenario& sc, const SolverConfig& cfg,
                              const LossWeights& w, const AdjointOptions& opts = {});

}  // namespace trase
