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

#include <vector>

#include "trase/diffnet.hpp"
#include "trase/odeint.hpp"
#include "trase/scenario.hpp"

namespace trase {

/// Joint loss = state * MSE(states) + sensitivity * MSE(sensitivities).
/// MSE is the mean over time points and channels, each channel scaled by
/// `channel[c]` (all ones when empty).
struct LossWeights {
  double state = 1.0;
  double sensitivity = 1.0;
  std::vector<double> channel;

  void validate(Eigen::Index state_dim) const;
  double channel_weight(Eigen::Index c) const {
    return channel.empty() ? 1.0 : channel[static_cast<std::size_t>(c)];
  }
};

struct AdjointOptions {
  /// Reset the re-integrated state to the stored forward samples at every
  /// observation time instead of relying on pure backward re-integration.
  /// Diagnostic only.
  bool stored_trajectory = false;
};

struct GradResult {
  Vector grad;
  double loss = 0.0;
};

struct NodeForwardResult {
  Matrix predicted;  // N x n, row 0 = x0
  Vector terminal_state;
};

/// Weighted mean squared error between equally shaped matrices; rows with
/// `present[i] == false` are skipped (empty mask keeps all rows).
double weighted_mse(const Matrix& pred, const Matrix& truth, const LossWeights& w,
                    const std::vector<bool>& present = {});

/// Integrates dx/dt = f_theta(x, t, u, y(t)) over the grid.
NodeForwardResult node_forward(const NetSpec& spec, const ParamVector& theta,
                               const Vector& x0, double u, const ExogenousSignal* y,
                               const TimeGrid& grid, const SolverConfig& cfg);

/// Loss of a forward prediction against the scenario's state samples.
double node_loss(const NetSpec& spec, const ParamVector& theta, const Scenario& sc,
                 const SolverConfig& cfg, const LossWeights& w);

/**
 * Adjoint gradient of the state loss.
 *
 * Backward pass integrates [x; a] from the last observation to the first,
 * adding dL/dx(t_i) to the adjoint at each observation time, and accumulates
 * dL/dtheta = integral of a^T df/dtheta. x(t) is re-integrated backward
 * from the terminal state; only the terminal state and the sampled
 * predictions (needed for the loss) are kept from the forward pass.
 */
GradResult node_adjoint_grad(const NetSpec& spec, const ParamVector& theta,
                             const Scenario& sc, const SolverConfig& cfg,
                             const LossWeights& w, const AdjointOptions& opts = {});

namespace detail {
void check_scenario_against(const NetSpec& spec, const Scenario& sc);
SolverConfig with_direction(SolverConfig cfg, Direction d);
}  // namespace detail

}  // namespace trase
