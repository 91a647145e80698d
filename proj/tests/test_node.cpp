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

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "trase/errors.hpp"
#include "trase/node.hpp"
#include "trase/systems.hpp"

using namespace trase;
using namespace trase::testing;

namespace {

const TimeGrid& reference_grid() {
  static const TimeGrid g = TimeGrid::uniform(0.0, 7.0, 100);
  return g;
}

const Scenario& osc_u1() {
  static const Scenario sc = gen_oscillator(OscillatorParams{}, 1.0, reference_grid());
  return sc;
}

SolverConfig rk4(double h) { return SolverConfig{Rk4Fixed{h}, Direction::Forward}; }

}  // namespace

TEST(WeightedMse, MeanOverRowsAndChannels) {
  const Matrix p = (Matrix(2, 2) << 1, 2, 3, 4).finished();
  const Matrix t = (Matrix(2, 2) << 0, 2, 3, 2).finished();
  LossWeights w;
  EXPECT_DOUBLE_EQ(weighted_mse(p, t, w), (1.0 + 4.0) / 4.0);
  w.channel = {2.0, 0.5};
  EXPECT_DOUBLE_EQ(weighted_mse(p, t, w), (2.0 * 1.0 + 0.5 * 4.0) / 4.0);
  EXPECT_DOUBLE_EQ(weighted_mse(p, t, w, {false, true}), 0.5 * 4.0 / 2.0);
  EXPECT_DOUBLE_EQ(weighted_mse(p, t, w, {false, false}), 0.0);
}

TEST(LossWeights, Validation) {
  EXPECT_THROW((LossWeights{-1.0, 1.0, {}}.validate(2)), ConfigError);
  EXPECT_THROW((LossWeights{1.0, -0.5, {}}.validate(2)), ConfigError);
  EXPECT_THROW((LossWeights{1.0, 1.0, {1.0}}.validate(2)), ConfigError);
  EXPECT_NO_THROW((LossWeights{0.0, 0.0, {1.0, 3.0}}.validate(2)));
}

TEST(NodeForward, ZeroFieldKeepsInitialState) {
  const NetSpec s = tanh_net(2, 4);
  const ParamVector z{Vector::Zero(static_cast<Eigen::Index>(s.param_count()))};
  const Vector x0 = (Vector(2) << 2.0, 1.0).finished();
  const auto r = node_forward(s, z, x0, 1.0, nullptr, reference_grid(), rk4(7e-3));
  for (Eigen::Index i = 0; i < r.predicted.rows(); ++i) {
    EXPECT_EQ(r.predicted.row(i).transpose(), x0);
  }
  EXPECT_EQ(r.terminal_state, x0);
}

TEST(NodeForward, LinearNetMatchesClosedForm) {
  const auto [s, th] = linear_net(Matrix::Constant(1, 1, -3.0), Vector::Ones(1));
  const TimeGrid g = TimeGrid::uniform(0.0, 2.0, 21);
  const auto r = node_forward(s, th, Vector::Constant(1, 2.0), 1.0, nullptr, g, rk4(1e-3));
  const Scenario truth = gen_linear_scalar(1.0, 2.0, g);
  EXPECT_EQ(r.predicted(0, 0), 2.0);
  EXPECT_LT((r.predicted - truth.states).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(NodeForward, ExogenousDimensionChecked) {
  const NetSpec s = tanh_net(2, 4, 2);
  const ParamVector th = init_params(s, 0);
  EXPECT_THROW(node_forward(s, th, Vector::Zero(2), 1.0, nullptr, reference_grid(), rk4(0.01)),
               DimensionError);
}

TEST(NodeAdjoint, ZeroResidualGivesZeroGradient) {
  const NetSpec s = tanh_net(2, 8);
  const ParamVector th = init_params(s, 1);
  Scenario sc = osc_u1();
  sc.sensitivities.reset();
  const SolverConfig cfg = rk4(7e-3);
  sc.states = node_forward(s, th, sc.states.row(0).transpose(), 1.0, nullptr, sc.grid, cfg)
                  .predicted;
  const GradResult r = node_adjoint_grad(s, th, sc, cfg, LossWeights{});
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.grad, Vector::Zero(th.size()));
}

// f = a x + b u with one terminal observation; x(T) and its parameter
// derivatives in closed form.
TEST(NodeAdjoint, LinearScalarTerminalObservation) {
  const double a = -1.2, b = 0.8, u = 1.5, x0 = 0.4, T = 0.5, target = 0.1;
  const auto [s, th] = linear_net(Matrix::Constant(1, 1, a), Vector::Constant(1, b));
  Scenario sc;
  sc.u = u;
  sc.grid = TimeGrid({0.0, T});
  sc.states = (Matrix(2, 1) << x0, target).finished();
  const GradResult r = node_adjoint_grad(s, th, sc, rk4(1e-4), LossWeights{});

  const double e = std::exp(a * T);
  const double xT = e * x0 + b * u * (e - 1) / a;
  const double dx_da = T * e * x0 + b * u * (T * e / a - (e - 1) / (a * a));
  const double dx_db = u * (e - 1) / a;
  // L = ((xT - target)^2 + 0) / 2
  const double dL = xT - target;
  EXPECT_NEAR(r.loss, 0.5 * dL * dL, 1e-12);
  // Output-layer weights sit after the 2x2 identity block and its biases.
  EXPECT_LT(rel_err(r.grad[6], dL * dx_da), 1e-4);
  EXPECT_LT(rel_err(r.grad[7], dL * dx_db), 1e-4);
  EXPECT_LT(rel_err(r.grad[8], dL * (e - 1) / a), 1e-4);
}

TEST(NodeAdjoint, MatchesFiniteDifferencesBothActivations) {
  Scenario sc = osc_u1();
  const SolverConfig cfg = rk4(7e-3);
  for (const NetSpec& s : {tanh_net(2, 16), leaky_net(2, 16)}) {
    const ParamVector th = init_params(s, 3);
    const GradResult r = node_adjoint_grad(s, th, sc, cfg, LossWeights{});
    EXPECT_NEAR(r.loss, node_loss(s, th, sc, cfg, LossWeights{}), 1e-14);
    std::mt19937_64 rng(3);
    const auto coords = random_coords(rng, th.size(), 20);
    const double err = fd_gradient_error(
        [&](const ParamVector& p) { return node_loss(s, p, sc, cfg, LossWeights{}); }, th, r.grad,
        coords, 1e-6);
    EXPECT_LT(err, 1e-3);
  }
}

TEST(NodeAdjoint, ChannelWeightsAndExogenousInputs) {
  const Scenario sc = gen_inverter_fixture(InverterFixtureParams{}, 1.039);
  NetSpec s = tanh_net(2, 10, 2);
  const ParamVector th = init_params(s, 5);
  const SolverConfig cfg = rk4(4e-3);
  const LossWeights w{1.0, 1.0, {3.0, 0.5}};
  const GradResult r = node_adjoint_grad(s, th, sc, cfg, w);
  std::mt19937_64 rng(8);
  const double err = fd_gradient_error(
      [&](const ParamVector& p) { return node_loss(s, p, sc, cfg, w); }, th, r.grad,
      random_coords(rng, th.size(), 20), 1e-6);
  EXPECT_LT(err, 1e-3);
}

TEST(NodeAdjoint, StoredTrajectoryModeAgrees) {
  const NetSpec s = tanh_net(2, 8);
  const ParamVector th = init_params(s, 2);
  const SolverConfig cfg = rk4(7e-3);
  const GradResult a = node_adjoint_grad(s, th, osc_u1(), cfg, LossWeights{});
  const GradResult b = node_adjoint_grad(s, th, osc_u1(), cfg, LossWeights{}, {true});
  EXPECT_LT(rel_err(a.grad, b.grad), 1e-6);
}

TEST(NodeAdjoint, RejectsMismatchedScenario) {
  const NetSpec s = tanh_net(3, 4);
  EXPECT_THROW(node_adjoint_grad(s, init_params(s, 0), osc_u1(), rk4(0.01), LossWeights{}),
               DimensionError);
  Scenario empty;
  empty.states = Matrix(0, 2);
  const NetSpec s2 = tanh_net(2, 4);
  EXPECT_THROW(node_adjoint_grad(s2, init_params(s2, 0), empty, rk4(0.01), LossWeights{}),
               DataError);
}
