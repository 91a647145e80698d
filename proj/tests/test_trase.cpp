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
#include "trase/augmented.hpp"
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

// Linear network reproducing x'' + 2 zeta wn x' + wn^2 x = u.
std::pair<NetSpec, ParamVector> oscillator_net(const OscillatorParams& p) {
  const Matrix A = (Matrix(2, 2) << 0.0, 1.0, -p.omega_n * p.omega_n,
                    -2.0 * p.zeta * p.omega_n)
                       .finished();
  return linear_net(A, (Vector(2) << 0.0, 1.0).finished());
}

}  // namespace

TEST(AugState, StackAndSplit) {
  const AugState a{(Vector(2) << 1, 2).finished(), (Vector(2) << 3, 4).finished()};
  const Vector z = a.stacked();
  EXPECT_EQ(z, (Vector(4) << 1, 2, 3, 4).finished());
  const AugState b = AugState::split(z);
  EXPECT_EQ(b.x, a.x);
  EXPECT_EQ(b.s, a.s);
}

TEST(GEval, LinearNetWithZeroSensitivity) {
  const auto [s, th] = oscillator_net(OscillatorParams{});
  const Vector z = (Vector(4) << 0.5, -1.0, 0.0, 0.0).finished();
  const Vector g = g_eval(s, th, z, 0.0, 1.0, no_exogenous());
  EXPECT_LT((g.tail(2) - (Vector(2) << 0.0, 1.0).finished()).norm(), 1e-15);
}

TEST(GEval, OscillatorSensitivityField) {
  const OscillatorParams p;
  const auto [s, th] = oscillator_net(p);
  const double sx = 0.3, sv = -0.7;
  const Vector z = (Vector(4) << 1.0, 0.2, sx, sv).finished();
  const Vector g = g_eval(s, th, z, 0.0, 2.0, no_exogenous());
  const double wn = p.omega_n, ze = p.zeta;
  EXPECT_NEAR(g[2], sv, 1e-15);
  EXPECT_NEAR(g[3], -wn * wn * sx - 2 * ze * wn * sv + 1.0, 1e-14);
  // Same as the ground-truth generator's field.
  const Vector truth = oscillator_truth_rhs(p, 2.0, z);
  EXPECT_LT((g - truth).norm(), 1e-14);
}

TEST(GEval, CompositionalOracle) {
  std::mt19937_64 rng(4);
  for (const NetSpec& s : {tanh_net(2, 6), leaky_net(3, 5), tanh_net(2, 4, 2)}) {
    const ParamVector th = init_params(s, 4);
    const Vector z = random_vector(rng, 2 * s.state_dim);
    const Vector y = random_vector(rng, s.exo_dim);
    const Vector x = z.head(s.state_dim);
    const ModelInput in{x, 0.3, 1.1, y};
    Vector want(2 * s.state_dim);
    want << eval_f(s, th, in), jac_u(s, th, in) + jac_x(s, th, in) * z.tail(s.state_dim);
    EXPECT_LT((g_eval(s, th, z, 0.3, 1.1, y) - want).norm(), 1e-13);
  }
}

TEST(TraseForward, LinearScalarSensitivityClosedForm) {
  const auto [s, th] = linear_net(Matrix::Constant(1, 1, -3.0), Vector::Ones(1));
  const TimeGrid g = TimeGrid::uniform(0.0, 3.0, 31);
  const Matrix z = trase_forward(s, th, Vector::Constant(1, 2.0), 1.0, nullptr, g, rk4(1e-3));
  const Scenario truth = gen_linear_scalar(1.0, 2.0, g);
  EXPECT_LT((z.col(0) - truth.states.col(0)).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((z.col(1) - truth.sensitivities->col(0)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(TraseForward, OscillatorFieldMatchesAnalyticSensitivity) {
  const auto [s, th] = oscillator_net(OscillatorParams{});
  const SolverConfig cfg = rk4(1e-3);
  Matrix first;
  for (double u : {0.5, 1.0, 4.0}) {
    const Scenario truth = gen_oscillator(OscillatorParams{}, u, reference_grid());
    const Matrix z = trase_forward(s, th, truth.states.row(0).transpose(), u, nullptr,
                                   reference_grid(), cfg);
    EXPECT_LT((z.rightCols(2) - *truth.sensitivities).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((z.leftCols(2) - truth.states).cwiseAbs().maxCoeff(), 1e-6);
    if (first.size() == 0) first = z.rightCols(2);
    EXPECT_LT((z.rightCols(2) - first).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(TraseForward, StateBlockEqualsNodeForwardBitwise) {
  for (const NetSpec& s : {tanh_net(2, 12), leaky_net(2, 12)}) {
    const ParamVector th = init_params(s, 6);
    const Vector x0 = (Vector(2) << 2.0, 1.0).finished();
    const SolverConfig cfg = rk4(7e-3);
    const Matrix z = trase_forward(s, th, x0, 1.3, nullptr, reference_grid(), cfg);
    const auto x = node_forward(s, th, x0, 1.3, nullptr, reference_grid(), cfg);
    EXPECT_TRUE(z.leftCols(2) == x.predicted);
  }
}

TEST(TraseForward, ZeroParameters) {
  const NetSpec s = tanh_net(2, 4);
  const ParamVector th{Vector::Zero(static_cast<Eigen::Index>(s.param_count()))};
  const Vector x0 = (Vector(2) << 2.0, 1.0).finished();
  const Matrix z = trase_forward(s, th, x0, 1.0, nullptr, reference_grid(), rk4(0.01));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    EXPECT_EQ(z.row(i).head(2).transpose(), x0);
    EXPECT_EQ(z.row(i).tail(2).transpose(), Vector::Zero(2));
  }
}

TEST(AugAdjointRhs, ReducesToVanillaWhenSensitivityAdjointVanishes) {
  std::mt19937_64 rng(9);
  const NetSpec s = tanh_net(2, 7);
  const ParamVector th = init_params(s, 9);
  const Vector z = random_vector(rng, 4), ax = random_vector(rng, 2);
  Vector az = Vector::Zero(4);
  az.head(2) = ax;
  const Vector r = aug_adjoint_rhs(s, th, z, az, 0.0, 1.0, no_exogenous());
  const Vector x = z.head(2);
  const Matrix J = jac_x(s, th, ModelInput{x, 0.0, 1.0, no_exogenous()});
  EXPECT_LT((r.head(2) + J.transpose() * ax).norm(), 1e-13);
  EXPECT_EQ(r.tail(2), Vector::Zero(2));
}

TEST(AugAdjointRhs, LinearNetwork) {
  const Matrix A = (Matrix(2, 2) << -1.0, 0.4, 0.3, -2.0).finished();
  const auto [s, th] = linear_net(A, Vector::Ones(2));
  std::mt19937_64 rng(1);
  const Vector z = random_vector(rng, 4), az = random_vector(rng, 4);
  const Vector r = aug_adjoint_rhs(s, th, z, az, 0.0, 1.0, no_exogenous());
  EXPECT_LT((r.head(2) + A.transpose() * az.head(2)).norm(), 1e-14);
  EXPECT_LT((r.tail(2) + A.transpose() * az.tail(2)).norm(), 1e-14);
}

TEST(AugAdjointRhs, MatchesFiniteDifferenceJacobian) {
  std::mt19937_64 rng(21);
  for (const NetSpec& s : {tanh_net(2, 6), mlp(2, 1, {{5, Activation::Tanh}, {4, Activation::Tanh}})}) {
    for (int rep = 0; rep < 10; ++rep) {
      const ParamVector th{random_vector(rng, static_cast<Eigen::Index>(s.param_count()))};
      const Vector z = random_vector(rng, 2 * s.state_dim), az = random_vector(rng, 2 * s.state_dim);
      const Vector y = random_vector(rng, s.exo_dim);
      const Matrix J = fd_jacobian(
          [&](const Vector& zz) { return g_eval(s, th, zz, 0.0, 0.9, y); }, z, 1e-5);
      const Vector want = -(J.transpose() * az);
      EXPECT_LT(rel_err(aug_adjoint_rhs(s, th, z, az, 0.0, 0.9, y), want, 1e-6), 1e-4);
      EXPECT_LT(rel_err(aug_jacobian(s, th, z, 0.0, 0.9, y), J, 1e-6), 1e-4);
    }
  }
}

TEST(AugJacobian, BlockStructure) {
  std::mt19937_64 rng(33);
  for (const NetSpec& s : {tanh_net(2, 8), leaky_net(2, 8)}) {
    for (int rep = 0; rep < 20; ++rep) {
      const ParamVector th{random_vector(rng, static_cast<Eigen::Index>(s.param_count()))};
      const Vector z = random_vector(rng, 4, 2.0);
      const double u = random_vector(rng, 1, 3.0)[0];
      const Matrix J = aug_jacobian(s, th, z, 0.0, u, no_exogenous());
      EXPECT_TRUE((J.topRightCorner(2, 2).array() == 0.0).all());
      EXPECT_TRUE(J.topLeftCorner(2, 2) == J.bottomRightCorner(2, 2));
    }
  }
}

TEST(TraseAdjoint, ZeroResidualGivesZeroGradient) {
  const NetSpec s = tanh_net(2, 8);
  const ParamVector th = init_params(s, 1);
  Scenario sc = osc_u1();
  const SolverConfig cfg = rk4(7e-3);
  const Matrix z = trase_forward(s, th, sc.states.row(0).transpose(), 1.0, nullptr, sc.grid, cfg);
  sc.states = z.leftCols(2);
  sc.sensitivities = z.rightCols(2);
  const GradResult r = trase_adjoint_grad(s, th, sc, cfg, LossWeights{});
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.grad, Vector::Zero(th.size()));
}

TEST(TraseAdjoint, ReducesToNodeWithoutSensitivityLoss) {
  const SolverConfig cfg = rk4(7e-3);
  for (const NetSpec& s : {tanh_net(2, 12), leaky_net(2, 12)}) {
    const ParamVector th = init_params(s, 2);
    const GradResult node = node_adjoint_grad(s, th, osc_u1(), cfg, LossWeights{});
    const GradResult aug = trase_adjoint_grad(s, th, osc_u1(), cfg, LossWeights{1.0, 0.0, {}});
    EXPECT_LT(rel_err(aug.grad, node.grad), 1e-6);
    EXPECT_NEAR(aug.loss, node.loss, 1e-14);
  }
}

TEST(TraseAdjoint, MatchesFiniteDifferences) {
  const SolverConfig cfg = rk4(7e-3);
  const Scenario lin = gen_linear_scalar(1.0, 2.0, TimeGrid::uniform(0.0, 3.0, 40));
  for (const NetSpec& s : {tanh_net(2, 16), leaky_net(2, 16), tanh_net(1, 8), leaky_net(1, 8)}) {
    const Scenario& sc = s.state_dim == 2 ? osc_u1() : lin;
    const ParamVector th = init_params(s, 11);
    const GradResult r = trase_adjoint_grad(s, th, sc, cfg, LossWeights{});
    EXPECT_NEAR(r.loss, trase_loss(s, th, sc, cfg, LossWeights{}), 1e-13);
    std::mt19937_64 rng(11);
    const double err = fd_gradient_error(
        [&](const ParamVector& p) { return trase_loss(s, p, sc, cfg, LossWeights{}); }, th,
        r.grad, random_coords(rng, th.size(), 20), 1e-6);
    EXPECT_LT(err, 1e-3);
  }
}

TEST(TraseAdjoint, AbsentSensitivityRowsAndWeights) {
  Scenario sc = osc_u1();
  sc.sensitivity_present.assign(sc.grid.size(), true);
  for (std::size_t i = 0; i < sc.grid.size(); i += 3) sc.sensitivity_present[i] = false;
  const NetSpec s = tanh_net(2, 10);
  const ParamVector th = init_params(s, 12);
  const SolverConfig cfg = rk4(7e-3);
  const LossWeights w{0.7, 2.5, {1.0, 0.25}};
  const GradResult r = trase_adjoint_grad(s, th, sc, cfg, w);
  std::mt19937_64 rng(12);
  EXPECT_LT(fd_gradient_error([&](const ParamVector& p) { return trase_loss(s, p, sc, cfg, w); },
                              th, r.grad, random_coords(rng, th.size(), 20), 1e-6),
            1e-3);
}

TEST(TraseAdjoint, ExogenousInputsWithFiniteDifferenceSensitivity) {
  const InverterFixtureParams p;
  const Scenario sc = finite_diff_sensitivity(gen_inverter_fixture(p, 1.039),
                                              gen_inverter_fixture(p, 1.04));
  NetSpec s = tanh_net(2, 10, 2);
  const ParamVector th = init_params(s, 13);
  const SolverConfig cfg = rk4(4e-3);
  const GradResult r = trase_adjoint_grad(s, th, sc, cfg, LossWeights{});
  std::mt19937_64 rng(13);
  EXPECT_LT(fd_gradient_error(
                [&](const ParamVector& q) { return trase_loss(s, q, sc, cfg, LossWeights{}); },
                th, r.grad, random_coords(rng, th.size(), 20), 1e-6),
            1e-3);
}
