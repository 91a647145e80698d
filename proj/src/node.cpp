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

#include "trase/node.hpp"

#include <cmath>

#include "trase/errors.hpp"

namespace trase {

void LossWeights::validate(Eigen::Index state_dim) const {
  if (!(state >= 0.0) || !std::isfinite(state)) throw ConfigError("loss_weights.state: must be >= 0");
  if (!(sensitivity >= 0.0) || !std::isfinite(sensitivity)) {
    throw ConfigError("loss_weights.sensitivity: must be >= 0");
  }
  if (!channel.empty() && static_cast<Eigen::Index>(channel.size()) != state_dim) {
    throw ConfigError("loss_weights.channel: length must equal the state dimension");
  }
  for (double c : channel) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("loss_weights.channel: entries must be >= 0");
  }
}

double weighted_mse(const Matrix& pred, const Matrix& truth, const LossWeights& w,
                    const std::vector<bool>& present) {
  if (pred.rows() != truth.rows()) throw DimensionError("rows", truth.rows(), pred.rows());
  if (pred.cols() != truth.cols()) throw DimensionError("cols", truth.cols(), pred.cols());
  double acc = 0.0;
  Eigen::Index rows = 0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    if (!present.empty() && !present[static_cast<std::size_t>(i)]) continue;
    ++rows;
    for (Eigen::Index c = 0; c < pred.cols(); ++c) {
      const double e = pred(i, c) - truth(i, c);
      acc += w.channel_weight(c) * e * e;
    }
  }
  if (rows == 0) return 0.0;
  return acc / static_cast<double>(rows * pred.cols());
}

namespace detail {

void check_scenario_against(const NetSpec& spec, const Scenario& sc) {
  sc.validate();
  if (sc.grid.empty()) throw DataError("scenario: no ground truth at any grid time");
  if (sc.state_dim() != spec.state_dim) {
    throw DimensionError("scenario state", spec.state_dim, sc.state_dim());
  }
  if (sc.exo_dim() != spec.exo_dim) {
    throw DimensionError("scenario exogenous", spec.exo_dim, sc.exo_dim());
  }
}

SolverConfig with_direction(SolverConfig cfg, Direction d) {
  cfg.direction = d;
  return cfg;
}

}  // namespace detail

NodeForwardResult node_forward(const NetSpec& spec, const ParamVector& theta,
                               const Vector& x0, double u, const ExogenousSignal* y,
                               const TimeGrid& grid, const SolverConfig& cfg) {
  if (x0.size() != spec.state_dim) throw DimensionError("x0", spec.state_dim, x0.size());
  if ((y ? y->dim() : 0) != spec.exo_dim) {
    throw DimensionError("y", spec.exo_dim, y ? y->dim() : 0);
  }
  NetworkPass pass(spec, theta);
  Vector yv = no_exogenous();
  Rhs rhs = [&](double t, const Vector& x, Vector& dx) {
    if (y) y->at(t, yv);
    pass.forward(ModelInput{x, t, u, yv});
    dx = pass.output();
  };
  NodeForwardResult res;
  res.predicted = integrate(rhs, x0, grid, detail::with_direction(cfg, Direction::Forward));
  res.terminal_state = grid.empty() ? x0 : Vector(res.predicted.row(res.predicted.rows() - 1).transpose());
  return res;
}

double node_loss(const NetSpec& spec, const ParamVector& theta, const Scenario& sc,
                 const SolverConfig& cfg, const LossWeights& w) {
  detail::check_scenario_against(spec, sc);
  const auto y = sc.exogenous_signal();
  const Vector x0 = sc.states.row(0).transpose();
  const auto fwd = node_forward(spec, theta, x0, sc.u, y ? &*y : nullptr, sc.grid, cfg);
  return w.state * weighted_mse(fwd.predicted, sc.states, w);
}

GradResult node_adjoint_grad(const NetSpec& spec, const ParamVector& theta,
                             const Scenario& sc, const SolverConfig& cfg,
                             const LossWeights& w, const AdjointOptions& opts) {
  detail::check_scenario_against(spec, sc);
  w.validate(spec.state_dim);
  const int n = spec.state_dim;
  const auto N = static_cast<Eigen::Index>(sc.grid.size());
  const auto y = sc.exogenous_signal();
  const ExogenousSignal* ysig = y ? &*y : nullptr;
  const Vector x0 = sc.states.row(0).transpose();

  const auto fwd = node_forward(spec, theta, x0, sc.u, ysig, sc.grid, cfg);
  GradResult out;
  out.loss = w.state * weighted_mse(fwd.predicted, sc.states, w);

  // dL/dx at observation i.
  const double scale = 2.0 * w.state / static_cast<double>(N * n);
  auto jump = [&](std::size_t i) {
    Vector j(n);
    for (int c = 0; c < n; ++c) {
      const auto r = static_cast<Eigen::Index>(i);
      j[c] = scale * w.channel_weight(c) * (fwd.predicted(r, c) - sc.states(r, c));
    }
    return j;
  };

  NetworkPass pass(spec, theta);
  Vector yv = no_exogenous(), gx(n);
  // Backward state [x; a].
  RhsWithQuadrature rhs = [&](double t, const Vector& st, Vector& d, Vector& q) {
    if (ysig) ysig->at(t, yv);
    const auto x = st.head(n);
    const auto a = st.tail(n);
    pass.forward(ModelInput{x, t, sc.u, yv});
    q.setZero(static_cast<Eigen::Index>(pass.param_count()));
    pass.reverse(a, nullptr, gx, nullptr, q);
    d.resize(2 * n);
    d.head(n) = pass.output();
    d.tail(n) = -gx;
  };
  GridHook hook = [&](std::size_t i, double, Vector& st) {
    st.tail(n) += jump(i);
    if (opts.stored_trajectory) st.head(n) = fwd.predicted.row(static_cast<Eigen::Index>(i)).transpose();
  };

  Vector end = Vector::Zero(2 * n);
  end.head(n) = fwd.terminal_state;
  const auto rev = integrate_reverse_with_accumulator(
      rhs, static_cast<Eigen::Index>(spec.param_count()), end, sc.grid, cfg, hook);
  out.grad = rev.accumulated;
  return out;
}

}  // namespace trase
