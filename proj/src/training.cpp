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

#include "trase/training.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "trase/augmented.hpp"
#include "trase/errors.hpp"

namespace trase {

std::pair<ParamVector, AdamState> adam_step(const ParamVector& params, const Vector& grad,
                                            const AdamState& state, const AdamHyper& hyper) {
  const auto p = params.size();
  if (grad.size() != p) throw DimensionError("grad", p, grad.size());
  if (!grad.allFinite()) throw NonFiniteGradient("non-finite gradient");
  AdamState next = state;
  if (next.m.size() == 0) next.m = Vector::Zero(p);
  if (next.v.size() == 0) next.v = Vector::Zero(p);
  if (next.m.size() != p) throw DimensionError("adam.m", p, next.m.size());
  if (next.v.size() != p) throw DimensionError("adam.v", p, next.v.size());
  next.step += 1;
  next.m = hyper.beta1 * next.m + (1.0 - hyper.beta1) * grad;
  next.v = hyper.beta2 * next.v + (1.0 - hyper.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(next.step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(next.step));
  ParamVector out = params;
  out.values.array() -= hyper.lr * (next.m.array() / bc1) /
                        ((next.v.array() / bc2).sqrt() + hyper.eps);
  return {std::move(out), std::move(next)};
}

void TrainConfig::validate() const {
  net.validate();
  if (epochs < 0) throw ConfigError("epochs: must be >= 0");
  if (!(adam.lr > 0.0) || !std::isfinite(adam.lr)) throw ConfigError("lr: must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ConfigError("adam.beta1: must be in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ConfigError("adam.beta2: must be in [0, 1)");
  if (!(adam.eps > 0.0)) throw ConfigError("adam.eps: must be > 0");
  if (!(grad_clip >= 0.0)) throw ConfigError("grad_clip: must be >= 0");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every: must be >= 0");
  if (checkpoint_every > 0 && checkpoint_dir.empty()) {
    throw ConfigError("checkpoint_every: requires a checkpoint directory");
  }
  loss_weights.validate(net.state_dim);
  solver.validate();
  if (scenarios.empty()) throw ConfigError("scenarios: at least one scenario is required");
  bool any_sens = false;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto& sc = scenarios[i];
    const std::string path = "scenarios[" + std::to_string(i) + "]";
    if (sc.state_dim() != net.state_dim) {
      throw ConfigError(path + ": state dimension " + std::to_string(sc.state_dim()) +
                        " does not match net.state_dim " + std::to_string(net.state_dim));
    }
    if (sc.exo_dim() != net.exo_dim) {
      throw ConfigError(path + ": exogenous dimension " + std::to_string(sc.exo_dim()) +
                        " does not match net.exo_dim " + std::to_string(net.exo_dim));
    }
    any_sens = any_sens || sc.has_sensitivities();
  }
  if (mode == TrainMode::TRASE && !any_sens) {
    throw ConfigError("scenarios: TRASE mode needs at least one scenario with sensitivities");
  }
}

GradResult total_gradient(const TrainConfig& cfg, const ParamVector& theta) {
  GradResult total{Vector::Zero(theta.size()), 0.0};
  for (const auto& sc : cfg.scenarios) {
    const GradResult r = cfg.mode == TrainMode::NODE
                             ? node_adjoint_grad(cfg.net, theta, sc, cfg.solver, cfg.loss_weights)
                             : trase_adjoint_grad(cfg.net, theta, sc, cfg.solver, cfg.loss_weights);
    total.grad += r.grad;
    total.loss += r.loss;
  }
  return total;
}

namespace {

std::filesystem::path checkpoint_file(const TrainConfig& cfg, int epoch) {
  return cfg.checkpoint_dir / ("checkpoint_epoch_" + std::to_string(epoch) + ".json");
}

}  // namespace

TrainReport train(const TrainConfig& cfg, const std::function<void(int, double)>& progress) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  TrainReport rep;
  ParamVector theta = init_params(cfg.net, cfg.seed);
  AdamState state{Vector::Zero(theta.size()), Vector::Zero(theta.size()), 0};
  AdamHyper hyper = cfg.adam;
  bool halved = false;

  ParamVector prev_theta;
  AdamState prev_state;
  Vector prev_grad;
  bool have_prev = false;

  for (int epoch = 0; epoch < cfg.epochs;) {
    GradResult g;
    try {
      g = total_gradient(cfg, theta);
      if (!g.grad.allFinite() || !std::isfinite(g.loss)) throw NonFiniteGradient("non-finite gradient");
      if (cfg.grad_clip > 0.0) {
        const double norm = g.grad.norm();
        if (norm > cfg.grad_clip) g.grad *= cfg.grad_clip / norm;
      }
    } catch (const IntegrationDiverged&) {
      g.grad.resize(0);
    } catch (const StiffnessError&) {
      g.grad.resize(0);
    } catch (const NonFiniteGradient&) {
      g.grad.resize(0);
    }

    if (g.grad.size() == 0) {
      if (halved || !have_prev) {
        rep.diverged = true;
        if (have_prev) theta = prev_theta, state = prev_state;
        break;
      }
      halved = true;
      hyper.lr *= 0.5;
      std::tie(theta, state) = adam_step(prev_theta, prev_grad, prev_state, hyper);
      continue;
    }

    rep.loss_history.push_back(g.loss);
    if (progress) progress(epoch, g.loss);
    prev_theta = theta;
    prev_state = state;
    prev_grad = g.grad;
    have_prev = true;
    std::tie(theta, state) = adam_step(theta, g.grad, state, hyper);
    ++epoch;

    if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) {
      save_checkpoint(checkpoint_file(cfg, epoch),
                      Checkpoint{cfg.model_id, cfg.net, theta, state, hyper.lr, epoch});
    }
  }

  rep.final_params = theta;
  rep.optimizer = state;
  rep.final_lr = hyper.lr;
  rep.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace trase
