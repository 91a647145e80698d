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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "trase/checkpoint.hpp"
#include "trase/diffnet.hpp"
#include "trase/errors.hpp"
#include "trase/node.hpp"
#include "trase/odeint.hpp"
#include "trase/scenario.hpp"

namespace trase {

enum class TrainMode { NODE, TRASE };

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class NonFiniteGradient;

/// One bias-corrected Adam update. Throws NonFiniteGradient when the
/// gradient has a NaN or Inf entry.
std::pair<ParamVector, AdamState> adam_step(const ParamVector& params, const Vector& grad,
                                            const AdamState& state, const AdamHyper& hyper);

/// Raised by adam_step when the gradient is not finite.
class NonFiniteGradient : public Error {
 public:
  using Error::Error;
};

struct TrainConfig {
  TrainMode mode = TrainMode::TRASE;
  NetSpec net;
  std::vector<Scenario> scenarios;
  int epochs = 3000;
  AdamHyper adam;
  LossWeights loss_weights;
  SolverConfig solver;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::filesystem::path checkpoint_dir;
  double grad_clip = 0.0;    // global-norm clip; 0 disables
  std::string model_id;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct TrainReport {
  std::vector<double> loss_history;  // loss at the parameters entering each epoch
  ParamVector final_params;
  double wall_time = 0.0;            // seconds
  bool diverged = false;
  double final_lr = 0.0;
  AdamState optimizer;
};

/// Summed loss and gradient over all scenarios for the configured mode.
GradResult total_gradient(const TrainConfig& cfg, const ParamVector& theta);

/**
 * Full-batch Adam on the summed per-scenario loss.
 *
 * A divergence (integration blow-up or non-finite gradient) rolls back the
 * last update, halves the learning rate and retries; a second divergence
 * aborts the run with `diverged` set and the last good parameters returned.
 */
TrainReport train(const TrainConfig& cfg,
                  const std::function<void(int epoch, double loss)>& progress = {});

}  // namespace trase
