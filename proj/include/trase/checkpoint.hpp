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

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "trase/diffnet.hpp"

namespace trase {

/// Adam moment estimates carried in training checkpoints.
struct AdamState {
  Vector m;
  Vector v;
  long step = 0;
};

/**
 * Model checkpoint: {"format", "spec", "param_values"[, "optimizer",
 * "epoch", "model_id"]}. Every real number is written with 17 significant
 * digits so that values round-trip exactly.
 *
 * spec: {"state_dim", "exo_dim", "time_as_input",
 *        "hidden": [{"width", "activation": "leaky_relu"|"tanh", "slope"}],
 *        "input_offset"?: [...], "input_scale"?: [...]}
 * param_values: flat layer-major vector (weights row-major, then biases).
 */
struct Checkpoint {
  std::string model_id;
  NetSpec spec;
  ParamVector params;
  std::optional<AdamState> optimizer;
  std::optional<double> learning_rate;
  long epoch = 0;
};

nlohmann::json spec_to_json(const NetSpec& spec);
/// Throws ConfigError naming the offending JSON path.
NetSpec spec_from_json(const nlohmann::json& j, const std::string& path = "spec");

std::string checkpoint_to_string(const Checkpoint& ck);
Checkpoint checkpoint_from_string(const std::string& text, const std::string& origin = "checkpoint");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Fixed-format decimal with 17 significant digits ("inf"/"nan" are not valid JSON
/// and raise DataError).
std::string format_real(double v);

}  // namespace trase
