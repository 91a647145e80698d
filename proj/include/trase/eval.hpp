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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "trase/diffnet.hpp"
#include "trase/odeint.hpp"
#include "trase/scenario.hpp"

namespace trase {

/// Normalization used by nmse(); repeated in every emitted report.
inline constexpr const char* kNmseDefinition =
    "NMSE_c = sum_i (pred_ic - truth_ic)^2 / sum_i truth_ic^2 (per channel, summed over "
    "time; a zero predictor scores 1). Other normalizations (variance, peak) give "
    "different absolute values; compare orders of magnitude.";

/// Per-channel squared-error energy over truth energy. Throws
/// DegenerateNormalization when a truth channel is identically zero.
Vector nmse(const Matrix& pred, const Matrix& truth);

/// (truth - pred) / max_t |truth| per channel.
Matrix normalized_error(const Matrix& pred, const Matrix& truth);

struct EvalModel {
  std::string id;
  NetSpec spec;
  ParamVector params;
};

using ScenarioFactory = std::function<Scenario(double u)>;

struct SweepOptions {
  SolverConfig solver;
  bool keep_traces = false;
};

/// Sampled truth and prediction for one (model, u), channels as in the report.
struct Trace {
  double u = 0.0;
  std::vector<double> times;
  Matrix truth;
  Matrix pred;  // empty when the model failed at this u
};

struct MetricsReport {
  std::string model_id;
  std::vector<double> u;
  std::vector<std::string> channels;  // states, then sensitivities when available
  std::size_t state_channels = 0;
  Matrix nmse;                        // |u| x channels; +inf where evaluation failed
  Vector worst_case;                  // column-wise max of nmse
  std::vector<std::string> failures;  // per u; empty string when evaluation succeeded
  std::vector<Trace> traces;          // filled when SweepOptions::keep_traces
};

struct SweepResult {
  MetricsReport a;
  std::optional<MetricsReport> b;  // paired comparison
};

/**
 * Evaluates one model (or a pair) on a grid of set-points.
 *
 * For each u the factory supplies ground truth; scenarios with sensitivities
 * are predicted with trase_forward and scored on all 2n channels, the others
 * with node_forward on the n state channels. A failure at one u (generation,
 * integration, degenerate truth) is recorded as +inf for that row and does
 * not stop the sweep. All scenarios produced by the factory must share the
 * same channel layout.
 */
SweepResult sweep(const EvalModel& a, const EvalModel* b, const std::vector<double>& u_grid,
                  const ScenarioFactory& factory, const SweepOptions& opts);

/// Index of the first row whose u equals `u` within 1e-12, if any.
std::optional<std::size_t> find_u(const MetricsReport& r, double u);

// Output files -------------------------------------------------------------

/// {nmse_definition, models: [{model_id, u, channels, nmse{ch: [...]},
/// worst_case{ch: v}, failures}]}; +inf is written as the string "inf".
void write_report_json(const std::filesystem::path& path, const SweepResult& res);

/// u, then one column per (model, channel): "<model>:<channel>".
void write_nmse_csv(const std::filesystem::path& path, const SweepResult& res);

/// Long format: model,u,t,channel,truth,pred for the selected channels.
void write_traces_csv(const std::filesystem::path& path, const SweepResult& res,
                      bool sensitivity_channels);

/// Long format: model,u,t,channel,normalized_error.
void write_normalized_error_csv(const std::filesystem::path& path, const SweepResult& res);

/// Log-scale NMSE-vs-u line chart for one channel (both models when paired).
void write_nmse_svg(const std::filesystem::path& path, const SweepResult& res,
                    std::size_t channel);

}  // namespace trase
