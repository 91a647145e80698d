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
#include <vector>

#include <nlohmann/json.hpp>

#include "trase/odeint.hpp"
#include "trase/systems.hpp"
#include "trase/training.hpp"

namespace trase::cli {

inline constexpr const char* kToolVersion = "0.3.0";

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfigError = 2,
  kDataError = 3,
  kDivergence = 4,
  kIoError = 5,
};

/// Maps the exception currently being handled to an exit code and prints it.
int report_exception();

/// "rk4", "rk4:<step>" or "dopri45:<rtol>:<atol>[:<max_step>]". A bare "rk4"
/// uses `default_horizon` / 1000 as its step.
SolverConfig parse_solver(const std::string& text, double default_horizon);
nlohmann::json solver_to_json(const SolverConfig& cfg);
SolverConfig solver_from_json(const nlohmann::json& j, const std::string& path,
                              double default_horizon);

/// Ground-truth generator description shared by `generate`, `sweep` and
/// training configs.
struct SystemSpec {
  std::string system = "oscillator";  // "oscillator" | "linear"
  OscillatorParams oscillator;
  double linear_x0 = 2.0;
  double t_end = 7.0;
  std::size_t points = 100;
  SolverConfig solver = truth_solver();

  TimeGrid grid() const { return TimeGrid::uniform(0.0, t_end, points); }
  Scenario make(double u) const;
  nlohmann::json to_json() const;
};

SystemSpec system_from_json(const nlohmann::json& j, const std::string& path);

/// Parsed training config with the JSON it was resolved from.
struct ResolvedTrainConfig {
  TrainConfig train;
  nlohmann::json resolved;                    // after flag overrides
  std::vector<std::filesystem::path> inputs;  // scenario files read
};

/**
 * Reads a training config. Relative scenario paths resolve against the
 * config file's directory. Overrides (when set) replace the corresponding
 * config fields before validation. Errors name the JSON path.
 */
ResolvedTrainConfig load_train_config(const std::filesystem::path& path,
                                      std::optional<std::uint64_t> seed_override,
                                      std::optional<std::string> solver_override,
                                      std::optional<int> epochs_override);

ResolvedTrainConfig train_config_from_json(const nlohmann::json& j,
                                           const std::filesystem::path& base_dir);

/// Hex SHA-256 of the canonical (sorted-key, compact) dump of `j`.
std::string config_hash(const nlohmann::json& j);

struct RunManifest {
  std::string command;
  std::string config_path;
  std::string config_hash;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::optional<std::uint64_t> seed;
  nlohmann::json resolved_config;
};

inline constexpr const char* kManifestName = "run_manifest.json";

/// Fails with IoError when the directory already holds a manifest.
void claim_output_dir(const std::filesystem::path& dir);
void write_manifest(const std::filesystem::path& dir, const RunManifest& m);

/// Parses argv and runs the selected subcommand; returns the exit code.
int run(int argc, const char* const* argv);

}  // namespace trase::cli
