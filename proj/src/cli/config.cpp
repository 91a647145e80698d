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

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "trase/checkpoint.hpp"
#include "trase/cli.hpp"
#include "trase/errors.hpp"

namespace trase::cli {
namespace fs = std::filesystem;
using nlohmann::json;

int report_exception() {
  try {
    throw;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IntegrationDiverged& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kDivergence;
  } catch (const StiffnessError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kDivergence;
  } catch (const NonFiniteGradient& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kDivergence;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIoError;
  } catch (const Error& e) {
    // DataError, ParseError, DimensionError, DegenerateNormalization
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
}

namespace {

double parse_real(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ConfigError(what + ": '" + s + "' is not a number");
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream ss(s);
  while (std::getline(ss, part, sep)) parts.push_back(part);
  return parts;
}

double number_at(const json& j, const char* key, double def, const std::string& path) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return j[key].get<double>();
}

long integer_at(const json& j, const char* key, long def, const std::string& path) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
  return j[key].get<long>();
}

void reject_unknown(const json& j, const std::vector<std::string>& known, const std::string& path) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ConfigError(path + "." + it.key() + ": unknown field");
    }
  }
}

}  // namespace

SolverConfig parse_solver(const std::string& text, double default_horizon) {
  const auto parts = split(text, ':');
  if (parts.empty()) throw ConfigError("--solver: empty");
  SolverConfig cfg;
  if (parts[0] == "rk4") {
    if (parts.size() > 2) throw ConfigError("--solver: expected rk4[:step]");
    cfg.method = Rk4Fixed{parts.size() == 2 ? parse_real(parts[1], "--solver step")
                                            : default_horizon / 1000.0};
  } else if (parts[0] == "dopri45") {
    if (parts.size() < 3 || parts.size() > 4) {
      throw ConfigError("--solver: expected dopri45:rtol:atol[:max_step]");
    }
    Dopri45 d;
    d.rtol = parse_real(parts[1], "--solver rtol");
    d.atol = parse_real(parts[2], "--solver atol");
    if (parts.size() == 4) d.max_step = parse_real(parts[3], "--solver max_step");
    cfg.method = d;
  } else {
    throw ConfigError("--solver: unknown method '" + parts[0] + "' (rk4 | dopri45)");
  }
  cfg.validate();
  return cfg;
}

json solver_to_json(const SolverConfig& cfg) {
  if (const auto* rk = std::get_if<Rk4Fixed>(&cfg.method)) {
    return {{"method", "rk4"}, {"step", rk->step}};
  }
  const auto& d = std::get<Dopri45>(cfg.method);
  json j = {{"method", "dopri45"}, {"rtol", d.rtol}, {"atol", d.atol}};
  if (std::isfinite(d.max_step)) j["max_step"] = d.max_step;
  return j;
}

SolverConfig solver_from_json(const json& j, const std::string& path, double default_horizon) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  reject_unknown(j, {"method", "step", "rtol", "atol", "max_step"}, path);
  const std::string method = j.value("method", std::string("rk4"));
  SolverConfig cfg;
  if (method == "rk4") {
    cfg.method = Rk4Fixed{number_at(j, "step", default_horizon / 1000.0, path)};
  } else if (method == "dopri45") {
    Dopri45 d;
    d.rtol = number_at(j, "rtol", d.rtol, path);
    d.atol = number_at(j, "atol", d.atol, path);
    d.max_step = number_at(j, "max_step", d.max_step, path);
    cfg.method = d;
  } else {
    throw ConfigError(path + ".method: expected 'rk4' or 'dopri45', got '" + method + "'");
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return cfg;
}

// ---------------------------------------------------------------------------

Scenario SystemSpec::make(double u) const {
  if (system == "oscillator") return gen_oscillator(oscillator, u, grid(), solver);
  if (system == "linear") return gen_linear_scalar(u, linear_x0, grid());
  throw ConfigError("system: expected 'oscillator' or 'linear', got '" + system + "'");
}

json SystemSpec::to_json() const {
  json j = {{"system", system}, {"t_end", t_end}, {"points", points},
            {"solver", solver_to_json(solver)}};
  if (system == "oscillator") {
    j["omega_n"] = oscillator.omega_n;
    j["zeta"] = oscillator.zeta;
    j["x0"] = oscillator.x0;
    j["v0"] = oscillator.v0;
  } else {
    j["x0"] = linear_x0;
  }
  return j;
}

SystemSpec system_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  reject_unknown(j, {"system", "t_end", "points", "omega_n", "zeta", "x0", "v0", "solver", "u"},
                 path);
  SystemSpec s;
  s.system = j.value("system", std::string("oscillator"));
  if (s.system != "oscillator" && s.system != "linear") {
    throw ConfigError(path + ".system: expected 'oscillator' or 'linear'");
  }
  s.t_end = number_at(j, "t_end", s.t_end, path);
  if (!(s.t_end > 0.0)) throw ConfigError(path + ".t_end: must be > 0");
  const long pts = integer_at(j, "points", static_cast<long>(s.points), path);
  if (pts < 2) throw ConfigError(path + ".points: must be >= 2");
  s.points = static_cast<std::size_t>(pts);
  s.oscillator.omega_n = number_at(j, "omega_n", s.oscillator.omega_n, path);
  s.oscillator.zeta = number_at(j, "zeta", s.oscillator.zeta, path);
  s.oscillator.x0 = number_at(j, "x0", s.oscillator.x0, path);
  s.oscillator.v0 = number_at(j, "v0", s.oscillator.v0, path);
  s.linear_x0 = number_at(j, "x0", s.linear_x0, path);
  if (j.contains("solver")) s.solver = solver_from_json(j["solver"], path + ".solver", s.t_end);
  try {
    if (s.system == "oscillator") s.oscillator.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------

namespace {

Scenario scenario_from_entry(const json& e, const std::string& path, const fs::path& base,
                             std::vector<fs::path>& inputs) {
  if (!e.is_object()) throw ConfigError(path + ": expected an object");
  reject_unknown(e, {"csv", "sensitivity_from", "generate", "drop_sensitivities"}, path);
  auto resolve = [&](const std::string& p) {
    fs::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  Scenario sc;
  if (e.contains("csv")) {
    if (!e["csv"].is_string()) throw ConfigError(path + ".csv: expected a path");
    const fs::path a = resolve(e["csv"].get<std::string>());
    inputs.push_back(a);
    sc = load_scenario(a);
    if (e.contains("sensitivity_from")) {
      if (!e["sensitivity_from"].is_string()) {
        throw ConfigError(path + ".sensitivity_from: expected a path");
      }
      const fs::path b = resolve(e["sensitivity_from"].get<std::string>());
      inputs.push_back(b);
      sc = finite_diff_sensitivity(sc, load_scenario(b));
    }
  } else if (e.contains("generate")) {
    const json& g = e["generate"];
    const SystemSpec sys = system_from_json(g, path + ".generate");
    if (!g.contains("u") || !g["u"].is_number()) {
      throw ConfigError(path + ".generate.u: expected a number");
    }
    sc = sys.make(g["u"].get<double>());
  } else {
    throw ConfigError(path + ": needs 'csv' or 'generate'");
  }
  if (e.value("drop_sensitivities", false)) {
    sc.sensitivities.reset();
    sc.sensitivity_present.clear();
  }
  return sc;
}

}  // namespace

ResolvedTrainConfig train_config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config: expected an object");
  reject_unknown(j, {"mode", "model_id", "net", "scenarios", "epochs", "lr", "adam",
                     "loss_weights", "solver", "seed", "checkpoint_every", "grad_clip"},
                 "config");
  ResolvedTrainConfig out;
  out.resolved = j;
  TrainConfig& cfg = out.train;

  const std::string mode = j.value("mode", std::string("trase"));
  if (mode == "trase") {
    cfg.mode = TrainMode::TRASE;
  } else if (mode == "node") {
    cfg.mode = TrainMode::NODE;
  } else {
    throw ConfigError("config.mode: expected 'trase' or 'node', got '" + mode + "'");
  }
  cfg.model_id = j.value("model_id", mode);
  if (!j.contains("net")) throw ConfigError("config.net: required");
  cfg.net = spec_from_json(j["net"], "config.net");

  if (!j.contains("scenarios") || !j["scenarios"].is_array()) {
    throw ConfigError("config.scenarios: expected an array");
  }
  for (std::size_t i = 0; i < j["scenarios"].size(); ++i) {
    cfg.scenarios.push_back(scenario_from_entry(j["scenarios"][i],
                                                "config.scenarios[" + std::to_string(i) + "]",
                                                base_dir, out.inputs));
  }

  cfg.epochs = static_cast<int>(integer_at(j, "epochs", cfg.epochs, "config"));
  cfg.adam.lr = number_at(j, "lr", cfg.adam.lr, "config");
  if (j.contains("adam")) {
    const json& a = j["adam"];
    if (!a.is_object()) throw ConfigError("config.adam: expected an object");
    reject_unknown(a, {"beta1", "beta2", "eps"}, "config.adam");
    cfg.adam.beta1 = number_at(a, "beta1", cfg.adam.beta1, "config.adam");
    cfg.adam.beta2 = number_at(a, "beta2", cfg.adam.beta2, "config.adam");
    cfg.adam.eps = number_at(a, "eps", cfg.adam.eps, "config.adam");
  }
  if (j.contains("loss_weights")) {
    const json& w = j["loss_weights"];
    if (!w.is_object()) throw ConfigError("config.loss_weights: expected an object");
    reject_unknown(w, {"state", "sensitivity", "channel"}, "config.loss_weights");
    cfg.loss_weights.state = number_at(w, "state", 1.0, "config.loss_weights");
    cfg.loss_weights.sensitivity = number_at(w, "sensitivity", 1.0, "config.loss_weights");
    if (w.contains("channel")) {
      if (!w["channel"].is_array()) throw ConfigError("config.loss_weights.channel: expected an array");
      for (const auto& c : w["channel"]) {
        if (!c.is_number()) throw ConfigError("config.loss_weights.channel: expected numbers");
        cfg.loss_weights.channel.push_back(c.get<double>());
      }
    }
  }
  if (cfg.loss_weights.state < 0.0) throw ConfigError("config.loss_weights.state: must be >= 0");
  if (cfg.loss_weights.sensitivity < 0.0) {
    throw ConfigError("config.loss_weights.sensitivity: must be >= 0");
  }

  const double horizon = cfg.scenarios.empty() || cfg.scenarios[0].grid.empty()
                             ? 1.0
                             : cfg.scenarios[0].grid.back() - cfg.scenarios[0].grid.front();
  cfg.solver = j.contains("solver") ? solver_from_json(j["solver"], "config.solver", horizon)
                                    : rk4_for_horizon(0.0, horizon);
  out.resolved["solver"] = solver_to_json(cfg.solver);

  const long seed = integer_at(j, "seed", 0, "config");
  if (seed < 0) throw ConfigError("config.seed: must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.checkpoint_every = static_cast<int>(integer_at(j, "checkpoint_every", 0, "config"));
  cfg.grad_clip = number_at(j, "grad_clip", 0.0, "config");
  cfg.checkpoint_dir = base_dir;  // replaced by the run directory

  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    throw ConfigError(msg.rfind("config", 0) == 0 ? msg : "config." + msg);
  }
  return out;
}

ResolvedTrainConfig load_train_config(const fs::path& path,
                                      std::optional<std::uint64_t> seed_override,
                                      std::optional<std::string> solver_override,
                                      std::optional<int> epochs_override) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path.string() + ": expected a JSON object");
  if (seed_override) j["seed"] = *seed_override;
  if (epochs_override) j["epochs"] = *epochs_override;
  if (solver_override) {
    // Horizon for a bare "rk4" comes from the config's scenarios; parse it
    // after the scenarios are known.
    j.erase("solver");
  }
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  ResolvedTrainConfig r = train_config_from_json(j, base);
  if (solver_override) {
    const auto& g = r.train.scenarios.front().grid;
    r.train.solver = parse_solver(*solver_override, g.back() - g.front());
    r.resolved["solver"] = solver_to_json(r.train.solver);
  }
  return r;
}

}  // namespace trase::cli
