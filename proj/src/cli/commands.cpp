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
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "trase/checkpoint.hpp"
#include "trase/cli.hpp"
#include "trase/errors.hpp"
#include "trase/eval.hpp"

namespace trase::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string u_tag(double u) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", u);
  return buf;
}

std::vector<double> parse_u_range(const std::string& text) {
  double a = 0, b = 0, step = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &a, &b, &step, &tail) != 3) {
    throw ConfigError("--u-range: expected start:stop:step, got '" + text + "'");
  }
  if (!(step > 0.0) || b < a) throw ConfigError("--u-range: need step > 0 and stop >= start");
  const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9)) + 1;
  std::vector<double> u;
  for (long i = 0; i < count; ++i) u.push_back(a + static_cast<double>(i) * step);
  return u;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::string> strings_of(const std::vector<fs::path>& paths) {
  std::vector<std::string> s;
  for (const auto& p : paths) s.push_back(p.string());
  return s;
}

// --------------------------------------------------------------------------

struct GenerateArgs {
  std::string config;
  std::string system;
  std::vector<double> u;
  std::optional<double> t_end;
  std::optional<std::size_t> points;
  std::string solver;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  SystemSpec sys;
  if (!a.config.empty()) sys = system_from_json(read_json_file(a.config), "config");
  if (!a.system.empty()) {
    if (a.system != "oscillator" && a.system != "linear") {
      throw ConfigError("--system: expected oscillator or linear");
    }
    sys.system = a.system;
  }
  if (a.t_end) {
    if (!(*a.t_end > 0.0)) throw ConfigError("--t-end: must be > 0");
    sys.t_end = *a.t_end;
  }
  if (a.points) {
    if (*a.points < 2) throw ConfigError("--points: must be >= 2");
    sys.points = *a.points;
  }
  if (!a.solver.empty()) sys.solver = parse_solver(a.solver, sys.t_end);

  json resolved = sys.to_json();
  resolved["u"] = a.u;
  const fs::path out(a.out);
  claim_output_dir(out);

  RunManifest m{"generate", a.config, config_hash(resolved), {}, {}, std::nullopt, resolved};
  for (double u : a.u) {
    const fs::path csv = out / (sys.system + "_u" + u_tag(u) + ".csv");
    write_scenario(csv, sys.make(u));
    m.outputs.push_back(csv.string());
    m.outputs.push_back(sidecar_path(csv).string());
  }
  write_manifest(out, m);
  return kOk;
}

// --------------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string solver;
  std::optional<int> epochs;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  ResolvedTrainConfig rc = load_train_config(
      a.config, a.seed, a.solver.empty() ? std::nullopt : std::optional<std::string>(a.solver),
      a.epochs);
  const fs::path out(a.out);
  rc.train.checkpoint_dir = out;
  claim_output_dir(out);

  const int every = a.quiet ? 0 : std::max(1, rc.train.epochs / 20);
  const TrainReport rep = train(rc.train, [&](int epoch, double loss) {
    if (every > 0 && epoch % every == 0) {
      std::cerr << "epoch " << epoch << "  loss " << loss << '\n';
    }
  });

  RunManifest m{"train", a.config, config_hash(rc.resolved), strings_of(rc.inputs), {},
                rc.train.seed, rc.resolved};

  const fs::path model = out / "model.json";
  save_checkpoint(model, Checkpoint{rc.train.model_id, rc.train.net, rep.final_params,
                                    rep.optimizer, rep.final_lr,
                                    static_cast<long>(rep.loss_history.size())});
  m.outputs.push_back(model.string());

  json report;
  report["model_id"] = rc.train.model_id;
  report["epochs"] = rep.loss_history.size();
  report["diverged"] = rep.diverged;
  report["final_lr"] = rep.final_lr;
  report["wall_time_s"] = rep.wall_time;
  report["loss_history"] = rep.loss_history;
  const fs::path report_path = out / "train_report.json";
  write_text(report_path, report.dump(2) + "\n");
  m.outputs.push_back(report_path.string());

  std::string hist = "epoch,loss\n";
  for (std::size_t k = 0; k < rep.loss_history.size(); ++k) {
    hist += std::to_string(k) + "," + format_real(rep.loss_history[k]) + "\n";
  }
  const fs::path hist_path = out / "loss_history.csv";
  write_text(hist_path, hist);
  m.outputs.push_back(hist_path.string());

  if (rc.train.checkpoint_every > 0) {
    for (int k = rc.train.checkpoint_every; k <= rc.train.epochs; k += rc.train.checkpoint_every) {
      const fs::path ck = out / ("checkpoint_epoch_" + std::to_string(k) + ".json");
      if (fs::exists(ck)) m.outputs.push_back(ck.string());
    }
  }
  write_manifest(out, m);

  if (rep.diverged) {
    std::cerr << "divergence: training aborted after " << rep.loss_history.size()
              << " epochs; last good parameters written to " << model.string() << '\n';
    return kDivergence;
  }
  if (!a.quiet && !rep.loss_history.empty()) {
    std::cerr << "final loss " << rep.loss_history.back() << " (" << rep.wall_time << " s)\n";
  }
  return kOk;
}

// --------------------------------------------------------------------------

struct SweepArgs {
  std::vector<std::string> models;
  std::string config;
  std::string system;
  std::vector<std::string> data;
  std::vector<double> u;
  std::string u_range;
  std::string solver;
  bool traces = false;
  std::string out;
};

int cmd_sweep(const SweepArgs& a, const std::string& command) {
  if (a.models.empty() || a.models.size() > 2) {
    throw ConfigError("--model: give one checkpoint, or two for a paired comparison");
  }
  if (command == "compare" && a.models.size() != 2) {
    throw ConfigError("compare: exactly two --model checkpoints are required");
  }
  if (!a.u.empty() && !a.u_range.empty()) throw ConfigError("--u and --u-range are exclusive");

  std::vector<EvalModel> models;
  std::vector<fs::path> inputs;
  for (const auto& path : a.models) {
    if (!fs::exists(path)) throw IoError("checkpoint not found: " + path);
    const Checkpoint ck = load_checkpoint(path);
    models.push_back(EvalModel{ck.model_id.empty() ? fs::path(path).stem().string() : ck.model_id,
                               ck.spec, ck.params});
    inputs.push_back(path);
  }
  if (models.size() == 2 && models[0].id == models[1].id) {
    models[0].id += "_a";
    models[1].id += "_b";
  }

  json resolved;
  ScenarioFactory factory;
  std::vector<double> u_grid = a.u_range.empty() ? a.u : parse_u_range(a.u_range);
  double horizon = 0.0;

  if (!a.data.empty()) {
    if (!a.config.empty() || !a.system.empty()) {
      throw ConfigError("--data cannot be combined with --config or --system");
    }
    auto table = std::make_shared<std::map<double, Scenario>>();
    json files = json::array();
    for (const auto& path : a.data) {
      Scenario sc = load_scenario(path);
      horizon = std::max(horizon, sc.grid.back() - sc.grid.front());
      (*table)[sc.u] = std::move(sc);
      inputs.push_back(path);
      files.push_back(path);
    }
    if (u_grid.empty()) {
      for (const auto& [u, sc] : *table) u_grid.push_back(u);
    }
    factory = [table](double u) -> Scenario {
      for (const auto& [key, sc] : *table) {
        if (std::abs(key - u) <= 1e-9 * std::max(1.0, std::abs(u))) return sc;
      }
      throw DataError("no scenario file for u = " + u_tag(u));
    };
    resolved["data"] = files;
  } else {
    SystemSpec sys;
    if (!a.config.empty()) {
      sys = system_from_json(read_json_file(a.config), "config");
      inputs.push_back(a.config);
    }
    if (!a.system.empty()) sys.system = a.system;
    horizon = sys.t_end;
    factory = [sys](double u) { return sys.make(u); };
    resolved["system"] = sys.to_json();
  }

  SweepOptions opts;
  opts.solver = a.solver.empty() ? rk4_for_horizon(0.0, horizon) : parse_solver(a.solver, horizon);
  opts.keep_traces = a.traces || command == "compare";

  resolved["u"] = u_grid;
  resolved["solver"] = solver_to_json(opts.solver);
  json ids = json::array();
  for (const auto& m : models) ids.push_back(m.id);
  resolved["models"] = ids;

  const fs::path out(a.out);
  claim_output_dir(out);
  const SweepResult res =
      sweep(models[0], models.size() == 2 ? &models[1] : nullptr, u_grid, factory, opts);

  RunManifest m{command, a.config, config_hash(resolved), strings_of(inputs), {}, std::nullopt,
                resolved};
  const fs::path report = out / "report.json";
  write_report_json(report, res);
  m.outputs.push_back(report.string());
  const fs::path nmse_csv = out / "nmse_vs_u.csv";
  write_nmse_csv(nmse_csv, res);
  m.outputs.push_back(nmse_csv.string());
  if (!u_grid.empty()) {
    for (std::size_t c = 0; c < res.a.channels.size(); ++c) {
      const fs::path svg = out / ("nmse_" + res.a.channels[c] + ".svg");
      write_nmse_svg(svg, res, c);
      m.outputs.push_back(svg.string());
    }
  }
  if (opts.keep_traces) {
    const fs::path st = out / "state_traces.csv";
    write_traces_csv(st, res, false);
    m.outputs.push_back(st.string());
    if (res.a.channels.size() > res.a.state_channels) {
      const fs::path se = out / "sensitivity_traces.csv";
      write_traces_csv(se, res, true);
      m.outputs.push_back(se.string());
    }
    const fs::path ne = out / "normalized_error.csv";
    write_normalized_error_csv(ne, res);
    m.outputs.push_back(ne.string());
  }
  write_manifest(out, m);

  for (const MetricsReport* r : {&res.a, res.b ? &*res.b : nullptr}) {
    if (r == nullptr || r->u.empty()) continue;
    std::cout << r->model_id << " worst-case NMSE:";
    for (std::size_t c = 0; c < r->channels.size(); ++c) {
      std::cout << ' ' << r->channels[c] << '=' << r->worst_case[static_cast<Eigen::Index>(c)];
    }
    std::cout << '\n';
  }
  return kOk;
}

// --------------------------------------------------------------------------

struct FixtureArgs {
  std::string out;
  std::vector<double> v_ref;
  std::string solver;
};

int cmd_export_fixtures(const FixtureArgs& a) {
  InverterFixtureParams p;
  SolverConfig solver = a.solver.empty() ? truth_solver() : parse_solver(a.solver, p.t_end);
  const std::vector<double> v_ref =
      a.v_ref.empty() ? std::vector<double>{1.035, 1.036, 1.037, 1.039, 1.04, 1.041, 1.043, 1.044,
                                            1.045}
                      : a.v_ref;
  json resolved = {{"v_ref", v_ref},
                   {"solver", solver_to_json(solver)},
                   {"p_ref", p.p_ref},
                   {"k_v", p.k_v},
                   {"k_f", p.k_f},
                   {"i_max", p.i_max},
                   {"tau_d", p.tau_d},
                   {"tau_q", p.tau_q},
                   {"t_event", p.t_event},
                   {"dip", p.dip},
                   {"v_pre", p.v_pre},
                   {"t_end", p.t_end},
                   {"points", p.points}};
  const fs::path out(a.out);
  claim_output_dir(out);
  RunManifest m{"export-fixtures", "", config_hash(resolved), {}, {}, std::nullopt, resolved};
  for (double v : v_ref) {
    const fs::path csv = out / ("ibr_vref_" + u_tag(v) + ".csv");
    write_scenario(csv, gen_inverter_fixture(p, v, solver));
    m.outputs.push_back(csv.string());
    m.outputs.push_back(sidecar_path(csv).string());
  }
  write_manifest(out, m);
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Neural ODE training with trajectory sensitivities", "trase_node"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write ground-truth scenario CSVs");
  g->add_option("--config", gen.config, "System description (JSON)");
  g->add_option("--system", gen.system, "oscillator | linear");
  g->add_option("--u", gen.u, "Set-points")->delimiter(',');
  g->add_option("--t-end", gen.t_end, "End of the time window");
  g->add_option("--points", gen.points, "Samples on the uniform grid");
  g->add_option("--solver", gen.solver, "Ground-truth solver");
  g->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model from a JSON config");
  t->add_option("--config", tr.config, "Training config (JSON)")->required();
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--seed", tr.seed, "Overrides config.seed");
  t->add_option("--solver", tr.solver, "Overrides config.solver");
  t->add_option("--epochs", tr.epochs, "Overrides config.epochs");
  t->add_flag("--quiet", tr.quiet, "No progress output");

  SweepArgs sw;
  auto add_sweep_options = [&sw](CLI::App* s) {
    s->add_option("--model", sw.models, "Checkpoint(s)")->required();
    s->add_option("--config", sw.config, "System description (JSON)");
    s->add_option("--system", sw.system, "oscillator | linear");
    s->add_option("--data", sw.data, "Scenario CSVs used as ground truth");
    s->add_option("--u", sw.u, "Set-points")->delimiter(',');
    s->add_option("--u-range", sw.u_range, "start:stop:step");
    s->add_option("--solver", sw.solver, "Model solver");
    s->add_option("--out", sw.out, "Output directory")->required();
  };
  auto* s = app.add_subcommand("sweep", "NMSE of one or two models over set-points");
  add_sweep_options(s);
  s->add_flag("--traces", sw.traces, "Also write trace and normalized-error CSVs");
  auto* c = app.add_subcommand("compare", "Paired sweep of two models with traces");
  add_sweep_options(c);

  FixtureArgs fx;
  auto* f = app.add_subcommand("export-fixtures", "Write the inverter fixture CSVs");
  f->add_option("--out", fx.out, "Output directory")->required();
  f->add_option("--v-ref", fx.v_ref, "Voltage set-points")->delimiter(',');
  f->add_option("--solver", fx.solver, "Ground-truth solver");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (g->parsed()) return cmd_generate(gen);
    if (t->parsed()) return cmd_train(tr);
    if (s->parsed()) return cmd_sweep(sw, "sweep");
    if (c->parsed()) return cmd_sweep(sw, "compare");
    if (f->parsed()) return cmd_export_fixtures(fx);
  } catch (...) {
    return report_exception();
  }
  return kUsage;
}

}  // namespace trase::cli
