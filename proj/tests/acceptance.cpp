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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "trase/augmented.hpp"
#include "trase/eval.hpp"
#include "trase/node.hpp"
#include "trase/systems.hpp"
#include "trase/training.hpp"

#ifndef TRASE_FIXTURE_DIR
#error "TRASE_FIXTURE_DIR must point at tests/fixtures"
#endif

using namespace trase;
using namespace trase::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const TimeGrid& reference_grid() {
  static const TimeGrid g = TimeGrid::uniform(0.0, 7.0, 100);
  return g;
}

Scenario oscillator(double u) { return gen_oscillator(OscillatorParams{}, u, reference_grid()); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Gradient check shared by A1 and A2.
using LossFn = double (*)(const NetSpec&, const ParamVector&, const Scenario&,
                          const SolverConfig&, const LossWeights&);
using GradFn = GradResult (*)(const NetSpec&, const ParamVector&, const Scenario&,
                              const SolverConfig&, const LossWeights&, const AdjointOptions&);

Outcome gradient_protocol(LossFn loss, GradFn grad, double budget_per_seed) {
  const Scenario sc = oscillator(1.0);
  const SolverConfig cfg = rk4_for_horizon(0.0, 7.0);
  double worst = 0.0, slowest = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto t0 = Clock::now();
    for (Activation act : {Activation::LeakyReLU, Activation::Tanh}) {
      const NetSpec s = mlp(2, 0, {{32, act}});
      const ParamVector th = init_params(s, seed);
      const GradResult r = grad(s, th, sc, cfg, LossWeights{}, AdjointOptions{});
      std::mt19937_64 rng(1000 + seed);
      worst = std::max(worst, fd_gradient_error(
                                  [&](const ParamVector& p) {
                                    return loss(s, p, sc, cfg, LossWeights{});
                                  },
                                  th, r.grad, random_coords(rng, th.size(), 20), 1e-6));
    }
    slowest = std::max(slowest, seconds_since(t0));
  }
  return {worst < 1e-3 && slowest < budget_per_seed,
          fmt("max rel err %.3e over 5 seeds x 2 activations x 20 coords (< 1e-3); slowest seed "
              "%.1fs (< %.0fs)",
              worst, slowest, budget_per_seed)};
}

Outcome a1() { return gradient_protocol(node_loss, node_adjoint_grad, 60.0); }
Outcome a2() { return gradient_protocol(trase_loss, trase_adjoint_grad, 120.0); }

TrainConfig oscillator_config(TrainMode mode, std::uint64_t seed) {
  TrainConfig c;
  c.mode = mode;
  c.net = mlp(2, 0, {{32, Activation::LeakyReLU}});
  c.scenarios = {oscillator(1.0)};
  if (mode == TrainMode::NODE) c.scenarios.push_back(oscillator(1.1));
  c.epochs = 3000;
  c.adam.lr = 1e-3;
  c.solver = rk4_for_horizon(0.0, 7.0);
  c.seed = seed;
  return c;
}

Outcome a3() {
  const auto t0 = Clock::now();
  std::vector<double> u_grid;
  for (int k = 1; k <= 32; ++k) u_grid.push_back(0.25 * k);
  SweepOptions opts;
  opts.solver = rk4_for_horizon(0.0, 7.0);

  std::vector<std::future<SweepResult>> jobs;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    jobs.push_back(std::async(std::launch::async, [=] {
      const TrainConfig tc = oscillator_config(TrainMode::TRASE, seed);
      const TrainConfig nc = oscillator_config(TrainMode::NODE, seed);
      const EvalModel tm{"trase", tc.net, train(tc).final_params};
      const EvalModel nm{"node", nc.net, train(nc).final_params};
      return sweep(tm, &nm, u_grid, oscillator, opts);
    }));
  }
  std::vector<Vector> trase_worst, node_worst;
  for (auto& j : jobs) {
    const SweepResult r = j.get();
    trase_worst.push_back(r.a.worst_case);
    node_worst.push_back(r.b->worst_case);
  }

  bool pass = true;
  std::string detail;
  const char* names[] = {"x", "v", "s_x", "s_v"};
  for (Eigen::Index c = 0; c < 4; ++c) {
    std::vector<double> tw, nw, ratio;
    for (std::size_t s = 0; s < trase_worst.size(); ++s) {
      tw.push_back(trase_worst[s][c]);
      nw.push_back(node_worst[s][c]);
      ratio.push_back(node_worst[s][c] / trase_worst[s][c]);
    }
    detail += fmt("%s: trase %.3g node %.3g", names[c], median(tw), median(nw));
    if (c < 2) {
      pass = pass && median(tw) < 0.5;
    } else {
      pass = pass && median(ratio) >= 10.0;
      detail += fmt(" ratio %.1f (per seed", median(ratio));
      for (double q : ratio) detail += fmt(" %.1f", q);
      detail += ")";
    }
    detail += "; ";
  }
  const double wall = seconds_since(t0);
  pass = pass && wall < 1800.0;
  detail += fmt("median worst-case NMSE over 3 seeds, gates state < 0.5 and ratio >= 10; %.0fs",
                wall);
  return {pass, detail};
}

Outcome a4() {
  const std::vector<double> us = {1.0, 2.0, 4.0, 8.0};
  std::vector<Matrix> s;
  for (double u : us) s.push_back(*oscillator(u).sensitivities);
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      worst = std::max(worst, (s[i] - s[j]).cwiseAbs().maxCoeff());
    }
  }
  return {worst < 1e-6, fmt("max pairwise |s(u_i) - s(u_j)| = %.3e (< 1e-6)", worst)};
}

Outcome a5() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ud(-3.0, 3.0);
  int bad_zero = 0, bad_diag = 0;
  for (int k = 0; k < 100; ++k) {
    const NetSpec s = mlp(2, 0, {{16, k % 2 ? Activation::Tanh : Activation::LeakyReLU}});
    const ParamVector th = init_params(s, static_cast<std::uint64_t>(k));
    const Vector z = random_vector(rng, 4, 3.0);
    const Matrix J = aug_jacobian(s, th, z, ud(rng), ud(rng), no_exogenous());
    if (!(J.topRightCorner(2, 2).array() == 0.0).all()) ++bad_zero;
    if (!(J.topLeftCorner(2, 2) == J.bottomRightCorner(2, 2))) ++bad_diag;
  }
  return {bad_zero == 0 && bad_diag == 0,
          fmt("100 draws: %d with nonzero top-right block, %d with unequal diagonal blocks",
              bad_zero, bad_diag)};
}

Outcome a6() {
  const auto t0 = Clock::now();
  TrainConfig node = oscillator_config(TrainMode::NODE, 6);
  node.epochs = 50;
  TrainConfig aug = node;
  aug.mode = TrainMode::TRASE;
  aug.loss_weights.sensitivity = 0.0;
  const TrainReport a = train(node), b = train(aug);
  double worst = 0.0;
  bool same_len = a.loss_history.size() == 50 && b.loss_history.size() == 50;
  for (std::size_t i = 0; same_len && i < a.loss_history.size(); ++i) {
    worst = std::max(worst, std::abs(a.loss_history[i] - b.loss_history[i]));
  }
  const double wall = seconds_since(t0);
  return {same_len && worst < 1e-10 && wall < 120.0,
          fmt("max |loss_node - loss_trase(w_s=0)| = %.3e over 50 epochs (< 1e-10); %.1fs",
              worst, wall)};
}

Outcome a7() {
  const TimeGrid& g = reference_grid();
  const Scenario la = gen_linear_scalar(1.0, 2.0, g), lb = gen_linear_scalar(1.25, 2.0, g);
  const Scenario oa = oscillator(1.0), ob = oscillator(1.25);
  const double el =
      (*finite_diff_sensitivity(la, lb).sensitivities - *la.sensitivities).cwiseAbs().maxCoeff();
  const double eo =
      (*finite_diff_sensitivity(oa, ob).sensitivities - *oa.sensitivities).cwiseAbs().maxCoeff();
  return {el < 1e-9 && eo < 1e-9,
          fmt("max abs error linear %.3e, oscillator %.3e (< 1e-9)", el, eo)};
}

Outcome a8() {
  // dx/dt = -0.8 x + 1.5 u with u = 1, x(0) = 2
  const Rhs rhs = [](double, const Vector& y, Vector& d) { d = -0.8 * y.array() + 1.5; };
  const double exact = 1.875 + (2.0 - 1.875) * std::exp(-0.8 * 2.0);
  const TimeGrid g({0.0, 2.0});
  std::vector<double> lx, ly;
  for (double h : {0.2, 0.1, 0.05, 0.025}) {
    const Matrix traj = integrate(rhs, Vector::Constant(1, 2.0), g,
                                  SolverConfig{Rk4Fixed{h}, Direction::Forward});
    lx.push_back(std::log(h));
    ly.push_back(std::log(std::abs(traj(1, 0) - exact)));
  }
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope >= 3.7 && slope <= 4.3, fmt("empirical order %.3f (in [3.7, 4.3])", slope)};
}

Outcome a9() {
  const auto t0 = Clock::now();
  const std::string dir = std::string(TRASE_FIXTURE_DIR) + "/ibr/";
  const Scenario train_sc = finite_diff_sensitivity(load_scenario(dir + "ibr_vref_1.039.csv"),
                                                    load_scenario(dir + "ibr_vref_1.04.csv"));
  const Scenario held = load_scenario(dir + "ibr_vref_1.043.csv");

  TrainConfig c;
  c.mode = TrainMode::TRASE;
  c.net = mlp(2, 2, {{64, Activation::Tanh}});
  c.scenarios = {train_sc};
  c.epochs = 600;
  c.adam.lr = 3e-3;
  c.solver = rk4_for_horizon(train_sc.grid.front(), train_sc.grid.back());
  c.seed = 9;
  const TrainReport r = train(c);

  const std::optional<ExogenousSignal> y = held.exogenous_signal();
  const Vector x0 = held.states.row(0).transpose();
  auto held_nmse = [&](const ParamVector& th) {
    const Matrix pred = node_forward(c.net, th, x0, held.u, &*y, held.grid, c.solver).predicted;
    return nmse(pred, held.states).maxCoeff();
  };
  const double untrained = held_nmse(init_params(c.net, c.seed));
  const double trained = r.diverged ? INFINITY : held_nmse(r.final_params);
  const double wall = seconds_since(t0);
  return {!r.diverged && untrained >= 10.0 * trained && wall < 600.0,
          fmt("held-out v_ref 1.043 NMSE trained %.3e vs untrained %.3e (ratio %.1f, >= 10); "
              "%.0fs",
              trained, untrained, untrained / trained, wall)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
      {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9}};
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s  %s\n", id.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
