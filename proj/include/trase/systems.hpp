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
#include <string>
#include <vector>

#include "trase/odeint.hpp"
#include "trase/scenario.hpp"

namespace trase {

/// High-accuracy adaptive configuration used for every ground-truth trajectory.
SolverConfig truth_solver();

// ---------------------------------------------------------------------------
// dx/dt = -3x + u

/// Closed form x(t) = u/3 + (x0 - u/3) e^{-3t}, s(t) = (1 - e^{-3t})/3.
Scenario gen_linear_scalar(double u, double x0, const TimeGrid& grid);

// ---------------------------------------------------------------------------
// Damped oscillator  x'' + 2 zeta omega_n x' + omega_n^2 x = u

struct OscillatorParams {
  double omega_n = 2.5;
  double zeta = 0.3;
  double x0 = 2.0;
  double v0 = 1.0;

  void validate() const;
};

/// Right-hand side of the four-state truth system [x, v, s_x, s_v].
Vector oscillator_truth_rhs(const OscillatorParams& p, double u, const Eigen::Ref<const Vector>& z);

/// Integrates [x, v, s_x, s_v] from [x0, v0, 0, 0] and samples it on the grid.
Scenario gen_oscillator(const OscillatorParams& p, double u, const TimeGrid& grid,
                        const SolverConfig& cfg = truth_solver());

// ---------------------------------------------------------------------------
// Finite-difference sensitivity from two runs at different set-points.

/// Copy of `a` with sensitivities (states_b - states_a) / (u_b - u_a).
Scenario finite_diff_sensitivity(const Scenario& a, const Scenario& b);

// ---------------------------------------------------------------------------
// Inverter-like current source used to author ingestion fixtures.
//
// States [I_d, I_q] follow first-order current-control lags toward
// saturating references driven by the terminal voltage V_t and frequency f_t,
// which are prescribed (played back) and identical for every V_ref. This is a
// compact stand-in with the same channel layout as a grid-following
// inverter, not a reproduction of any standard IBR model.

struct InverterFixtureParams {
  double p_ref = 0.8;      // active power command (pu)
  double k_v = 4.0;        // reactive current gain on the voltage error
  double k_f = 2.0;        // active current droop on frequency deviation
  double i_max = 1.1;      // current magnitude limit
  double tau_d = 0.15;     // d-axis current time constant (s)
  double tau_q = 0.08;     // q-axis current time constant (s)
  double t_event = 0.5;    // load increase time (s)
  double dip = 0.06;       // terminal voltage dip magnitude (pu)
  double v_pre = 1.02;     // terminal voltage before the event (pu)
  double t_end = 4.0;
  std::size_t points = 120;
};

/// Played-back [V_t, f_t] samples on the grid.
Matrix inverter_exogenous(const InverterFixtureParams& p, const TimeGrid& grid);

Vector inverter_rhs(const InverterFixtureParams& p, double v_ref,
                    const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y);

/// Scenario with states [I_d, I_q] and exogenous [V_t, f_t]; no sensitivities.
Scenario gen_inverter_fixture(const InverterFixtureParams& p, double v_ref,
                              const SolverConfig& cfg = truth_solver());

// ---------------------------------------------------------------------------
// Scenario files: CSV `t,<states>[,<exogenous>][,<sensitivities>]` plus a
// sidecar JSON {u, state_columns, exo_columns, sensitivity_columns?}.

struct ScenarioLayout {
  double u = 0.0;
  std::vector<std::string> state_columns;
  std::vector<std::string> exo_columns;
  std::vector<std::string> sensitivity_columns;  // empty when absent
};

/// `<stem>.json` next to `<stem>.csv`.
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

ScenarioLayout read_sidecar(const std::filesystem::path& path);

/// Parses the CSV against the layout. Empty sensitivity cells mark that row's
/// sensitivity as absent. Throws ParseError (with line number) on malformed
/// rows, DataError on non-monotone time or non-finite values, IoError when
/// the file cannot be read.
Scenario ingest_csv(const std::filesystem::path& csv, const ScenarioLayout& layout);

/// ingest_csv with the layout read from the sidecar.
Scenario load_scenario(const std::filesystem::path& csv);

/// Writes the CSV (17 significant digits) and its sidecar.
void write_scenario(const std::filesystem::path& csv, const Scenario& sc);

}  // namespace trase
