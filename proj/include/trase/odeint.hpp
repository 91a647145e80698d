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

#include <functional>
#include <limits>
#include <variant>
#include <vector>

#include "trase/types.hpp"

namespace trase {

/// Strictly increasing observation instants (seconds).
class TimeGrid {
 public:
  TimeGrid() = default;
  /// Throws DataError unless strictly increasing and finite.
  explicit TimeGrid(std::vector<double> times);
  static TimeGrid uniform(double t0, double t1, std::size_t count);

  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  double operator[](std::size_t i) const { return times_[i]; }
  double front() const { return times_.front(); }
  double back() const { return times_.back(); }
  const std::vector<double>& times() const { return times_; }

  bool operator==(const TimeGrid&) const = default;

 private:
  std::vector<double> times_;
};

struct Rk4Fixed {
  double step = 1e-3;
};

struct Dopri45 {
  double rtol = 1e-7;
  double atol = 1e-9;
  double max_step = std::numeric_limits<double>::infinity();
};

enum class Direction { Forward, Backward };

struct SolverConfig {
  std::variant<Rk4Fixed, Dopri45> method = Rk4Fixed{};
  Direction direction = Direction::Forward;

  /// Throws ConfigError on non-positive step or tolerances.
  void validate() const;
};

/// Fixed-step RK4 with roughly `steps` steps over [t0, t1].
SolverConfig rk4_for_horizon(double t0, double t1, int steps = 1000);

/// Any state component whose magnitude exceeds this aborts integration.
inline constexpr double kDivergenceBound = 1e8;

/// dy/dt = rhs(t, y). Must be pure.
using Rhs = std::function<void(double t, const Vector& y, Vector& dydt)>;

/// Integrand for the quadrature carried alongside a reverse integration.
using Quadrature = std::function<void(double t, const Vector& y, Vector& q)>;

/// Joint form of Rhs + Quadrature, evaluated in one call.
using RhsWithQuadrature =
    std::function<void(double t, const Vector& y, Vector& dydt, Vector& q)>;

/// Called at grid index i with the state at grid time t; may modify it.
using GridHook = std::function<void(std::size_t i, double t, Vector& y)>;

/**
 * Solve the initial value problem and sample it on the grid.
 *
 * Forward: y0 is the state at grid.front(); Backward: y0 is the state at
 * grid.back() and integration runs toward grid.front(). Row i always holds
 * the solution at grid[i]; the starting row equals y0 exactly. RK4 splits
 * every grid interval into equal sub-steps no longer than the configured
 * step; Dopri45 clamps its steps to land on every grid time.
 *
 * Throws IntegrationDiverged on NaN/Inf or |y_i| > kDivergenceBound, and
 * StiffnessError when the adaptive step underflows.
 */
Matrix integrate(const Rhs& rhs, const Vector& y0, const TimeGrid& grid,
                 const SolverConfig& cfg);

struct ReverseResult {
  Matrix trajectory;   // rows aligned with the grid
  Vector accumulated;  // integral of the quadrature over [grid.front(), grid.back()]
};

/**
 * Integrate backward from y_end at grid.back() to grid.front() while
 * accumulating the integral of `quad` with the same steps (the quadrature is
 * integrated as extra state components).
 *
 * When given, `hook` runs at every grid time before the next interval is
 * integrated, starting with the last index; trajectory rows record the state
 * after the hook. The direction field of cfg is ignored.
 */
ReverseResult integrate_reverse_with_accumulator(const Rhs& rhs, const Quadrature& quad,
                                                 const Vector& y_end, const TimeGrid& grid,
                                                 const SolverConfig& cfg,
                                                 const GridHook& hook = {});

ReverseResult integrate_reverse_with_accumulator(const RhsWithQuadrature& rhs_quad,
                                                 Eigen::Index quad_dim, const Vector& y_end,
                                                 const TimeGrid& grid, const SolverConfig& cfg,
                                                 const GridHook& hook = {});

}  // namespace trase
