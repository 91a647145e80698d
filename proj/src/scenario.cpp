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

#include "trase/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "trase/errors.hpp"

namespace trase {

ExogenousSignal::ExogenousSignal(TimeGrid grid, Matrix samples)
    : grid_(std::move(grid)), samples_(std::move(samples)) {
  if (static_cast<std::size_t>(samples_.rows()) != grid_.size()) {
    throw DataError("exogenous signal: " + std::to_string(samples_.rows()) +
                    " samples for a grid of " + std::to_string(grid_.size()));
  }
  if (grid_.empty()) throw DataError("exogenous signal: empty grid");
}

void ExogenousSignal::at(double t, Vector& out) const {
  const auto& ts = grid_.times();
  if (t <= ts.front()) {
    out = samples_.row(0).transpose();
    return;
  }
  if (t >= ts.back()) {
    out = samples_.row(samples_.rows() - 1).transpose();
    return;
  }
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const auto hi = static_cast<Eigen::Index>(it - ts.begin());
  const Eigen::Index lo = hi - 1;
  const double t0 = ts[static_cast<std::size_t>(lo)];
  const double t1 = ts[static_cast<std::size_t>(hi)];
  if (t == t0) {
    out = samples_.row(lo).transpose();
    return;
  }
  const double w = (t - t0) / (t1 - t0);
  out = ((1.0 - w) * samples_.row(lo) + w * samples_.row(hi)).transpose();
}

std::optional<ExogenousSignal> Scenario::exogenous_signal() const {
  if (!exogenous || exogenous->cols() == 0) return std::nullopt;
  return ExogenousSignal(grid, *exogenous);
}

namespace {

void check_finite(const Matrix& m, const std::string& what, const TimeGrid& grid) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) {
        throw DataError(what + ": non-finite value at t = " +
                        std::to_string(grid[static_cast<std::size_t>(i)]) + ", column " +
                        std::to_string(j));
      }
    }
  }
}

}  // namespace

void Scenario::validate() const {
  const auto N = static_cast<Eigen::Index>(grid.size());
  if (!std::isfinite(u)) throw DataError("scenario: non-finite set-point");
  if (states.rows() != N) {
    throw DataError("scenario: " + std::to_string(states.rows()) + " state rows for " +
                    std::to_string(N) + " grid points");
  }
  if (states.cols() < 1) throw DataError("scenario: no state channels");
  check_finite(states, "states", grid);
  if (sensitivities) {
    if (sensitivities->rows() != N || sensitivities->cols() != states.cols()) {
      throw DataError("scenario: sensitivity matrix must be " + std::to_string(N) + " x " +
                      std::to_string(states.cols()));
    }
    if (!sensitivity_present.empty() &&
        sensitivity_present.size() != static_cast<std::size_t>(N)) {
      throw DataError("scenario: sensitivity mask length differs from grid");
    }
    for (Eigen::Index i = 0; i < N; ++i) {
      if (!sensitivity_row_present(static_cast<std::size_t>(i))) continue;
      for (Eigen::Index j = 0; j < sensitivities->cols(); ++j) {
        if (!std::isfinite((*sensitivities)(i, j))) {
          throw DataError("sensitivities: non-finite value at t = " +
                          std::to_string(grid[static_cast<std::size_t>(i)]));
        }
      }
    }
  }
  if (exogenous) {
    if (exogenous->rows() != N) throw DataError("scenario: exogenous row count differs from grid");
    check_finite(*exogenous, "exogenous", grid);
  }
  if (!state_labels.empty() && static_cast<Eigen::Index>(state_labels.size()) != states.cols()) {
    throw DataError("scenario: state label count differs from state width");
  }
  if (!exo_labels.empty() && static_cast<Eigen::Index>(exo_labels.size()) != exo_dim()) {
    throw DataError("scenario: exogenous label count differs from exogenous width");
  }
}

}  // namespace trase
