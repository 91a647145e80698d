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

#include <optional>
#include <string>
#include <vector>

#include "trase/odeint.hpp"
#include "trase/types.hpp"

namespace trase {

/// Grid-aligned samples of y(t), linearly interpolated between samples and
/// held constant outside the sampled range.
class ExogenousSignal {
 public:
  ExogenousSignal(TimeGrid grid, Matrix samples);

  Eigen::Index dim() const { return samples_.cols(); }
  const TimeGrid& grid() const { return grid_; }
  const Matrix& samples() const { return samples_; }

  void at(double t, Vector& out) const;
  Vector at(double t) const {
    Vector v;
    at(t, v);
    return v;
  }

 private:
  TimeGrid grid_;
  Matrix samples_;
};

/// One training or test instance for a fixed set-point u.
struct Scenario {
  double u = 0.0;
  TimeGrid grid;
  Matrix states;                        // N x n
  std::optional<Matrix> sensitivities;  // N x n
  std::vector<bool> sensitivity_present;  // per row; empty means all rows present
  std::optional<Matrix> exogenous;      // N x m
  std::vector<std::string> state_labels;
  std::vector<std::string> exo_labels;

  Eigen::Index state_dim() const { return states.cols(); }
  Eigen::Index exo_dim() const { return exogenous ? exogenous->cols() : 0; }
  bool has_sensitivities() const { return sensitivities.has_value(); }
  bool sensitivity_row_present(std::size_t i) const {
    return sensitivities && (sensitivity_present.empty() || sensitivity_present[i]);
  }
  std::optional<ExogenousSignal> exogenous_signal() const;

  /// Throws DataError when row counts, widths or label counts disagree, or a
  /// value is not finite.
  void validate() const;
};

}  // namespace trase
