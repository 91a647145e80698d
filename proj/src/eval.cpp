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

#include "trase/eval.hpp"

#include <cmath>
#include <limits>

#include "trase/augmented.hpp"
#include "trase/errors.hpp"
#include "trase/node.hpp"

namespace trase {

Vector nmse(const Matrix& pred, const Matrix& truth) {
  if (pred.rows() != truth.rows()) throw DimensionError("rows", truth.rows(), pred.rows());
  if (pred.cols() != truth.cols()) throw DimensionError("cols", truth.cols(), pred.cols());
  Vector out(truth.cols());
  for (Eigen::Index c = 0; c < truth.cols(); ++c) {
    const double energy = truth.col(c).squaredNorm();
    if (energy == 0.0) throw DegenerateNormalization("zero-energy truth channel", c);
    out[c] = (pred.col(c) - truth.col(c)).squaredNorm() / energy;
  }
  return out;
}

Matrix normalized_error(const Matrix& pred, const Matrix& truth) {
  if (pred.rows() != truth.rows()) throw DimensionError("rows", truth.rows(), pred.rows());
  if (pred.cols() != truth.cols()) throw DimensionError("cols", truth.cols(), pred.cols());
  Matrix out(truth.rows(), truth.cols());
  for (Eigen::Index c = 0; c < truth.cols(); ++c) {
    const double peak = truth.col(c).cwiseAbs().maxCoeff();
    if (!(peak > 0.0)) throw DegenerateNormalization("zero peak in truth channel", c);
    out.col(c) = (truth.col(c) - pred.col(c)) / peak;
  }
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::string> channel_names(const Scenario& sc) {
  std::vector<std::string> names = sc.state_labels;
  if (names.empty()) {
    for (Eigen::Index c = 0; c < sc.state_dim(); ++c) names.push_back("x" + std::to_string(c));
  }
  if (sc.has_sensitivities()) {
    const auto n = names.size();
    for (std::size_t c = 0; c < n; ++c) names.push_back("s_" + names[c]);
  }
  return names;
}

Matrix truth_matrix(const Scenario& sc) {
  if (!sc.has_sensitivities()) return sc.states;
  Matrix m(sc.states.rows(), 2 * sc.state_dim());
  m << sc.states, *sc.sensitivities;
  return m;
}

Matrix predict(const EvalModel& m, const Scenario& sc, const SolverConfig& cfg) {
  const auto y = sc.exogenous_signal();
  const Vector x0 = sc.states.row(0).transpose();
  if (sc.has_sensitivities()) {
    return trase_forward(m.spec, m.params, x0, sc.u, y ? &*y : nullptr, sc.grid, cfg);
  }
  return node_forward(m.spec, m.params, x0, sc.u, y ? &*y : nullptr, sc.grid, cfg).predicted;
}

void init_report(MetricsReport& r, const std::string& id, std::size_t rows) {
  r.model_id = id;
  r.failures.assign(rows, "");
}

void finish_report(MetricsReport& r) {
  if (r.nmse.cols() == 0) {
    r.worst_case = Vector();
    return;
  }
  r.worst_case = r.nmse.rows() ? Vector(r.nmse.colwise().maxCoeff().transpose())
                               : Vector::Zero(r.nmse.cols());
}

}  // namespace

SweepResult sweep(const EvalModel& a, const EvalModel* b, const std::vector<double>& u_grid,
                  const ScenarioFactory& factory, const SweepOptions& opts) {
  SweepResult res;
  std::vector<MetricsReport*> reports{&res.a};
  std::vector<const EvalModel*> models{&a};
  if (b) {
    res.b.emplace();
    reports.push_back(&*res.b);
    models.push_back(b);
  }
  const std::size_t U = u_grid.size();
  for (std::size_t k = 0; k < models.size(); ++k) {
    init_report(*reports[k], models[k]->id, U);
    reports[k]->u = u_grid;
  }

  for (std::size_t i = 0; i < U; ++i) {
    const double u = u_grid[i];
    std::optional<Scenario> truth;
    std::string gen_failure;
    try {
      truth = factory(u);
      truth->validate();
    } catch (const std::exception& e) {
      gen_failure = std::string("ground truth: ") + e.what();
    }

    if (truth && reports[0]->channels.empty()) {
      for (auto* r : reports) {
        r->channels = channel_names(*truth);
        r->state_channels = static_cast<std::size_t>(truth->state_dim());
        r->nmse = Matrix::Constant(static_cast<Eigen::Index>(U),
                                   static_cast<Eigen::Index>(r->channels.size()), kInf);
      }
    }

    for (std::size_t k = 0; k < models.size(); ++k) {
      MetricsReport& r = *reports[k];
      if (!truth) {
        r.failures[i] = gen_failure;
        continue;
      }
      const Matrix tm = truth_matrix(*truth);
      Trace tr;
      tr.u = u;
      tr.times = truth->grid.times();
      tr.truth = tm;
      try {
        if (tm.cols() != static_cast<Eigen::Index>(r.channels.size())) {
          throw DataError("scenario channel layout differs from earlier set-points");
        }
        Matrix pred = predict(*models[k], *truth, opts.solver);
        r.nmse.row(static_cast<Eigen::Index>(i)) = nmse(pred, tm).transpose();
        tr.pred = std::move(pred);
      } catch (const Error& e) {
        r.failures[i] = e.what();
      }
      if (opts.keep_traces) r.traces.push_back(std::move(tr));
    }
  }

  for (auto* r : reports) {
    if (r->channels.empty()) {
      // Every set-point failed before a layout was known.
      r->nmse = Matrix::Constant(static_cast<Eigen::Index>(U), U ? 1 : 0, kInf);
      if (U) r->channels = {"unknown"};
    }
    finish_report(*r);
  }
  return res;
}

std::optional<std::size_t> find_u(const MetricsReport& r, double u) {
  for (std::size_t i = 0; i < r.u.size(); ++i) {
    if (std::abs(r.u[i] - u) <= 1e-12) return i;
  }
  return std::nullopt;
}

}  // namespace trase
