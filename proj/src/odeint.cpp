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

#include "trase/odeint.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trase/errors.hpp"

namespace trase {
namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr std::size_t kMaxAdaptiveSteps = 10'000'000;

// Advances a state across grid intervals. The first `guard_dim` components are
// held to the divergence bound; the rest only have to stay finite.
class Stepper {
 public:
  Stepper(const Rhs& rhs, const SolverConfig& cfg, Eigen::Index guard_dim)
      : rhs_(rhs), cfg_(cfg), guard_dim_(guard_dim) {}

  void advance(Vector& y, double ta, double tb) {
    if (ta == tb) return;
    if (const auto* rk = std::get_if<Rk4Fixed>(&cfg_.method)) {
      rk4(y, ta, tb, rk->step);
    } else {
      dopri(y, ta, tb, std::get<Dopri45>(cfg_.method));
    }
  }

 private:
  void check(const Vector& y, double t) const {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double v = y[i];
      if (!std::isfinite(v)) {
        throw IntegrationDiverged(t, "non-finite component " + std::to_string(i));
      }
      if (i < guard_dim_ && std::abs(v) > kDivergenceBound) {
        throw IntegrationDiverged(t, "component " + std::to_string(i) + " exceeds bound");
      }
    }
  }

  void rk4(Vector& y, double ta, double tb, double step) {
    const double span = tb - ta;
    const auto substeps = std::max<long>(
        1, static_cast<long>(std::ceil(std::abs(span) / step - 1e-9)));
    const double h = span / static_cast<double>(substeps);
    for (long k = 0; k < substeps; ++k) {
      // Recompute t from the interval start so sub-step times are symmetric
      // between forward and backward sweeps of the same interval.
      const double t = ta + span * static_cast<double>(k) / static_cast<double>(substeps);
      rhs_(t, y, k1_);
      tmp_ = y + 0.5 * h * k1_;
      rhs_(t + 0.5 * h, tmp_, k2_);
      tmp_ = y + 0.5 * h * k2_;
      rhs_(t + 0.5 * h, tmp_, k3_);
      tmp_ = y + h * k3_;
      rhs_(t + h, tmp_, k4_);
      y += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
      check(y, t + h);
    }
  }

  double error_norm(const Vector& y, const Vector& ynew, const Vector& err,
                    const Dopri45& d) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc = d.atol + d.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double r = err[i] / sc;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(1, y.size())));
  }

  // Hairer/Wanner starting step heuristic.
  double initial_step(const Vector& y, double t, double dir, const Dopri45& d) {
    rhs_(t, y, k1_);
    Vector sc = (d.atol + d.rtol * y.array().abs()).matrix();
    const double d0 = (y.array() / sc.array()).matrix().norm() / std::sqrt(double(y.size()));
    const double d1 = (k1_.array() / sc.array()).matrix().norm() / std::sqrt(double(y.size()));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, d.max_step);
    tmp_ = y + dir * h0 * k1_;
    rhs_(t + dir * h0, tmp_, k2_);
    const double d2 =
        ((k2_ - k1_).array() / sc.array()).matrix().norm() / std::sqrt(double(y.size())) / h0;
    const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                                 : std::pow(0.01 / std::max(d1, d2), 0.2);
    return std::min({100.0 * h0, h1, d.max_step});
  }

  void dopri(Vector& y, double ta, double tb, const Dopri45& d) {
    const double dir = tb > ta ? 1.0 : -1.0;
    if (h_ <= 0.0) h_ = initial_step(y, ta, dir, d);
    double t = ta;
    std::size_t steps = 0;
    while (dir * (tb - t) > 0.0) {
      if (++steps > kMaxAdaptiveSteps) throw StiffnessError(t, h_);
      double h = std::min(h_, d.max_step);
      bool clamped = false;
      if (dir * (t + dir * h - tb) >= 0.0) {
        h = std::abs(tb - t);
        clamped = true;
      }
      if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
        throw StiffnessError(t, h);
      }
      const double hs = dir * h;
      rhs_(t, y, k1_);
      tmp_ = y + hs * a21 * k1_;
      rhs_(t + c2 * hs, tmp_, k2_);
      tmp_ = y + hs * (a31 * k1_ + a32 * k2_);
      rhs_(t + c3 * hs, tmp_, k3_);
      tmp_ = y + hs * (a41 * k1_ + a42 * k2_ + a43 * k3_);
      rhs_(t + c4 * hs, tmp_, k4_);
      tmp_ = y + hs * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
      rhs_(t + c5 * hs, tmp_, k5_);
      tmp_ = y + hs * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
      rhs_(t + hs, tmp_, k6_);
      ynew_ = y + hs * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
      rhs_(t + hs, ynew_, k7_);
      err_ = hs * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);

      double en = error_norm(y, ynew_, err_, d);
      if (!std::isfinite(en)) en = 1e10;
      if (en <= 1.0) {
        t = clamped ? tb : t + hs;
        y = ynew_;
        check(y, t);
        const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
        // A clamped step says nothing about the natural step length.
        if (!clamped || fac < 1.0) h_ = h * fac;
      } else {
        h_ = h * std::clamp(0.9 * std::pow(en, -0.2), 0.2, 1.0);
      }
    }
  }

  const Rhs& rhs_;
  const SolverConfig& cfg_;
  Eigen::Index guard_dim_;
  double h_ = -1.0;  // adaptive step carried across intervals
  Vector k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, ynew_, err_;
};

void check_start(const Vector& y, double t) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) throw IntegrationDiverged(t, "non-finite initial state");
  }
}

}  // namespace

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i])) {
      throw DataError("time grid: non-finite time at index " + std::to_string(i));
    }
    if (i > 0 && !(times_[i] > times_[i - 1])) {
      throw DataError("time grid: not strictly increasing at t = " + std::to_string(times_[i]));
    }
  }
}

TimeGrid TimeGrid::uniform(double t0, double t1, std::size_t count) {
  if (count == 0) return TimeGrid();
  if (count == 1) return TimeGrid({t0});
  std::vector<double> t(count);
  for (std::size_t i = 0; i < count; ++i) {
    t[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  t.back() = t1;
  return TimeGrid(std::move(t));
}

void SolverConfig::validate() const {
  if (const auto* rk = std::get_if<Rk4Fixed>(&method)) {
    if (!(rk->step > 0.0) || !std::isfinite(rk->step)) {
      throw ConfigError("solver.step: must be a positive finite number");
    }
  } else {
    const auto& d = std::get<Dopri45>(method);
    if (!(d.rtol > 0.0)) throw ConfigError("solver.rtol: must be > 0");
    if (!(d.atol > 0.0)) throw ConfigError("solver.atol: must be > 0");
    if (!(d.max_step > 0.0)) throw ConfigError("solver.max_step: must be > 0");
  }
}

SolverConfig rk4_for_horizon(double t0, double t1, int steps) {
  return SolverConfig{Rk4Fixed{(t1 - t0) / static_cast<double>(steps)}, Direction::Forward};
}

Matrix integrate(const Rhs& rhs, const Vector& y0, const TimeGrid& grid,
                 const SolverConfig& cfg) {
  cfg.validate();
  const auto N = grid.size();
  Matrix out(static_cast<Eigen::Index>(N), y0.size());
  if (N == 0) return out;
  Stepper stepper(rhs, cfg, y0.size());
  Vector y = y0;
  if (cfg.direction == Direction::Forward) {
    check_start(y, grid.front());
    out.row(0) = y0.transpose();
    for (std::size_t i = 1; i < N; ++i) {
      stepper.advance(y, grid[i - 1], grid[i]);
      out.row(static_cast<Eigen::Index>(i)) = y.transpose();
    }
  } else {
    check_start(y, grid.back());
    out.row(static_cast<Eigen::Index>(N - 1)) = y0.transpose();
    for (std::size_t i = N - 1; i > 0; --i) {
      stepper.advance(y, grid[i], grid[i - 1]);
      out.row(static_cast<Eigen::Index>(i - 1)) = y.transpose();
    }
  }
  return out;
}

ReverseResult integrate_reverse_with_accumulator(const RhsWithQuadrature& rhs_quad,
                                                 Eigen::Index quad_dim, const Vector& y_end,
                                                 const TimeGrid& grid, const SolverConfig& cfg,
                                                 const GridHook& hook) {
  cfg.validate();
  const auto N = grid.size();
  const Eigen::Index dim = y_end.size();
  ReverseResult res{Matrix(static_cast<Eigen::Index>(N), dim), Vector::Zero(quad_dim)};
  if (N == 0) return res;

  // Extended state [y; c] with dc/dt = q. Running from T down to t0 leaves
  // c(t0) = -integral(q), so the accumulated integral is -c(t0).
  Vector ys(dim), q(quad_dim);
  Rhs extended = [&](double t, const Vector& ext, Vector& dext) {
    ys = ext.head(dim);
    dext.resize(dim + quad_dim);
    Vector dy(dim);
    rhs_quad(t, ys, dy, q);
    if (dy.size() != dim) throw DimensionError("rhs output", dim, dy.size());
    if (q.size() != quad_dim) throw DimensionError("quadrature output", quad_dim, q.size());
    dext.head(dim) = dy;
    dext.tail(quad_dim) = q;
  };
  Stepper stepper(extended, cfg, dim);

  Vector ext = Vector::Zero(dim + quad_dim);
  ext.head(dim) = y_end;
  check_start(ext, grid.back());
  for (std::size_t i = N; i-- > 0;) {
    if (i + 1 < N) stepper.advance(ext, grid[i + 1], grid[i]);
    if (hook) {
      Vector y = ext.head(dim);
      hook(i, grid[i], y);
      if (y.size() != dim) throw DimensionError("hooked state", dim, y.size());
      ext.head(dim) = y;
    }
    res.trajectory.row(static_cast<Eigen::Index>(i)) = ext.head(dim).transpose();
  }
  res.accumulated = -ext.tail(quad_dim);
  return res;
}

ReverseResult integrate_reverse_with_accumulator(const Rhs& rhs, const Quadrature& quad,
                                                 const Vector& y_end, const TimeGrid& grid,
                                                 const SolverConfig& cfg,
                                                 const GridHook& hook) {
  // Probe the quadrature once for its dimension.
  Eigen::Index quad_dim = 0;
  if (!grid.empty()) {
    Vector q;
    quad(grid.back(), y_end, q);
    quad_dim = q.size();
  }
  RhsWithQuadrature joint = [&](double t, const Vector& y, Vector& dy, Vector& q) {
    rhs(t, y, dy);
    quad(t, y, q);
  };
  return integrate_reverse_with_accumulator(joint, quad_dim, y_end, grid, cfg, hook);
}

}  // namespace trase
