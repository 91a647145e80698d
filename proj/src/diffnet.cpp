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

#include "trase/diffnet.hpp"

#include <cmath>
#include <random>

#include "trase/errors.hpp"

namespace trase {
namespace {

bool same_vector(const Vector& a, const Vector& b) {
  return a.size() == b.size() && (a.size() == 0 || a == b);
}

inline double act(Activation a, double slope, double z) {
  if (a == Activation::Tanh) return std::tanh(z);
  return z > 0.0 ? z : slope * z;
}

inline double act_d1(Activation a, double slope, double z) {
  if (a == Activation::Tanh) {
    const double t = std::tanh(z);
    return 1.0 - t * t;
  }
  return z > 0.0 ? 1.0 : slope;
}

// Zero almost everywhere for LeakyReLU.
inline double act_d2(Activation a, double z) {
  if (a == Activation::Tanh) {
    const double t = std::tanh(z);
    return -2.0 * t * (1.0 - t * t);
  }
  return 0.0;
}

void check_input(const NetSpec& spec, const ModelInput& in) {
  if (in.x.size() != spec.state_dim) throw DimensionError("x", spec.state_dim, in.x.size());
  if (in.y.size() != spec.exo_dim) throw DimensionError("y", spec.exo_dim, in.y.size());
}

void check_params(const NetSpec& spec, const ParamVector& theta) {
  const auto p = static_cast<long>(spec.param_count());
  if (theta.size() != p) throw DimensionError("theta", p, theta.size());
}

}  // namespace

bool operator==(const HiddenLayer& a, const HiddenLayer& b) {
  return a.width == b.width && a.activation == b.activation &&
         (a.activation == Activation::Tanh || a.slope == b.slope);
}

bool operator==(const NetSpec& a, const NetSpec& b) {
  return a.state_dim == b.state_dim && a.exo_dim == b.exo_dim &&
         a.time_as_input == b.time_as_input && a.hidden == b.hidden &&
         same_vector(a.input_offset, b.input_offset) &&
         same_vector(a.input_scale, b.input_scale);
}

int NetSpec::layer_in(int l) const {
  return l == 0 ? input_dim() : hidden[static_cast<std::size_t>(l - 1)].width;
}

int NetSpec::layer_out(int l) const {
  return l == layer_count() - 1 ? output_dim() : hidden[static_cast<std::size_t>(l)].width;
}

std::size_t NetSpec::param_count() const {
  std::size_t p = 0;
  for (int l = 0; l < layer_count(); ++l) {
    p += static_cast<std::size_t>(layer_in(l) + 1) * static_cast<std::size_t>(layer_out(l));
  }
  return p;
}

void NetSpec::validate() const {
  if (state_dim < 1) throw ConfigError("net.state_dim: must be >= 1");
  if (exo_dim < 0) throw ConfigError("net.exo_dim: must be >= 0");
  if (hidden.empty()) throw ConfigError("net.hidden: at least one hidden layer is required");
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    if (hidden[i].width < 1) {
      throw ConfigError("net.hidden[" + std::to_string(i) + "].width: must be >= 1");
    }
    if (hidden[i].activation == Activation::LeakyReLU && !std::isfinite(hidden[i].slope)) {
      throw ConfigError("net.hidden[" + std::to_string(i) + "].slope: must be finite");
    }
  }
  if (input_offset.size() != 0 && input_offset.size() != input_dim()) {
    throw ConfigError("net.input_offset: length must equal input_dim (" +
                      std::to_string(input_dim()) + ")");
  }
  if (input_scale.size() != 0 && input_scale.size() != input_dim()) {
    throw ConfigError("net.input_scale: length must equal input_dim (" +
                      std::to_string(input_dim()) + ")");
  }
}

const Vector& no_exogenous() {
  static const Vector empty;
  return empty;
}

ParamVector init_params(const NetSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  ParamVector theta{Vector::Zero(static_cast<Eigen::Index>(spec.param_count()))};
  std::size_t off = 0;
  for (int l = 0; l < spec.layer_count(); ++l) {
    const int in = spec.layer_in(l);
    const int out = spec.layer_out(l);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (int k = 0; k < in * out; ++k) theta.values[static_cast<Eigen::Index>(off++)] = dist(rng);
    off += static_cast<std::size_t>(out);
  }
  return theta;
}

// ---------------------------------------------------------------------------
// NetworkPass

NetworkPass::NetworkPass(const NetSpec& spec, const ParamVector& theta)
    : spec_(spec), theta_(theta), p_(spec.param_count()) {
  spec.validate();
  check_params(spec, theta);
  const int L = spec.layer_count();
  std::size_t off = 0;
  for (int l = 0; l < L; ++l) {
    w_off_.push_back(off);
    off += static_cast<std::size_t>(spec.layer_in(l) * spec.layer_out(l));
    b_off_.push_back(off);
    off += static_cast<std::size_t>(spec.layer_out(l));
  }
  act_.resize(static_cast<std::size_t>(L));
  act_dot_.resize(static_cast<std::size_t>(L));
  pre_.resize(static_cast<std::size_t>(L - 1));
  pre_dot_.resize(static_cast<std::size_t>(L - 1));
}

void NetworkPass::assemble_input(const ModelInput& in) {
  check_input(spec_, in);
  const int n = spec_.state_dim;
  input_.resize(spec_.input_dim());
  input_.head(n) = in.x;
  input_[n] = in.u;
  if (spec_.exo_dim > 0) input_.segment(n + 1, spec_.exo_dim) = in.y;
  if (spec_.time_as_input) input_[spec_.input_dim() - 1] = in.t;

  Vector& h0 = act_[0];
  h0 = input_;
  if (spec_.input_offset.size() != 0) h0 -= spec_.input_offset;
  if (spec_.input_scale.size() != 0) h0.array() *= spec_.input_scale.array();
}

void NetworkPass::forward(const ModelInput& in) {
  assemble_input(in);
  run(false);
}

void NetworkPass::forward(const ModelInput& in, const Eigen::Ref<const Vector>& s) {
  if (s.size() != spec_.state_dim) throw DimensionError("s", spec_.state_dim, s.size());
  assemble_input(in);
  Vector& v0 = act_dot_[0];
  v0 = Vector::Zero(spec_.input_dim());
  v0.head(spec_.state_dim) = s;
  v0[spec_.state_dim] = 1.0;
  if (spec_.input_scale.size() != 0) v0.array() *= spec_.input_scale.array();
  run(true);
}

void NetworkPass::run(bool with_tangent) {
  has_tangent_ = with_tangent;
  const double* th = theta_.values.data();
  const int L = spec_.layer_count();
  for (int l = 0; l < L; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    const int in = spec_.layer_in(l);
    const int out = spec_.layer_out(l);
    Eigen::Map<const RowMatrix> W(th + w_off_[ul], out, in);
    Eigen::Map<const Vector> b(th + b_off_[ul], out);
    if (l == L - 1) {
      out_.noalias() = W * act_[ul];
      out_ += b;
      if (with_tangent) out_dot_.noalias() = W * act_dot_[ul];
      break;
    }
    const HiddenLayer& hl = spec_.hidden[ul];
    Vector& z = pre_[ul];
    z.noalias() = W * act_[ul];
    z += b;
    Vector& h = act_[ul + 1];
    h.resize(out);
    for (int i = 0; i < out; ++i) h[i] = act(hl.activation, hl.slope, z[i]);
    if (with_tangent) {
      Vector& zd = pre_dot_[ul];
      zd.noalias() = W * act_dot_[ul];
      Vector& hd = act_dot_[ul + 1];
      hd.resize(out);
      for (int i = 0; i < out; ++i) hd[i] = act_d1(hl.activation, hl.slope, z[i]) * zd[i];
    }
  }
}

void NetworkPass::reverse(const Eigen::Ref<const Vector>& a_f, const Vector* a_t,
                          Eigen::Ref<Vector> grad_x, Vector* grad_s,
                          Eigen::Ref<Vector> grad_theta) {
  const int n = spec_.state_dim;
  if (a_f.size() != n) throw DimensionError("a_f", n, a_f.size());
  if (grad_x.size() != n) throw DimensionError("grad_x", n, grad_x.size());
  if (grad_theta.size() != static_cast<Eigen::Index>(p_)) {
    throw DimensionError("grad_theta", static_cast<long>(p_), grad_theta.size());
  }
  const bool tangent = a_t != nullptr;
  if (tangent && !has_tangent_) {
    throw Error("NetworkPass::reverse: tangent cotangent given but forward() carried no tangent");
  }
  if (tangent && a_t->size() != n) throw DimensionError("a_t", n, a_t->size());

  const double* th = theta_.values.data();
  double* gth = grad_theta.data();
  const int L = spec_.layer_count();

  g_ = a_f;
  if (tangent) gd_ = *a_t;
  for (int l = L - 1; l >= 0; --l) {
    const auto ul = static_cast<std::size_t>(l);
    const int in = spec_.layer_in(l);
    const int out = spec_.layer_out(l);
    Eigen::Map<const RowMatrix> W(th + w_off_[ul], out, in);
    Eigen::Map<RowMatrix> gW(gth + w_off_[ul], out, in);
    Eigen::Map<Vector> gb(gth + b_off_[ul], out);

    if (l < L - 1) {
      // Through h = act(z) and its tangent hd = act'(z) * zd.
      const HiddenLayer& hl = spec_.hidden[ul];
      const Vector& z = pre_[ul];
      gpre_.resize(out);
      if (tangent) gpred_.resize(out);
      for (int i = 0; i < out; ++i) {
        const double d1 = act_d1(hl.activation, hl.slope, z[i]);
        gpre_[i] = d1 * g_[i];
        if (tangent) {
          gpre_[i] += act_d2(hl.activation, z[i]) * pre_dot_[ul][i] * gd_[i];
          gpred_[i] = d1 * gd_[i];
        }
      }
      g_.swap(gpre_);
      if (tangent) gd_.swap(gpred_);
    }

    gW.noalias() += g_ * act_[ul].transpose();
    gb += g_;
    if (tangent) gW.noalias() += gd_ * act_dot_[ul].transpose();

    gpre_.noalias() = W.transpose() * g_;
    g_.swap(gpre_);
    if (tangent) {
      gpred_.noalias() = W.transpose() * gd_;
      gd_.swap(gpred_);
    }
  }

  // g_ and gd_ now hold cotangents of the scaled input and input tangent.
  if (spec_.input_scale.size() != 0) {
    g_.array() *= spec_.input_scale.array();
    if (tangent) gd_.array() *= spec_.input_scale.array();
  }
  grad_x = g_.head(n);
  if (grad_s != nullptr) {
    if (!tangent) throw Error("NetworkPass::reverse: grad_s requires a tangent cotangent");
    *grad_s = gd_.head(n);
  }
}

// ---------------------------------------------------------------------------
// Free-function surface

Vector eval_f(const NetSpec& spec, const ParamVector& theta, const ModelInput& in) {
  NetworkPass pass(spec, theta);
  pass.forward(in);
  return pass.output();
}

Matrix jac_x(const NetSpec& spec, const ParamVector& theta, const ModelInput& in) {
  NetworkPass pass(spec, theta);
  pass.forward(in);
  const int n = spec.state_dim;
  Matrix J(n, n);
  Vector e = Vector::Zero(n), gx(n), gth(static_cast<Eigen::Index>(pass.param_count()));
  for (int i = 0; i < n; ++i) {
    e.setZero();
    e[i] = 1.0;
    gth.setZero();
    pass.reverse(e, nullptr, gx, nullptr, gth);
    J.row(i) = gx.transpose();
  }
  return J;
}

Vector jac_u(const NetSpec& spec, const ParamVector& theta, const ModelInput& in) {
  NetworkPass pass(spec, theta);
  pass.forward(in, Vector::Zero(spec.state_dim));
  return pass.tangent_output();
}

Matrix jac_theta(const NetSpec& spec, const ParamVector& theta, const ModelInput& in) {
  NetworkPass pass(spec, theta);
  pass.forward(in);
  const int n = spec.state_dim;
  const auto p = static_cast<Eigen::Index>(pass.param_count());
  Matrix J(n, p);
  Vector e = Vector::Zero(n), gx(n), gth(p);
  for (int i = 0; i < n; ++i) {
    e.setZero();
    e[i] = 1.0;
    gth.setZero();
    pass.reverse(e, nullptr, gx, nullptr, gth);
    J.row(i) = gth.transpose();
  }
  return J;
}

Vector sens_rhs(const NetSpec& spec, const ParamVector& theta, const ModelInput& in,
                const Eigen::Ref<const Vector>& s) {
  NetworkPass pass(spec, theta);
  pass.forward(in, s);
  return pass.tangent_output();
}

SensRhsJacobians sens_rhs_jacobians(const NetSpec& spec, const ParamVector& theta,
                                    const ModelInput& in,
                                    const Eigen::Ref<const Vector>& s) {
  NetworkPass pass(spec, theta);
  pass.forward(in, s);
  const int n = spec.state_dim;
  const auto p = static_cast<Eigen::Index>(pass.param_count());
  SensRhsJacobians out{Matrix(n, n), Matrix(n, n), Matrix(n, p)};
  const Vector zero = Vector::Zero(n);
  Vector e = Vector::Zero(n), gx(n), gs(n), gth(p);
  for (int i = 0; i < n; ++i) {
    e.setZero();
    e[i] = 1.0;
    gth.setZero();
    pass.reverse(zero, &e, gx, &gs, gth);
    out.d_x.row(i) = gx.transpose();
    out.d_s.row(i) = gs.transpose();
    out.d_theta.row(i) = gth.transpose();
  }
  return out;
}

}  // namespace trase
