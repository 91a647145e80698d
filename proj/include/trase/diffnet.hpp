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

#include <cstdint>
#include <string>
#include <vector>

#include "trase/types.hpp"

namespace trase {

enum class Activation { LeakyReLU, Tanh };

struct HiddenLayer {
  int width = 0;
  Activation activation = Activation::Tanh;
  double slope = 0.01;  // LeakyReLU negative slope; ignored for Tanh
};

/**
 * Fully connected network f(x, t, u, y) -> dx/dt.
 *
 * Input vector layout is [x (n); u (1); y (m)] followed by t when
 * time_as_input is set. An optional affine map (in - offset) * scale is
 * applied to the input before the first layer; empty vectors mean identity.
 *
 * Parameter layout is layer-major: for each layer its weight matrix in
 * row-major order (out x in), then its bias vector.
 */
struct NetSpec {
  int state_dim = 0;
  int exo_dim = 0;
  bool time_as_input = false;
  std::vector<HiddenLayer> hidden;
  Vector input_offset;
  Vector input_scale;

  int input_dim() const { return state_dim + 1 + exo_dim + (time_as_input ? 1 : 0); }
  int output_dim() const { return state_dim; }
  int layer_count() const { return static_cast<int>(hidden.size()) + 1; }
  int layer_in(int l) const;
  int layer_out(int l) const;
  std::size_t param_count() const;

  /// Throws ConfigError on an invalid spec.
  void validate() const;
};

bool operator==(const HiddenLayer& a, const HiddenLayer& b);
bool operator==(const NetSpec& a, const NetSpec& b);

/// Flat vector of all weights and biases.
struct ParamVector {
  Vector values;

  Eigen::Index size() const { return values.size(); }
  bool operator==(const ParamVector& o) const {
    return values.size() == o.values.size() && values == o.values;
  }
};

/// Evaluation point of the field. The views must outlive the call.
struct ModelInput {
  Eigen::Ref<const Vector> x;
  double t;
  double u;
  Eigen::Ref<const Vector> y;
};

/// Empty exogenous vector for systems without algebraic inputs.
const Vector& no_exogenous();

/// Uniform fan-in scaled weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases.
ParamVector init_params(const NetSpec& spec, std::uint64_t seed);

Vector eval_f(const NetSpec& spec, const ParamVector& theta, const ModelInput& in);
Matrix jac_x(const NetSpec& spec, const ParamVector& theta, const ModelInput& in);
Vector jac_u(const NetSpec& spec, const ParamVector& theta, const ModelInput& in);
Matrix jac_theta(const NetSpec& spec, const ParamVector& theta, const ModelInput& in);

/// df/du + df/dx * s, computed as a forward-mode directional derivative
/// along [s; 1; 0].
Vector sens_rhs(const NetSpec& spec, const ParamVector& theta, const ModelInput& in,
                const Eigen::Ref<const Vector>& s);

struct SensRhsJacobians {
  Matrix d_x;      // n x n
  Matrix d_s;      // n x n, equals jac_x
  Matrix d_theta;  // n x p, s held fixed
};

/// Jacobians of sens_rhs obtained by running reverse mode over the
/// forward-mode pass that defines it.
SensRhsJacobians sens_rhs_jacobians(const NetSpec& spec, const ParamVector& theta,
                                    const ModelInput& in,
                                    const Eigen::Ref<const Vector>& s);

/**
 * Reusable differentiation engine for one (spec, theta) pair.
 *
 * forward() evaluates the network and, when a sensitivity vector is given,
 * the tangent of the output along the input direction [s; 1; 0]. reverse()
 * then propagates cotangents of both outputs back to x, s and theta. This is
 * the hot path of the adjoint passes; the free functions above wrap it.
 *
 * Holds scratch buffers, so one instance must not be shared between threads.
 * The spec and parameters are referenced, not copied.
 */
class NetworkPass {
 public:
  NetworkPass(const NetSpec& spec, const ParamVector& theta);

  void forward(const ModelInput& in);
  void forward(const ModelInput& in, const Eigen::Ref<const Vector>& s);

  const Vector& output() const { return out_; }
  /// df/du + df/dx * s; valid after forward() with s.
  const Vector& tangent_output() const { return out_dot_; }

  /**
   * Cotangent pull-back through the last forward() call.
   *
   * grad_x = J_x^T a_f + (d/dx tangent)^T a_t
   * grad_s = J_x^T a_t                      (only if a_t and grad_s given)
   * grad_theta += J_theta^T a_f + (d/dtheta tangent)^T a_t
   *
   * a_t requires the preceding forward() to have carried a tangent.
   */
  void reverse(const Eigen::Ref<const Vector>& a_f, const Vector* a_t,
               Eigen::Ref<Vector> grad_x, Vector* grad_s,
               Eigen::Ref<Vector> grad_theta);

  const NetSpec& spec() const { return spec_; }
  std::size_t param_count() const { return p_; }

 private:
  void assemble_input(const ModelInput& in);
  void run(bool with_tangent);

  const NetSpec& spec_;
  const ParamVector& theta_;
  std::size_t p_;
  std::vector<std::size_t> w_off_, b_off_;
  bool has_tangent_ = false;

  Vector input_;
  std::vector<Vector> act_, act_dot_;  // layer inputs h_l and their tangents
  std::vector<Vector> pre_, pre_dot_;  // hidden pre-activations
  Vector out_, out_dot_;
  Vector g_, gd_, gpre_, gpred_;
};

}  // namespace trase
