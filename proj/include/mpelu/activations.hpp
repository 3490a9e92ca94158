// Copyright 2026 The mpelu-kernels Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <optional>
#include <string>

#include "mpelu/layer.hpp"
#include "mpelu/tensor.hpp"

namespace mpelu {

enum class ActivationType { ReLU, LReLU, PReLU, ELU, MPELU };

/// Which member of the activation family a layer uses. LReLU's slope and
/// ELU's alpha are fixed constants; PReLU learns alpha, MPELU learns both.
struct ActivationKind {
  ActivationType type = ActivationType::ReLU;
  double slope = 0.01;   // LReLU
  double alpha0 = 1.0;   // ELU

  static ActivationKind relu() { return {ActivationType::ReLU}; }
  static ActivationKind lrelu(double slope) {
    return {ActivationType::LReLU, slope};
  }
  static ActivationKind prelu() { return {ActivationType::PReLU}; }
  static ActivationKind elu(double alpha = 1.0) {
    return {ActivationType::ELU, 0.01, alpha};
  }
  static ActivationKind mpelu() { return {ActivationType::MPELU}; }

  bool learnable() const {
    return type == ActivationType::PReLU || type == ActivationType::MPELU;
  }
  /// "relu", "lrelu=0.25", "prelu", "elu=1", "mpelu".
  std::string name() const;
  static ActivationKind parse(const std::string& text);
};

/// M = 1 (one alpha/beta pair per layer) or M = number of channels.
enum class ParamMode { ChannelShared, ChannelWise };

const char* to_string(ParamMode mode);

/// Per-layer activation parameters. For PReLU `alpha` holds the negative
/// slope and `beta` is empty; for MPELU both hold M values.
struct ActivationLayerState {
  ParamMode mode = ParamMode::ChannelWise;
  Param alpha;
  Param beta;
  Tensor saved_output;
  bool has_saved_output = false;

  /// Allocates M parameters (1 or `channels`) filled with the initials.
  static ActivationLayerState make(ActivationType type, ParamMode mode,
                                   std::size_t channels, double alpha0,
                                   double beta0, double lr_mult = 5.0,
                                   double wd_mult = 1.0);
  std::size_t size() const { return alpha.value.numel(); }
};

/// Lower bound used to keep beta strictly positive after optimizer steps.
inline constexpr double kMinBeta = 1e-6;

Tensor mpelu_forward(const Tensor& y, ActivationLayerState& state);

struct ActivationGrads {
  Tensor grad_in;
  Tensor d_alpha;  // shape [M], empty if the kind has no alpha
  Tensor d_beta;   // shape [M], empty if the kind has no beta
};

/// Input and parameter gradients. Parameter gradients are summed over every
/// position mapped to the same alpha/beta entry. Reuses state.saved_output.
ActivationGrads mpelu_backward(const ActivationLayerState& state,
                               const Tensor& y, const Tensor& grad_out);

Tensor activation_forward(const ActivationKind& kind, const Tensor& y,
                          ActivationLayerState& state);
ActivationGrads activation_backward(const ActivationKind& kind,
                                    const ActivationLayerState& state,
                                    const Tensor& y, const Tensor& grad_out);

/// Evaluates MPELU as a PReLU with slope beta followed by an ELU with
/// learnable alpha. Must agree with mpelu_forward elementwise.
Tensor decompose_check(const Tensor& x, double alpha, double beta);

/// Scalar MPELU.
double mpelu_value(double y, double alpha, double beta);

class ActivationLayer : public Layer {
 public:
  ActivationLayer(ActivationKind kind, std::size_t channels,
                  ParamMode mode = ParamMode::ChannelWise,
                  double alpha0 = 1.0, double beta0 = 1.0,
                  double lr_mult = 5.0, double wd_mult = 1.0);

  std::string type() const override { return "activation"; }
  std::string config() const override;
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(const Tensor& x, Phase phase) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override;
  void regime(std::vector<std::int64_t>& out) const override;

  const ActivationKind& kind() const { return kind_; }
  ActivationLayerState& state() { return state_; }
  const ActivationLayerState& state() const { return state_; }
  std::size_t channels() const { return channels_; }

  /// Configured initial values; init_network resets parameters to these and
  /// the Taylor initialiser reads them.
  double initial_alpha() const { return alpha0_; }
  double initial_beta() const { return beta0_; }
  void set_initial(double alpha0, double beta0);
  /// Restores alpha/beta to the configured initial values.
  void reset_parameters();
  /// Slope-product alpha*beta of the negative part at the origin, as used by
  /// the Taylor initialiser (0 for ReLU, slope for LReLU/PReLU).
  double initial_negative_gain() const;

 private:
  ActivationKind kind_;
  std::size_t channels_;
  double alpha0_;
  double beta0_;
  ActivationLayerState state_;
  Tensor input_;
  bool has_input_ = false;
};

}  // namespace mpelu
