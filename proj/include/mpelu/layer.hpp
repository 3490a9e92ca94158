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

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mpelu/tensor.hpp"

namespace mpelu {

enum class Phase { Train, Inference };

/// A learnable tensor with its gradient buffer and optimizer multipliers.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  double lr_mult = 1.0;
  double wd_mult = 1.0;
  /// Projected back onto (0, inf) after every optimizer step.
  bool positive = false;

  Param() = default;
  Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
    grad = Tensor(value.shape());
  }
};

/// Single-input layer with a hand-written backward pass.
///
/// forward() caches whatever backward() needs; backward() adds parameter
/// gradients into Param::grad and returns the gradient w.r.t. the input.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string type() const = 0;
  /// Human-readable hyperparameters, stable across runs.
  virtual std::string config() const = 0;
  virtual Shape output_shape(const Shape& input) const = 0;

  virtual Tensor forward(const Tensor& x, Phase phase) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;

  virtual std::vector<Param*> params() { return {}; }
  /// Non-learnable state that checkpoints must carry (BN running stats).
  virtual std::vector<std::pair<std::string, Tensor*>> buffers() { return {}; }

  /// Appends a signature of the piecewise regime chosen by the last forward
  /// (which side of a kink each element fell on, which pool element won).
  /// Finite-difference checks drop probes whose signature changes.
  virtual void regime(std::vector<std::int64_t>&) const {}

  void zero_grad() {
    for (Param* p : params()) p->grad.fill(0.0);
  }
  std::size_t param_count() {
    std::size_t n = 0;
    for (Param* p : params()) n += p->value.numel();
    return n;
  }
};

using LayerPtr = std::unique_ptr<Layer>;

}  // namespace mpelu
