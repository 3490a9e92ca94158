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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mpelu/layer.hpp"
#include "mpelu/tensor.hpp"

namespace mpelu {

/// 2-D cross-correlation over NCHW input, square kernels, im2col + GEMM.
class Conv2d : public Layer {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels,
         std::size_t kernel, std::size_t stride = 1, std::size_t pad = 0,
         bool bias = true);

  std::string type() const override { return "conv"; }
  std::string config() const override;
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, Phase phase) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override;

  std::size_t in_channels() const { return in_channels_; }
  std::size_t out_channels() const { return out_channels_; }
  std::size_t kernel() const { return kernel_; }
  std::size_t stride() const { return stride_; }
  std::size_t pad() const { return pad_; }
  bool has_bias() const { return has_bias_; }

  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 private:
  std::size_t out_size(std::size_t in) const;

  std::size_t in_channels_, out_channels_, kernel_, stride_, pad_;
  bool has_bias_;
  Param weight_;  // [c_out, c_in, k, k]
  Param bias_;    // [c_out] or empty
  Tensor input_;
  bool has_input_ = false;
};

/// Per-channel batch normalisation over (N, H, W).
///
/// Train phase normalises with the biased batch variance and folds the batch
/// statistics into the running estimates as
/// running = momentum * running + (1 - momentum) * batch, using the unbiased
/// variance for the running estimate. Inference phase uses running stats.
class BatchNorm2d : public Layer {
 public:
  explicit BatchNorm2d(std::size_t channels, double momentum = 0.9,
                       double epsilon = 1e-5);

  std::string type() const override { return "bn"; }
  std::string config() const override;
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(const Tensor& x, Phase phase) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override;
  std::vector<std::pair<std::string, Tensor*>> buffers() override;

  std::size_t channels() const { return channels_; }
  Param& gamma() { return gamma_; }
  Param& shift() { return shift_; }
  Tensor& running_mean() { return running_mean_; }
  Tensor& running_var() { return running_var_; }
  void reset_parameters();

 private:
  std::size_t channels_;
  double momentum_, epsilon_;
  Param gamma_;
  Param shift_;
  Tensor running_mean_;
  Tensor running_var_;
  // Backward cache.
  Tensor x_hat_;
  std::vector<double> inv_std_;
  Phase cached_phase_ = Phase::Train;
  bool has_cache_ = false;
};

/// Fully connected layer; input [N, ...] is flattened to [N, in_features].
class Dense : public Layer {
 public:
  Dense(std::size_t in_features, std::size_t out_features, bool bias = true);

  std::string type() const override { return "dense"; }
  std::string config() const override;
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, Phase phase) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override;

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  Param& weight() { return weight_; }  // [out, in]
  Param& bias() { return bias_; }

 private:
  std::size_t in_, out_;
  bool has_bias_;
  Param weight_;
  Param bias_;
  Tensor input_;
  bool has_input_ = false;
};

enum class PoolMode { Max, Average };

/// Windowed pooling without padding (floor output size). Max-pool ties go to
/// the first element in row-major scan order.
class Pool2d : public Layer {
 public:
  Pool2d(PoolMode mode, std::size_t window, std::size_t stride);

  std::string type() const override {
    return mode_ == PoolMode::Max ? "maxpool" : "avgpool";
  }
  std::string config() const override;
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, Phase phase) override;
  Tensor backward(const Tensor& grad_out) override;
  void regime(std::vector<std::int64_t>& out) const override;

 private:
  PoolMode mode_;
  std::size_t window_, stride_;
  Shape in_shape_;
  std::vector<std::size_t> argmax_;
  bool has_cache_ = false;
};

/// Mean over H and W: [N, C, H, W] -> [N, C].
class GlobalAvgPool : public Layer {
 public:
  std::string type() const override { return "gap"; }
  std::string config() const override { return ""; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, Phase phase) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Shape in_shape_;
  bool has_cache_ = false;
};

/// Parameter-free shortcut: strided subsampling plus zero channel padding.
class PadShortcut : public Layer {
 public:
  PadShortcut(std::size_t in_channels, std::size_t out_channels,
              std::size_t stride);

  std::string type() const override { return "padshortcut"; }
  std::string config() const override;
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, Phase phase) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::size_t in_channels_, out_channels_, stride_;
  Shape in_shape_;
  bool has_cache_ = false;
};

struct SoftmaxLossResult {
  double loss = 0.0;   // mean cross-entropy over the batch
  Tensor probs;        // [N, K]
  Tensor grad;         // d loss / d logits, [N, K]
  std::size_t errors = 0;  // top-1 mistakes
};

/// Softmax + cross-entropy on [N, K] logits, max-shifted for stability.
SoftmaxLossResult softmax_loss(const Tensor& logits,
                               std::span<const int> labels);

// Unfold helpers shared with tests.
void im2col(const double* image, std::size_t channels, std::size_t height,
            std::size_t width, std::size_t kernel, std::size_t stride,
            std::size_t pad, std::size_t out_h, std::size_t out_w,
            double* col);
void col2im(const double* col, std::size_t channels, std::size_t height,
            std::size_t width, std::size_t kernel, std::size_t stride,
            std::size_t pad, std::size_t out_h, std::size_t out_w,
            double* image);

}  // namespace mpelu
