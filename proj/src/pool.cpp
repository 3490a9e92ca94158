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

#include <sstream>

#include "mpelu/errors.hpp"
#include "mpelu/layers.hpp"

namespace mpelu {

Pool2d::Pool2d(PoolMode mode, std::size_t window, std::size_t stride)
    : mode_(mode), window_(window), stride_(stride) {
  if (window == 0 || stride == 0)
    throw InvalidArgument("pool: window and stride must be >= 1");
}

std::string Pool2d::config() const {
  std::ostringstream os;
  os << "k=" << window_ << " s=" << stride_;
  return os.str();
}

Shape Pool2d::output_shape(const Shape& input) const {
  if (input.size() != 4 || input[2] < window_ || input[3] < window_)
    throw InvalidArgument("pool: input " + shape_str(input) +
                          " smaller than window " + std::to_string(window_));
  return {input[0], input[1], (input[2] - window_) / stride_ + 1,
          (input[3] - window_) / stride_ + 1};
}

Tensor Pool2d::forward(const Tensor& x, Phase) {
  const Shape os = output_shape(x.shape());
  const std::size_t planes = os[0] * os[1];
  const std::size_t h = x.dim(2), w = x.dim(3), oh = os[2], ow = os[3];
  Tensor out(os);
  if (mode_ == PoolMode::Max) argmax_.assign(out.numel(), 0);
  const double inv_area = 1.0 / static_cast<double>(window_ * window_);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = x.data() + p * h * w;
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        const std::size_t o = (p * oh + i) * ow + j;
        if (mode_ == PoolMode::Max) {
          std::size_t best = (i * stride_) * w + j * stride_;
          for (std::size_t di = 0; di < window_; ++di)
            for (std::size_t dj = 0; dj < window_; ++dj) {
              const std::size_t idx = (i * stride_ + di) * w + j * stride_ + dj;
              if (src[idx] > src[best]) best = idx;
            }
          out[o] = src[best];
          argmax_[o] = p * h * w + best;
        } else {
          double s = 0.0;
          for (std::size_t di = 0; di < window_; ++di)
            for (std::size_t dj = 0; dj < window_; ++dj)
              s += src[(i * stride_ + di) * w + j * stride_ + dj];
          out[o] = s * inv_area;
        }
      }
  }
  in_shape_ = x.shape();
  has_cache_ = true;
  return out;
}

Tensor Pool2d::backward(const Tensor& grad_out) {
  if (!has_cache_) throw StateError("pool: backward before forward");
  const Shape os = output_shape(in_shape_);
  if (grad_out.shape() != os)
    throw InvalidArgument("pool backward: expected grad " + shape_str(os) +
                          ", got " + shape_str(grad_out.shape()));
  Tensor grad_in(in_shape_);
  if (mode_ == PoolMode::Max) {
    for (std::size_t o = 0; o < grad_out.numel(); ++o)
      grad_in[argmax_[o]] += grad_out[o];
    return grad_in;
  }
  const std::size_t planes = os[0] * os[1];
  const std::size_t h = in_shape_[2], w = in_shape_[3], oh = os[2], ow = os[3];
  const double inv_area = 1.0 / static_cast<double>(window_ * window_);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        const double g = grad_out[(p * oh + i) * ow + j] * inv_area;
        for (std::size_t di = 0; di < window_; ++di)
          for (std::size_t dj = 0; dj < window_; ++dj)
            grad_in[p * h * w + (i * stride_ + di) * w + j * stride_ + dj] += g;
      }
  return grad_in;
}

void Pool2d::regime(std::vector<std::int64_t>& out) const {
  if (mode_ != PoolMode::Max) return;
  for (auto a : argmax_) out.push_back(static_cast<std::int64_t>(a));
}

// ---------------------------------------------------------------------------

Shape GlobalAvgPool::output_shape(const Shape& input) const {
  if (input.size() != 4)
    throw InvalidArgument("gap: expected NCHW input, got " + shape_str(input));
  return {input[0], input[1]};
}

Tensor GlobalAvgPool::forward(const Tensor& x, Phase) {
  const Shape os = output_shape(x.shape());
  const std::size_t plane = x.dim(2) * x.dim(3);
  Tensor out(os);
  for (std::size_t p = 0; p < os[0] * os[1]; ++p) {
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += x[p * plane + i];
    out[p] = s / static_cast<double>(plane);
  }
  in_shape_ = x.shape();
  has_cache_ = true;
  return out;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) {
  if (!has_cache_) throw StateError("gap: backward before forward");
  if (grad_out.shape() != output_shape(in_shape_))
    throw InvalidArgument("gap backward: shape mismatch");
  const std::size_t plane = in_shape_[2] * in_shape_[3];
  Tensor grad_in(in_shape_);
  for (std::size_t p = 0; p < grad_out.numel(); ++p) {
    const double g = grad_out[p] / static_cast<double>(plane);
    for (std::size_t i = 0; i < plane; ++i) grad_in[p * plane + i] = g;
  }
  return grad_in;
}

// ---------------------------------------------------------------------------

PadShortcut::PadShortcut(std::size_t in_channels, std::size_t out_channels,
                         std::size_t stride)
    : in_channels_(in_channels), out_channels_(out_channels), stride_(stride) {
  if (out_channels < in_channels || stride == 0)
    throw InvalidArgument("padshortcut: needs out >= in channels, stride >= 1");
}

std::string PadShortcut::config() const {
  std::ostringstream os;
  os << in_channels_ << "->" << out_channels_ << " s=" << stride_;
  return os.str();
}

Shape PadShortcut::output_shape(const Shape& input) const {
  if (input.size() != 4 || input[1] != in_channels_)
    throw InvalidArgument("padshortcut: bad input " + shape_str(input));
  return {input[0], out_channels_, (input[2] - 1) / stride_ + 1,
          (input[3] - 1) / stride_ + 1};
}

Tensor PadShortcut::forward(const Tensor& x, Phase) {
  const Shape os = output_shape(x.shape());
  Tensor out(os);
  for (std::size_t n = 0; n < os[0]; ++n)
    for (std::size_t c = 0; c < in_channels_; ++c)
      for (std::size_t i = 0; i < os[2]; ++i)
        for (std::size_t j = 0; j < os[3]; ++j)
          out.at(n, c, i, j) = x.at(n, c, i * stride_, j * stride_);
  in_shape_ = x.shape();
  has_cache_ = true;
  return out;
}

Tensor PadShortcut::backward(const Tensor& grad_out) {
  if (!has_cache_) throw StateError("padshortcut: backward before forward");
  const Shape os = output_shape(in_shape_);
  if (grad_out.shape() != os)
    throw InvalidArgument("padshortcut backward: shape mismatch");
  Tensor grad_in(in_shape_);
  for (std::size_t n = 0; n < os[0]; ++n)
    for (std::size_t c = 0; c < in_channels_; ++c)
      for (std::size_t i = 0; i < os[2]; ++i)
        for (std::size_t j = 0; j < os[3]; ++j)
          grad_in.at(n, c, i * stride_, j * stride_) = grad_out.at(n, c, i, j);
  return grad_in;
}

}  // namespace mpelu
