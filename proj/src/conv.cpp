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

#include <algorithm>
#include <cmath>
#include <utility>
#include <sstream>

#include "mpelu/errors.hpp"
#include "mpelu/gemm.hpp"
#include "mpelu/layers.hpp"

namespace mpelu {

namespace {

// Output columns [lo, hi) whose input column ow * stride + kw - pad is inside
// [0, width).
std::pair<std::size_t, std::size_t> valid_range(std::size_t kw,
                                                 std::size_t stride,
                                                 std::size_t pad,
                                                 std::size_t width,
                                                 std::size_t out_w) {
  const std::size_t lo =
      kw >= pad ? 0 : std::min(out_w, (pad - kw + stride - 1) / stride);
  std::size_t hi = 0;
  if (width + pad > kw) hi = std::min(out_w, (width + pad - kw - 1) / stride + 1);
  return {lo, std::max(lo, hi)};
}

}  // namespace

void im2col(const double* image, std::size_t channels, std::size_t height,
            std::size_t width, std::size_t kernel, std::size_t stride,
            std::size_t pad, std::size_t out_h, std::size_t out_w,
            double* col) {
  const std::size_t plane = out_h * out_w;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* src = image + c * height * width;
    for (std::size_t kh = 0; kh < kernel; ++kh) {
      for (std::size_t kw = 0; kw < kernel; ++kw) {
        double* dst = col + ((c * kernel + kh) * kernel + kw) * plane;
        for (std::size_t oh = 0; oh < out_h; ++oh) {
          const long ih = static_cast<long>(oh * stride + kh) -
                          static_cast<long>(pad);
          double* row = dst + oh * out_w;
          if (ih < 0 || ih >= static_cast<long>(height)) {
            for (std::size_t ow = 0; ow < out_w; ++ow) row[ow] = 0.0;
            continue;
          }
          const double* srow = src + static_cast<std::size_t>(ih) * width;
          const auto [lo, hi] = valid_range(kw, stride, pad, width, out_w);
          std::fill(row, row + lo, 0.0);
          const double* sp = srow + (lo * stride + kw - pad);
          for (std::size_t i = 0; i < hi - lo; ++i) row[lo + i] = sp[i * stride];
          std::fill(row + hi, row + out_w, 0.0);
        }
      }
    }
  }
}

void col2im(const double* col, std::size_t channels, std::size_t height,
            std::size_t width, std::size_t kernel, std::size_t stride,
            std::size_t pad, std::size_t out_h, std::size_t out_w,
            double* image) {
  const std::size_t plane = out_h * out_w;
  for (std::size_t c = 0; c < channels; ++c) {
    double* dst = image + c * height * width;
    for (std::size_t kh = 0; kh < kernel; ++kh) {
      for (std::size_t kw = 0; kw < kernel; ++kw) {
        const double* src = col + ((c * kernel + kh) * kernel + kw) * plane;
        for (std::size_t oh = 0; oh < out_h; ++oh) {
          const long ih = static_cast<long>(oh * stride + kh) -
                          static_cast<long>(pad);
          if (ih < 0 || ih >= static_cast<long>(height)) continue;
          double* drow = dst + static_cast<std::size_t>(ih) * width;
          const double* srow = src + oh * out_w;
          const auto [lo, hi] = valid_range(kw, stride, pad, width, out_w);
          for (std::size_t ow = lo; ow < hi; ++ow)
            drow[ow * stride + kw - pad] += srow[ow];
        }
      }
    }
  }
}

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels,
               std::size_t kernel, std::size_t stride, std::size_t pad,
               bool bias)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      pad_(pad),
      has_bias_(bias) {
  if (in_channels == 0 || out_channels == 0 || kernel == 0 || stride == 0)
    throw InvalidArgument("conv: channels, kernel and stride must be >= 1");
  weight_ = Param("weight", Tensor({out_channels, in_channels, kernel, kernel}));
  if (has_bias_) bias_ = Param("bias", Tensor({out_channels}));
}

std::string Conv2d::config() const {
  std::ostringstream os;
  os << in_channels_ << "->" << out_channels_ << " k=" << kernel_
     << " s=" << stride_ << " p=" << pad_ << " bias=" << (has_bias_ ? 1 : 0);
  return os.str();
}

std::size_t Conv2d::out_size(std::size_t in) const {
  const long span = static_cast<long>(in + 2 * pad_) - static_cast<long>(kernel_);
  if (span < 0)
    throw InvalidArgument("conv: kernel " + std::to_string(kernel_) +
                          " larger than padded input " +
                          std::to_string(in + 2 * pad_));
  return static_cast<std::size_t>(span) / stride_ + 1;
}

Shape Conv2d::output_shape(const Shape& input) const {
  if (input.size() != 4 || input[1] != in_channels_)
    throw InvalidArgument("conv: expected [N, " +
                          std::to_string(in_channels_) + ", H, W], got " +
                          shape_str(input));
  return {input[0], out_channels_, out_size(input[2]), out_size(input[3])};
}

Tensor Conv2d::forward(const Tensor& x, Phase) {
  const Shape os = output_shape(x.shape());
  const std::size_t batch = os[0], oh = os[2], ow = os[3];
  const std::size_t h = x.dim(2), w = x.dim(3);
  const std::size_t kdim = in_channels_ * kernel_ * kernel_;
  const std::size_t plane = oh * ow;
  Tensor out(os);
  std::vector<double> col(kdim * plane);
  for (std::size_t n = 0; n < batch; ++n) {
    const double* img = x.data() + n * in_channels_ * h * w;
    double* dst = out.data() + n * out_channels_ * plane;
    if (kernel_ == 1 && stride_ == 1 && pad_ == 0) {
      gemm(out_channels_, plane, kdim, weight_.value.data(), img, dst);
    } else {
      im2col(img, in_channels_, h, w, kernel_, stride_, pad_, oh, ow,
             col.data());
      gemm(out_channels_, plane, kdim, weight_.value.data(), col.data(), dst);
    }
    if (has_bias_)
      for (std::size_t c = 0; c < out_channels_; ++c)
        for (std::size_t p = 0; p < plane; ++p)
          dst[c * plane + p] += bias_.value[c];
  }
  input_ = x;
  has_input_ = true;
  return out;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  if (!has_input_) throw StateError("conv: backward before forward");
  const Shape os = output_shape(input_.shape());
  if (grad_out.shape() != os)
    throw InvalidArgument("conv backward: expected grad " + shape_str(os) +
                          ", got " + shape_str(grad_out.shape()));
  const std::size_t batch = os[0], oh = os[2], ow = os[3];
  const std::size_t h = input_.dim(2), w = input_.dim(3);
  const std::size_t kdim = in_channels_ * kernel_ * kernel_;
  const std::size_t plane = oh * ow;
  const bool pointwise = kernel_ == 1 && stride_ == 1 && pad_ == 0;
  Tensor grad_in(input_.shape());
  std::vector<double> col(kdim * plane);
  std::vector<double> gcol(kdim * plane);
  std::vector<double> gw_t(kdim * out_channels_);
  double* gw = weight_.grad.data();
  for (std::size_t n = 0; n < batch; ++n) {
    const double* img = input_.data() + n * in_channels_ * h * w;
    const double* go = grad_out.data() + n * out_channels_ * plane;
    double* gi = grad_in.data() + n * in_channels_ * h * w;
    const double* cols = img;
    if (!pointwise) {
      im2col(img, in_channels_, h, w, kernel_, stride_, pad_, oh, ow,
             col.data());
      cols = col.data();
    }
    // Transposed product keeps the long k-dimension on the tile rows.
    gemm_bt(kdim, out_channels_, plane, cols, go, gw_t.data());
    for (std::size_t o = 0; o < out_channels_; ++o)
      for (std::size_t q = 0; q < kdim; ++q)
        gw[o * kdim + q] += gw_t[q * out_channels_ + o];
    if (pointwise) {
      gemm_at(kdim, plane, out_channels_, weight_.value.data(), go, gi);
    } else {
      gemm_at(kdim, plane, out_channels_, weight_.value.data(), go,
              gcol.data());
      col2im(gcol.data(), in_channels_, h, w, kernel_, stride_, pad_, oh, ow,
             gi);
    }
    if (has_bias_)
      for (std::size_t c = 0; c < out_channels_; ++c) {
        double s = 0.0;
        for (std::size_t p = 0; p < plane; ++p) s += go[c * plane + p];
        bias_.grad[c] += s;
      }
  }
  return grad_in;
}

std::vector<Param*> Conv2d::params() {
  if (has_bias_) return {&weight_, &bias_};
  return {&weight_};
}

}  // namespace mpelu
