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

#include <cmath>
#include <sstream>

#include "mpelu/errors.hpp"
#include "mpelu/layers.hpp"

namespace mpelu {

BatchNorm2d::BatchNorm2d(std::size_t channels, double momentum,
                         double epsilon)
    : channels_(channels), momentum_(momentum), epsilon_(epsilon) {
  if (channels == 0) throw InvalidArgument("bn: channels must be >= 1");
  if (!(epsilon > 0.0)) throw InvalidArgument("bn: epsilon must be > 0");
  if (!(momentum >= 0.0 && momentum <= 1.0))
    throw InvalidArgument("bn: momentum must lie in [0, 1]");
  gamma_ = Param("gamma", Tensor({channels}, 1.0));
  shift_ = Param("shift", Tensor({channels}, 0.0));
  running_mean_ = Tensor({channels}, 0.0);
  running_var_ = Tensor({channels}, 1.0);
}

std::string BatchNorm2d::config() const {
  std::ostringstream os;
  os << channels_ << " momentum=" << momentum_ << " eps=" << epsilon_;
  return os.str();
}

void BatchNorm2d::reset_parameters() {
  gamma_.value.fill(1.0);
  shift_.value.fill(0.0);
  running_mean_.fill(0.0);
  running_var_.fill(1.0);
}

Tensor BatchNorm2d::forward(const Tensor& x, Phase phase) {
  if (x.rank() < 2 || x.dim(1) != channels_)
    throw InvalidArgument("bn: expected [N, " + std::to_string(channels_) +
                          ", ...], got " + shape_str(x.shape()));
  const std::size_t batch = x.dim(0);
  std::size_t inner = 1;
  for (std::size_t i = 2; i < x.rank(); ++i) inner *= x.dim(i);
  const std::size_t count = batch * inner;
  if (phase == Phase::Train && batch < 2)
    throw InvalidArgument("bn: train mode needs a batch of at least 2, got " +
                          std::to_string(batch));

  Tensor out(x.shape());
  x_hat_ = Tensor(x.shape());
  inv_std_.assign(channels_, 0.0);
  const double* xp = x.data();
  double* op = out.data();
  double* hp = x_hat_.data();
  for (std::size_t c = 0; c < channels_; ++c) {
    double mean, var;
    if (phase == Phase::Train) {
      double sum = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const double* src = xp + (n * channels_ + c) * inner;
        for (std::size_t s = 0; s < inner; ++s) sum += src[s];
      }
      mean = sum / static_cast<double>(count);
      double sq = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const double* src = xp + (n * channels_ + c) * inner;
        for (std::size_t s = 0; s < inner; ++s) {
          const double d = src[s] - mean;
          sq += d * d;
        }
      }
      var = sq / static_cast<double>(count);
      const double unbiased =
          count > 1 ? sq / static_cast<double>(count - 1) : var;
      running_mean_[c] = momentum_ * running_mean_[c] + (1.0 - momentum_) * mean;
      running_var_[c] =
          momentum_ * running_var_[c] + (1.0 - momentum_) * unbiased;
    } else {
      mean = running_mean_[c];
      var = running_var_[c];
    }
    const double inv = 1.0 / std::sqrt(var + epsilon_);
    inv_std_[c] = inv;
    const double g = gamma_.value[c], b = shift_.value[c];
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t off = (n * channels_ + c) * inner;
      const double* src = xp + off;
      double* h = hp + off;
      double* o = op + off;
      for (std::size_t s = 0; s < inner; ++s) {
        const double xh = (src[s] - mean) * inv;
        h[s] = xh;
        o[s] = g * xh + b;
      }
    }
  }
  cached_phase_ = phase;
  has_cache_ = true;
  return out;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
  if (!has_cache_) throw StateError("bn: backward before forward");
  if (grad_out.shape() != x_hat_.shape())
    throw InvalidArgument("bn backward: shape mismatch " +
                          shape_str(grad_out.shape()) + " vs " +
                          shape_str(x_hat_.shape()));
  const std::size_t batch = grad_out.dim(0);
  std::size_t inner = 1;
  for (std::size_t i = 2; i < grad_out.rank(); ++i) inner *= grad_out.dim(i);
  const double count = static_cast<double>(batch * inner);
  Tensor grad_in(grad_out.shape());
  const double* gp = grad_out.data();
  const double* hp = x_hat_.data();
  double* ip = grad_in.data();
  const bool train = cached_phase_ == Phase::Train;
  for (std::size_t c = 0; c < channels_; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t off = (n * channels_ + c) * inner;
      for (std::size_t s = 0; s < inner; ++s) {
        sum_g += gp[off + s];
        sum_gx += gp[off + s] * hp[off + s];
      }
    }
    gamma_.grad[c] += sum_gx;
    shift_.grad[c] += sum_g;
    const double scale_c = gamma_.value[c] * inv_std_[c];
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t off = (n * channels_ + c) * inner;
      for (std::size_t s = 0; s < inner; ++s) {
        const std::size_t i = off + s;
        ip[i] = train ? scale_c / count * (count * gp[i] - sum_g - hp[i] * sum_gx)
                      : scale_c * gp[i];
      }
    }
  }
  return grad_in;
}

std::vector<Param*> BatchNorm2d::params() { return {&gamma_, &shift_}; }

std::vector<std::pair<std::string, Tensor*>> BatchNorm2d::buffers() {
  return {{"running_mean", &running_mean_}, {"running_var", &running_var_}};
}

}  // namespace mpelu
