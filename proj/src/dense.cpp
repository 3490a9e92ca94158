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
#include "mpelu/gemm.hpp"
#include "mpelu/layers.hpp"

namespace mpelu {

Dense::Dense(std::size_t in_features, std::size_t out_features, bool bias)
    : in_(in_features), out_(out_features), has_bias_(bias) {
  if (in_ == 0 || out_ == 0)
    throw InvalidArgument("dense: feature counts must be >= 1");
  weight_ = Param("weight", Tensor({out_, in_}));
  if (has_bias_) bias_ = Param("bias", Tensor({out_}));
}

std::string Dense::config() const {
  std::ostringstream os;
  os << in_ << "->" << out_ << " bias=" << (has_bias_ ? 1 : 0);
  return os.str();
}

Shape Dense::output_shape(const Shape& input) const {
  if (input.empty() || shape_numel(input) != input[0] * in_)
    throw InvalidArgument("dense: expected [N, " + std::to_string(in_) +
                          "] (after flattening), got " + shape_str(input));
  return {input[0], out_};
}

Tensor Dense::forward(const Tensor& x, Phase) {
  const Shape os = output_shape(x.shape());
  const std::size_t batch = os[0];
  Tensor out(os);
  gemm_bt(batch, out_, in_, x.data(), weight_.value.data(), out.data());
  if (has_bias_)
    for (std::size_t n = 0; n < batch; ++n)
      for (std::size_t j = 0; j < out_; ++j) out[n * out_ + j] += bias_.value[j];
  input_ = x;
  has_input_ = true;
  return out;
}

Tensor Dense::backward(const Tensor& grad_out) {
  if (!has_input_) throw StateError("dense: backward before forward");
  const std::size_t batch = input_.dim(0);
  if (grad_out.shape() != Shape{batch, out_})
    throw InvalidArgument("dense backward: expected grad [" +
                          std::to_string(batch) + "," + std::to_string(out_) +
                          "], got " + shape_str(grad_out.shape()));
  // dW (out x in) += grad_out^T (out x N) * x (N x in)
  gemm_at(out_, in_, batch, grad_out.data(), input_.data(),
          weight_.grad.data(), true);
  if (has_bias_)
    for (std::size_t j = 0; j < out_; ++j) {
      double s = 0.0;
      for (std::size_t n = 0; n < batch; ++n) s += grad_out[n * out_ + j];
      bias_.grad[j] += s;
    }
  Tensor grad_in(input_.shape());
  gemm(batch, in_, out_, grad_out.data(), weight_.value.data(),
       grad_in.data());
  return grad_in;
}

std::vector<Param*> Dense::params() {
  if (has_bias_) return {&weight_, &bias_};
  return {&weight_};
}

}  // namespace mpelu
