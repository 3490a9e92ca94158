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

#include "mpelu/errors.hpp"
#include "mpelu/layers.hpp"

namespace mpelu {

SoftmaxLossResult softmax_loss(const Tensor& logits,
                               std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size())
    throw InvalidArgument("softmax_loss: expected [N, K] logits with N = " +
                          std::to_string(labels.size()) + ", got " +
                          shape_str(logits.shape()));
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  SoftmaxLossResult r{0.0, Tensor(logits.shape()), Tensor(logits.shape()), 0};
  for (std::size_t n = 0; n < batch; ++n) {
    const int label = labels[n];
    if (label < 0 || static_cast<std::size_t>(label) >= classes)
      throw InvalidArgument("softmax_loss: label " + std::to_string(label) +
                            " outside [0, " + std::to_string(classes) + ")");
    const double* z = logits.data() + n * classes;
    double* p = r.probs.data() + n * classes;
    std::size_t arg = 0;
    for (std::size_t k = 1; k < classes; ++k)
      if (z[k] > z[arg]) arg = k;
    double sum = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
      p[k] = std::exp(z[k] - z[arg]);
      sum += p[k];
    }
    for (std::size_t k = 0; k < classes; ++k) p[k] /= sum;
    r.loss += -(z[label] - z[arg] - std::log(sum));
    if (arg != static_cast<std::size_t>(label)) ++r.errors;
    double* g = r.grad.data() + n * classes;
    for (std::size_t k = 0; k < classes; ++k)
      g[k] = (p[k] - (k == static_cast<std::size_t>(label) ? 1.0 : 0.0)) /
             static_cast<double>(batch);
  }
  r.loss /= static_cast<double>(batch);
  if (!std::isfinite(r.loss))
    throw OverflowError("softmax_loss: non-finite loss");
  return r;
}

}  // namespace mpelu
