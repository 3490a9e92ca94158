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

namespace mpelu {

/// C (m x n) = A (m x k) * B (k x n), all row-major and densely packed.
///
/// Every output element is accumulated from zero over k in increasing order
/// with separate multiply and add roundings, so the result is bit-identical to
/// the textbook triple loop. With `accumulate` the finished dot product is
/// added to the existing C value instead of overwriting it.
void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a,
          const double* b, double* c, bool accumulate = false);

/// Same contract with A stored transposed (k x m).
void gemm_at(std::size_t m, std::size_t n, std::size_t k, const double* a_t,
             const double* b, double* c, bool accumulate = false);

/// Same contract with B stored transposed (n x k).
void gemm_bt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b_t, double* c, bool accumulate = false);

}  // namespace mpelu
