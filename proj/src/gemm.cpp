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

#include "mpelu/gemm.hpp"

#include <cstring>
#include <vector>

namespace mpelu {

namespace {

typedef double v8d __attribute__((vector_size(64)));

inline v8d load8(const double* p) {
  v8d v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

inline void store8(double* p, v8d v, bool accumulate) {
  if (accumulate) v += load8(p);
  std::memcpy(p, &v, sizeof(v));
}

constexpr std::size_t kRows = 6;
constexpr std::size_t kCols = 16;

// Rows [i0, i0 + R) against a packed k x 8V panel of B.
template <std::size_t R, std::size_t V>
inline void tile(std::size_t k, const double* a, std::size_t ars,
                 std::size_t aks, const double* panel, double* c,
                 std::size_t ldc, bool accumulate) {
  v8d acc[R][V] = {};
  for (std::size_t kk = 0; kk < k; ++kk) {
    v8d bv[V];
    for (std::size_t v = 0; v < V; ++v) bv[v] = load8(panel + kk * 8 * V + 8 * v);
    for (std::size_t r = 0; r < R; ++r) {
      const double x = a[r * ars + kk * aks];
      for (std::size_t v = 0; v < V; ++v) acc[r][v] += x * bv[v];
    }
  }
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t v = 0; v < V; ++v)
      store8(c + r * ldc + 8 * v, acc[r][v], accumulate);
}

template <std::size_t V>
void strip(std::size_t m, std::size_t k, const double* a, std::size_t ars,
           std::size_t aks, const double* panel, double* c, std::size_t ldc,
           bool accumulate) {
  std::size_t i0 = 0;
  for (; i0 + kRows <= m; i0 += kRows)
    tile<kRows, V>(k, a + i0 * ars, ars, aks, panel, c + i0 * ldc, ldc,
                   accumulate);
  a += i0 * ars;
  c += i0 * ldc;
  switch (m - i0) {
    case 5: tile<5, V>(k, a, ars, aks, panel, c, ldc, accumulate); break;
    case 4: tile<4, V>(k, a, ars, aks, panel, c, ldc, accumulate); break;
    case 3: tile<3, V>(k, a, ars, aks, panel, c, ldc, accumulate); break;
    case 2: tile<2, V>(k, a, ars, aks, panel, c, ldc, accumulate); break;
    case 1: tile<1, V>(k, a, ars, aks, panel, c, ldc, accumulate); break;
    default: break;
  }
}

// Copies columns [j0, j0 + width) of B(kk, j) = b[kk * bks + j * bjs].
void pack(std::size_t k, const double* b, std::size_t bks, std::size_t bjs,
          std::size_t j0, std::size_t width, double* panel) {
  if (bjs == 1) {
    for (std::size_t kk = 0; kk < k; ++kk)
      std::memcpy(panel + kk * width, b + kk * bks + j0, sizeof(double) * width);
    return;
  }
  for (std::size_t j = 0; j < width; ++j) {
    const double* src = b + (j0 + j) * bjs;
    for (std::size_t kk = 0; kk < k; ++kk) panel[kk * width + j] = src[kk * bks];
  }
}

// A(i, kk) = a[i * ars + kk * aks]; B(kk, j) = b[kk * bks + j * bjs].
// Lanes hold distinct output columns, so vectorising never reorders the k sum.
void kernel(std::size_t m, std::size_t n, std::size_t k, const double* a,
            std::size_t ars, std::size_t aks, const double* b, std::size_t bks,
            std::size_t bjs, double* c, bool accumulate) {
  std::vector<double> panel(k * kCols);
  std::size_t j0 = 0;
  for (; j0 + kCols <= n; j0 += kCols) {
    pack(k, b, bks, bjs, j0, kCols, panel.data());
    strip<2>(m, k, a, ars, aks, panel.data(), c + j0, n, accumulate);
  }
  if (j0 + 8 <= n) {
    pack(k, b, bks, bjs, j0, 8, panel.data());
    strip<1>(m, k, a, ars, aks, panel.data(), c + j0, n, accumulate);
    j0 += 8;
  }
  if (j0 == n) return;
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * ars;
    for (std::size_t j = j0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) s += ai[kk * aks] * b[kk * bks + j * bjs];
      double& out = c[i * n + j];
      out = accumulate ? out + s : s;
    }
  }
}

}  // namespace

void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a,
          const double* b, double* c, bool accumulate) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate) std::memset(c, 0, sizeof(double) * m * n);
    return;
  }
  kernel(m, n, k, a, k, 1, b, n, 1, c, accumulate);
}

void gemm_at(std::size_t m, std::size_t n, std::size_t k, const double* a_t,
             const double* b, double* c, bool accumulate) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate) std::memset(c, 0, sizeof(double) * m * n);
    return;
  }
  kernel(m, n, k, a_t, 1, m, b, n, 1, c, accumulate);
}

void gemm_bt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b_t, double* c, bool accumulate) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate) std::memset(c, 0, sizeof(double) * m * n);
    return;
  }
  kernel(m, n, k, a, k, 1, b_t, 1, k, c, accumulate);
}

}  // namespace mpelu
