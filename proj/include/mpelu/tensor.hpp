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
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mpelu {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array of doubles. Four-dimensional tensors are NCHW.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor from(std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w);
  double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const;

  /// Same data, new shape; element count must match.
  Tensor reshaped(Shape shape) const;
  void fill(double value);

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Seedable generator: 64-bit Mersenne Twister (std::mt19937_64, whose output
/// sequence is fixed by the C++ standard). Uniforms use the top 53 bits;
/// normals use the Marsaglia polar method with a cached spare.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, n), unbiased.
  std::uint64_t uniform_int(std::uint64_t n);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  /// Child generator whose seed is drawn from this stream.
  Rng split();

  std::string serialize() const;
  static Rng deserialize(const std::string& state);

 private:
  std::uint64_t seed_ = 0;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Fills and statistics.

/// In-place fill with i.i.d. N(mean, std^2) samples; returns the tensor.
Tensor& gaussian_fill(Tensor& t, double mean, double std, Rng& rng);
Tensor& uniform_fill(Tensor& t, double lo, double hi, Rng& rng);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and population variance, two sequential passes in index order.
Moments moments(const Tensor& t);
Moments moments(std::span<const double> values);

bool all_finite(const Tensor& t);

// Elementwise / linear algebra. All operations are sequential and
// deterministic; matmul accumulates each output over k in increasing order.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor map(const Tensor& a, const std::function<double(double)>& fn);
/// y += s * x
void axpy(double s, const Tensor& x, Tensor& y);
Tensor transpose(const Tensor& a);
double dot(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

// Binary dump: u32 rank, u32 dims, then f64 payload, all little-endian.

void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);
void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

}  // namespace mpelu
