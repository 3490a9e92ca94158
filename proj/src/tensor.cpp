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

#include "mpelu/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "mpelu/errors.hpp"
#include "mpelu/gemm.hpp"

namespace mpelu {

static_assert(std::endian::native == std::endian::little,
              "tensor dumps assume a little-endian host");

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_numel(shape_) != data_.size())
    throw InvalidArgument("tensor: shape " + shape_str(shape_) + " holds " +
                          std::to_string(shape_numel(shape_)) +
                          " elements, got " + std::to_string(data_.size()));
}

Tensor Tensor::from(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

double& Tensor::at(std::size_t n, std::size_t c, std::size_t h,
                   std::size_t w) {
  return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
}

double Tensor::at(std::size_t n, std::size_t c, std::size_t h,
                  std::size_t w) const {
  return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != numel())
    throw InvalidArgument("reshape: cannot view " + shape_str(shape_) +
                          " as " + shape_str(shape));
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double value) {
  for (auto& v : data_) v = value;
}

// ---------------------------------------------------------------------------

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("uniform_int: empty range");
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

Rng Rng::split() { return Rng(engine_()); }

std::string Rng::serialize() const {
  std::ostringstream os;
  os.precision(17);
  os << seed_ << ' ' << has_spare_ << ' ' << std::hexfloat << spare_
     << std::defaultfloat << ' ' << engine_;
  return os.str();
}

Rng Rng::deserialize(const std::string& state) {
  std::istringstream is(state);
  Rng rng;
  std::string spare;
  is >> rng.seed_ >> rng.has_spare_ >> spare >> rng.engine_;
  if (!is) throw FormatError("rng: malformed state string");
  rng.spare_ = std::strtod(spare.c_str(), nullptr);
  return rng;
}

// ---------------------------------------------------------------------------

Tensor& gaussian_fill(Tensor& t, double mean, double std, Rng& rng) {
  if (!(std >= 0.0))
    throw InvalidArgument("gaussian_fill: std must be >= 0, got " +
                          std::to_string(std));
  for (auto& v : t.values()) v = mean + std * rng.normal();
  return t;
}

Tensor& uniform_fill(Tensor& t, double lo, double hi, Rng& rng) {
  if (!(hi >= lo)) throw InvalidArgument("uniform_fill: hi < lo");
  for (auto& v : t.values()) v = lo + (hi - lo) * rng.uniform();
  return t;
}

Moments moments(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("moments: empty tensor");
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, sq / n};
}

Moments moments(const Tensor& t) { return moments(t.values()); }

bool all_finite(const Tensor& t) {
  for (double v : t.values())
    if (!std::isfinite(v)) return false;
  return true;
}

// ---------------------------------------------------------------------------

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw InvalidArgument(std::string(op) + ": shape mismatch " +
                          shape_str(a.shape()) + " vs " +
                          shape_str(b.shape()));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw InvalidArgument("matmul: incompatible shapes " +
                          shape_str(a.shape()) + " x " +
                          shape_str(b.shape()));
  Tensor c({a.dim(0), b.dim(1)});
  gemm(a.dim(0), b.dim(1), a.dim(1), a.data(), b.data(), c.data());
  return c;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor c = a;
  for (std::size_t i = 0; i < c.numel(); ++i) c[i] += b[i];
  return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor c = a;
  for (std::size_t i = 0; i < c.numel(); ++i) c[i] -= b[i];
  return c;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Tensor c = a;
  for (std::size_t i = 0; i < c.numel(); ++i) c[i] *= b[i];
  return c;
}

Tensor scale(const Tensor& a, double s) {
  Tensor c = a;
  for (auto& v : c.values()) v *= s;
  return c;
}

Tensor map(const Tensor& a, const std::function<double(double)>& fn) {
  Tensor c = a;
  for (auto& v : c.values()) v = fn(v);
  return c;
}

void axpy(double s, const Tensor& x, Tensor& y) {
  require_same_shape(x, y, "axpy");
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] += s * x[i];
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw InvalidArgument("transpose: rank must be 2");
  Tensor t({a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j)
      t[j * a.dim(0) + i] = a[i * a.dim(1) + j];
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---------------------------------------------------------------------------

void write_tensor(std::ostream& out, const Tensor& t) {
  const auto rank = static_cast<std::uint32_t>(t.rank());
  out.write(reinterpret_cast<const char*>(&rank), sizeof(rank));
  for (auto d : t.shape()) {
    const auto d32 = static_cast<std::uint32_t>(d);
    out.write(reinterpret_cast<const char*>(&d32), sizeof(d32));
  }
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
  if (!out) throw IoError("write_tensor: stream write failed");
}

Tensor read_tensor(std::istream& in) {
  std::uint32_t rank = 0;
  if (!in.read(reinterpret_cast<char*>(&rank), sizeof(rank)))
    throw FormatError("read_tensor: truncated header");
  if (rank > 8) throw FormatError("read_tensor: implausible rank " +
                                  std::to_string(rank));
  Shape shape(rank);
  for (auto& d : shape) {
    std::uint32_t d32 = 0;
    if (!in.read(reinterpret_cast<char*>(&d32), sizeof(d32)))
      throw FormatError("read_tensor: truncated dims");
    d = d32;
  }
  Tensor t(shape);
  if (!in.read(reinterpret_cast<char*>(t.data()),
               static_cast<std::streamsize>(t.numel() * sizeof(double))))
    throw FormatError("read_tensor: truncated payload for shape " +
                      shape_str(shape));
  return t;
}

void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_tensor(out, t);
}

Tensor load_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_tensor(in);
}

}  // namespace mpelu
