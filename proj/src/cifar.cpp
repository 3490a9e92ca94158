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
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "mpelu/data.hpp"
#include "mpelu/errors.hpp"

namespace mpelu {

namespace {

constexpr std::size_t kSide = 32;
constexpr std::size_t kPixels = 3 * kSide * kSide;

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path);
  return bytes;
}

Dataset concat(std::vector<Dataset>& parts, const std::string& source) {
  std::size_t n = 0;
  for (const auto& p : parts) n += p.size();
  Dataset out;
  out.source = source;
  out.images = Tensor({n, 3, kSide, kSide});
  out.labels.reserve(n);
  double* dst = out.images.data();
  for (const auto& p : parts) {
    std::copy(p.images.data(), p.images.data() + p.images.numel(), dst);
    dst += p.images.numel();
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
  }
  return out;
}

}  // namespace

void Dataset::validate() const {
  if (images.rank() != 4)
    throw InvalidArgument("dataset: images must be [N, C, H, W], got " +
                          shape_str(images.shape()));
  if (images.dim(0) != labels.size())
    throw InvalidArgument("dataset: " + std::to_string(images.dim(0)) +
                          " images but " + std::to_string(labels.size()) +
                          " labels");
  for (int l : labels)
    if (l < 0 || static_cast<std::size_t>(l) >= classes)
      throw InvalidArgument("dataset: label " + std::to_string(l) +
                            " outside [0, " + std::to_string(classes) + ")");
}

Dataset Dataset::head(std::size_t count) const {
  count = std::min(count, size());
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = i;
  Dataset out;
  out.images = gather(images, idx);
  out.labels = gather(labels, idx);
  out.classes = classes;
  out.source = source;
  out.preprocessing = preprocessing;
  return out;
}

Tensor gather(const Tensor& images, std::span<const std::size_t> idx) {
  Shape shape = images.shape();
  const std::size_t per = images.numel() / shape[0];
  shape[0] = idx.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= images.dim(0))
      throw InvalidArgument("gather: index out of range");
    std::copy_n(images.data() + idx[i] * per, per, out.data() + i * per);
  }
  return out;
}

std::vector<int> gather(const std::vector<int>& labels,
                        std::span<const std::size_t> idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = labels.at(idx[i]);
  return out;
}

Dataset read_cifar10_file(const std::string& path, bool strict) {
  const auto bytes = read_file(path);
  const std::size_t expected = kCifarRecordsPerFile * kCifarRecordBytes;
  if (strict && bytes.size() != expected)
    throw FormatError("cifar: " + path + " has " + std::to_string(bytes.size()) +
                      " bytes, expected " + std::to_string(expected));
  if (bytes.empty() || bytes.size() % kCifarRecordBytes != 0)
    throw FormatError("cifar: " + path + " has " + std::to_string(bytes.size()) +
                      " bytes, expected a positive multiple of " +
                      std::to_string(kCifarRecordBytes));
  const std::size_t n = bytes.size() / kCifarRecordBytes;
  Dataset d;
  d.source = path;
  d.images = Tensor({n, 3, kSide, kSide});
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* rec = bytes.data() + i * kCifarRecordBytes;
    if (rec[0] > 9)
      throw FormatError("cifar: record " + std::to_string(i) + " of " + path +
                        " has label byte " + std::to_string(rec[0]));
    d.labels[i] = rec[0];
    double* img = d.images.data() + i * kPixels;
    for (std::size_t p = 0; p < kPixels; ++p) img[p] = rec[1 + p] / 255.0;
  }
  return d;
}

void write_cifar10_file(const std::string& path, const Dataset& data) {
  data.validate();
  if (data.images.numel() / std::max<std::size_t>(data.size(), 1) != kPixels)
    throw InvalidArgument("cifar: images must be [N, 3, 32, 32]");
  std::vector<unsigned char> bytes(data.size() * kCifarRecordBytes);
  for (std::size_t i = 0; i < data.size(); ++i) {
    unsigned char* rec = bytes.data() + i * kCifarRecordBytes;
    if (data.labels[i] > 9)
      throw InvalidArgument("cifar: labels must be in [0, 9]");
    rec[0] = static_cast<unsigned char>(data.labels[i]);
    const double* img = data.images.data() + i * kPixels;
    for (std::size_t p = 0; p < kPixels; ++p)
      rec[1 + p] = static_cast<unsigned char>(
          std::lround(std::clamp(img[p], 0.0, 1.0) * 255.0));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

CifarSplits load_cifar10(const std::string& dir, bool strict) {
  namespace fs = std::filesystem;
  std::vector<Dataset> train;
  for (int b = 1; b <= 5; ++b) {
    const fs::path p = fs::path(dir) / ("data_batch_" + std::to_string(b) + ".bin");
    if (!fs::exists(p)) throw IoError("cifar: missing " + p.string());
    train.push_back(read_cifar10_file(p.string(), strict));
  }
  const fs::path tp = fs::path(dir) / "test_batch.bin";
  if (!fs::exists(tp)) throw IoError("cifar: missing " + tp.string());
  std::vector<Dataset> test;
  test.push_back(read_cifar10_file(tp.string(), strict));
  return {concat(train, dir + " (train)"), concat(test, dir + " (test)")};
}

Dataset make_synthetic_cifar(std::size_t count, std::uint64_t seed,
                             std::size_t classes) {
  if (classes == 0 || classes > 10)
    throw InvalidArgument("synthetic cifar: classes must be in [1, 10]");
  Rng rng(seed);
  constexpr int kWaves = 4;
  struct Wave {
    double fy, fx, phase, amp[3];
  };
  std::vector<std::array<Wave, kWaves>> templates(classes);
  for (auto& t : templates)
    for (auto& w : t) {
      w.fy = rng.uniform() * 3.0;
      w.fx = rng.uniform() * 3.0;
      w.phase = rng.uniform() * 2.0 * std::numbers::pi;
      for (double& a : w.amp) a = rng.uniform() * 2.0 - 1.0;
    }

  Dataset d;
  d.source = "synthetic(seed=" + std::to_string(seed) + ")";
  d.classes = 10;
  d.images = Tensor({count, 3, kSide, kSide});
  d.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t label = rng.uniform_int(classes);
    d.labels[i] = static_cast<int>(label);
    const double dy = rng.uniform() * 6.0 - 3.0;
    const double dx = rng.uniform() * 6.0 - 3.0;
    const double gain = 0.7 + 0.6 * rng.uniform();
    const double shift = 0.2 * rng.uniform() - 0.1;
    double* img = d.images.data() + i * kPixels;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < kSide; ++y)
        for (std::size_t x = 0; x < kSide; ++x) {
          double v = 0.0;
          for (const Wave& w : templates[label])
            v += w.amp[c] *
                 std::sin(2.0 * std::numbers::pi *
                              (w.fy * (static_cast<double>(y) + dy) +
                               w.fx * (static_cast<double>(x) + dx)) /
                              kSide +
                          w.phase);
          v = 0.5 + 0.12 * gain * v + shift + 0.08 * rng.normal();
          img[(c * kSide + y) * kSide + x] =
              std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
        }
  }
  return d;
}

void write_synthetic_cifar(const std::string& dir, std::size_t train_count,
                           std::size_t test_count, std::uint64_t seed) {
  namespace fs = std::filesystem;
  if (test_count == 0)
    throw InvalidArgument("synthetic cifar: need at least 1 test image");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  // Train and test draw from one stream so they share class templates.
  const Dataset all = make_synthetic_cifar(train_count + test_count, seed);
  const std::size_t per = (train_count + 4) / 5;
  for (std::size_t b = 0; b < 5; ++b) {
    const std::size_t lo = std::min(train_count, b * per);
    const std::size_t hi = std::min(train_count, lo + per);
    if (hi == lo)
      throw InvalidArgument("synthetic cifar: need at least 5 train images");
    std::vector<std::size_t> idx;
    for (std::size_t i = lo; i < hi; ++i) idx.push_back(i);
    Dataset part;
    part.images = gather(all.images, idx);
    part.labels = gather(all.labels, idx);
    write_cifar10_file(
        (fs::path(dir) / ("data_batch_" + std::to_string(b + 1) + ".bin"))
            .string(),
        part);
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = train_count; i < train_count + test_count; ++i)
    idx.push_back(i);
  Dataset test;
  test.images = gather(all.images, idx);
  test.labels = gather(all.labels, idx);
  write_cifar10_file((fs::path(dir) / "test_batch.bin").string(), test);
}

}  // namespace mpelu
