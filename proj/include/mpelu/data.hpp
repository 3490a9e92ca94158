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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mpelu/tensor.hpp"

namespace mpelu {

struct Dataset {
  Tensor images;            // [N, C, H, W]
  std::vector<int> labels;  // N entries in [0, classes)
  std::size_t classes = 10;
  std::string source;
  std::vector<std::string> preprocessing;

  std::size_t size() const { return labels.size(); }
  /// Throws InvalidArgument when shapes or labels are inconsistent.
  void validate() const;
  /// Copy of the first `count` samples.
  Dataset head(std::size_t count) const;
};

/// Images [idx.size(), C, H, W] gathered from `images` in the given order.
Tensor gather(const Tensor& images, std::span<const std::size_t> idx);
std::vector<int> gather(const std::vector<int>& labels,
                        std::span<const std::size_t> idx);

// CIFAR-10 binary version: records of 1 label byte + 3072 pixel bytes
// (R plane, G plane, B plane, each 32x32 row-major).

inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr std::size_t kCifarRecordsPerFile = 10000;

/// One batch file. Strict mode requires exactly 10000 records; otherwise any
/// whole number of records is accepted. Pixels are scaled to [0, 1].
Dataset read_cifar10_file(const std::string& path, bool strict = true);
/// Writes images (rounded to bytes after scaling by 255) and labels.
void write_cifar10_file(const std::string& path, const Dataset& data);

struct CifarSplits {
  Dataset train;  // data_batch_1.bin .. data_batch_5.bin
  Dataset test;   // test_batch.bin
};
CifarSplits load_cifar10(const std::string& dir, bool strict = true);

/// Class-conditional images: a fixed random low-frequency template per class
/// plus per-image noise, jitter and brightness changes. Pixels in [0, 1].
Dataset make_synthetic_cifar(std::size_t count, std::uint64_t seed,
                             std::size_t classes = 10);
/// Writes a CIFAR-format directory (5 train batch files + test_batch.bin)
/// holding `train_count` and `test_count` synthetic records.
void write_synthetic_cifar(const std::string& dir, std::size_t train_count,
                           std::size_t test_count, std::uint64_t seed);

// IDX (big-endian, magic 0x0000TTDD with type code TT and rank DD).

enum class IdxType : std::uint8_t {
  U8 = 0x08,
  I8 = 0x09,
  I16 = 0x0B,
  I32 = 0x0C,
  F32 = 0x0D,
  F64 = 0x0E,
};

struct IdxArray {
  IdxType type = IdxType::U8;
  Tensor data;  // shape from the header, values converted to double
};

IdxArray read_idx(const std::string& path);
void write_idx(const std::string& path, const IdxArray& array);
/// Image file of rank 3 ([N, H, W], single channel) or 4 ([N, C, H, W]) and
/// a rank-1 label file. U8 images are scaled to [0, 1].
Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path);

// Preprocessing.

/// Per image: subtract its mean, divide by max(its std, 1e-8).
Tensor gcn(const Tensor& images);

struct ChannelStandardizer {
  std::vector<double> mean;
  std::vector<double> std;
};
ChannelStandardizer fit_standardizer(const Tensor& images);
Tensor apply_standardizer(const ChannelStandardizer& s, const Tensor& images);

struct ZcaTransform {
  Tensor mean;   // [D]
  Tensor w;      // [D, D], symmetric
  double eps = 0.1;
};
/// W = U diag(1 / sqrt(lambda + eps)) U^T of the (biased) data covariance.
ZcaTransform zca_fit(const Tensor& images, double eps = 0.1);
Tensor zca_apply(const ZcaTransform& t, const Tensor& images);

enum class Preproc { None, Standardize, GcnZca };
const char* to_string(Preproc p);
Preproc parse_preproc(const std::string& text);

/// Fitted preprocessing pipeline; fit on train, apply to any split.
struct Preprocessor {
  Preproc kind = Preproc::None;
  double zca_eps = 0.1;
  ChannelStandardizer standardizer;
  ZcaTransform zca;

  void fit(const Tensor& train_images);
  Dataset apply(const Dataset& data) const;
  /// Named tensors for checkpointing.
  std::vector<std::pair<std::string, Tensor>> state() const;
  void load_state(const std::vector<std::pair<std::string, Tensor>>& state);
};

// Augmentation.

struct AugmentOptions {
  std::size_t pad = 4;
  std::size_t crop = 32;
  double flip_p = 0.5;
};

/// Zero-pads by `pad`, takes a random crop of `crop` x `crop`, flips
/// horizontally with probability flip_p. Draws per image: row offset,
/// column offset, flip.
Tensor augment(const Tensor& batch, Rng& rng, const AugmentOptions& options);

Tensor pad_images(const Tensor& batch, std::size_t pad);
Tensor crop_images(const Tensor& batch, std::size_t top, std::size_t left,
                   std::size_t size);
Tensor center_crop(const Tensor& batch, std::size_t size);
Tensor flip_horizontal(const Tensor& batch);

}  // namespace mpelu
