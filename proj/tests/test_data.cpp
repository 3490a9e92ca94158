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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mpelu/data.hpp"
#include "mpelu/errors.hpp"
#include "oracles.hpp"

using namespace mpelu;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mpelu_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("cifar format arithmetic") {
  CHECK(kCifarRecordBytes == 1 + 3 * 32 * 32);
  CHECK(5 * kCifarRecordsPerFile * kCifarRecordBytes == 153650000);
}

TEST_CASE("cifar round trip and strictness") {
  const fs::path dir = scratch("cifar");
  const Dataset d = make_synthetic_cifar(20, 1);
  d.validate();
  CHECK(d.labels[0] >= 0);
  CHECK(d.labels[0] <= 9);
  const std::string f = (dir / "batch.bin").string();
  write_cifar10_file(f, d);
  CHECK(fs::file_size(f) == 20 * kCifarRecordBytes);
  CHECK_THROWS_AS(read_cifar10_file(f, true), FormatError);
  const Dataset back = read_cifar10_file(f, false);
  CHECK(back.images == d.images);
  CHECK(back.labels == d.labels);

  fs::resize_file(f, 20 * kCifarRecordBytes - 7);
  CHECK_THROWS_WITH_AS(read_cifar10_file(f, false), doctest::Contains("3073"),
                       FormatError);
  CHECK_THROWS_AS(read_cifar10_file((dir / "absent.bin").string()), IoError);

  write_synthetic_cifar((dir / "set").string(), 50, 10, 2);
  const CifarSplits s = load_cifar10((dir / "set").string(), false);
  CHECK(s.train.size() == 50);
  CHECK(s.test.size() == 10);
  CHECK_THROWS_AS(load_cifar10((dir / "set").string(), true), FormatError);
  CHECK_THROWS_AS(load_cifar10(dir.string(), false), IoError);
}

TEST_CASE("synthetic data is deterministic") {
  const Dataset a = make_synthetic_cifar(100, 7), b = make_synthetic_cifar(100, 7);
  CHECK(a.images == b.images);
  CHECK(a.labels == b.labels);
  CHECK(make_synthetic_cifar(100, 8).images != a.images);
  std::vector<int> count(10, 0);
  for (int l : a.labels) ++count[static_cast<std::size_t>(l)];
  for (int c : count) CHECK(c > 0);
  for (double v : a.images.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("idx codec") {
  const fs::path dir = scratch("idx");
  IdxArray u8;
  u8.type = IdxType::U8;
  u8.data = Tensor({2, 3, 4});
  for (std::size_t i = 0; i < 24; ++i) u8.data[i] = static_cast<double>(i * 10);
  const std::string p = (dir / "u8.idx").string();
  write_idx(p, u8);
  std::ifstream raw(p, std::ios::binary);
  unsigned char head[4];
  raw.read(reinterpret_cast<char*>(head), 4);
  CHECK(head[2] == 0x08);
  CHECK(head[3] == 3);
  const IdxArray back = read_idx(p);
  CHECK(back.data == u8.data);
  CHECK(back.data.shape() == Shape{2, 3, 4});

  for (IdxType t : {IdxType::I8, IdxType::I16, IdxType::I32, IdxType::F32, IdxType::F64}) {
    IdxArray a;
    a.type = t;
    a.data = Tensor({5}, std::vector<double>{-3, 0, 1, 100, -100});
    write_idx(p, a);
    CHECK(read_idx(p).data == a.data);
  }

  write_bytes(dir / "bad.idx", {0, 0, 0x07, 1, 0, 0, 0, 1, 5});
  CHECK_THROWS_AS(read_idx((dir / "bad.idx").string()), FormatError);
  write_bytes(dir / "short.idx", {0, 0, 0x08, 1, 0, 0, 0, 4, 5});
  CHECK_THROWS_AS(read_idx((dir / "short.idx").string()), FormatError);

  IdxArray imgs;
  imgs.data = Tensor({3, 2, 2}, 1.0);
  IdxArray labels;
  labels.data = Tensor({3}, std::vector<double>{0, 1, 2});
  write_idx((dir / "i.idx").string(), imgs);
  write_idx((dir / "l.idx").string(), labels);
  const Dataset d = load_idx((dir / "i.idx").string(), (dir / "l.idx").string());
  CHECK(d.images.shape() == Shape{3, 1, 2, 2});
  CHECK(d.labels == std::vector<int>{0, 1, 2});
}

TEST_CASE("global contrast normalization") {
  CHECK(gcn(Tensor({1, 1, 2, 2}, 3.0)) == Tensor({1, 1, 2, 2}, 0.0));
  const Tensor two = gcn(Tensor({1, 1, 1, 2}, {0.0, 2.0}));
  CHECK(two[0] == -1.0);
  CHECK(two[1] == 1.0);
  const Tensor g = gcn(oracle::random({6, 3, 4, 4}, 3, 5.0));
  for (std::size_t n = 0; n < 6; ++n) {
    const Moments m = moments(std::span<const double>(g.data() + n * 48, 48));
    CHECK(std::abs(m.mean) < 1e-10);
    CHECK(std::abs(std::sqrt(m.variance) - 1.0) < 1e-8);
  }
}

TEST_CASE("zca whitening") {
  const std::size_t dim = 12;
  const Tensor white = oracle::random({10 * dim, 1, 3, 4}, 4);
  const ZcaTransform t = zca_fit(white, 0.1);
  double diag = 0.0, off = 0.0;
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      CHECK(t.w[i * dim + j] == doctest::Approx(t.w[j * dim + i]).epsilon(1e-12));
      if (i == j) diag += t.w[i * dim + j];
      else off += std::abs(t.w[i * dim + j]);
    }
  CHECK(std::abs(diag / dim - 1.0) < 0.05);
  CHECK(off / (dim * (dim - 1)) < 0.05);

  // Correlated data: the transformed fitting set is close to uncorrelated.
  Tensor mixed = oracle::random({10 * dim, 1, 3, 4}, 5, 2.0);
  for (std::size_t n = 0; n < 10 * dim; ++n)
    for (std::size_t i = dim - 1; i > 0; --i)
      mixed[n * dim + i] += 0.5 * mixed[n * dim + i - 1];
  const Tensor z = zca_apply(zca_fit(mixed, 0.1), mixed);
  const std::size_t n = 10 * dim;
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i + 1; j < dim; ++j) {
      double s = 0.0, mi = 0.0, mj = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        mi += z[k * dim + i];
        mj += z[k * dim + j];
      }
      mi /= n;
      mj /= n;
      for (std::size_t k = 0; k < n; ++k)
        s += (z[k * dim + i] - mi) * (z[k * dim + j] - mj);
      CHECK(std::abs(s / n) <= 0.05);
    }

  const ZcaTransform shrink = zca_fit(white, 1e6);
  CHECK(std::abs(shrink.w[0]) < 2e-3);
  CHECK_THROWS_AS(zca_fit(white, 0.0), InvalidArgument);
  CHECK_THROWS_AS(zca_apply(t, Tensor({2, 1, 2, 2})), InvalidArgument);
}

TEST_CASE("standardizer and preprocessor state") {
  const Tensor x = oracle::random({20, 3, 4, 4}, 6, 3.0);
  const auto s = fit_standardizer(x);
  const Tensor y = apply_standardizer(s, x);
  const auto s2 = fit_standardizer(y);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(std::abs(s2.mean[c]) < 1e-12);
    CHECK(s2.std[c] == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (Preproc kind : {Preproc::None, Preproc::Standardize, Preproc::GcnZca}) {
    Preprocessor p;
    p.kind = kind;
    p.fit(x);
    Preprocessor q;
    q.kind = kind;
    q.load_state(p.state());
    Dataset d;
    d.images = x;
    d.labels.assign(20, 1);
    CHECK(p.apply(d).images == q.apply(d).images);
    CHECK(parse_preproc(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(parse_preproc("pca"), InvalidArgument);
}

TEST_CASE("augmentation") {
  const Tensor x = oracle::random({3, 2, 8, 8}, 7);
  CHECK(flip_horizontal(flip_horizontal(x)) == x);
  CHECK(crop_images(pad_images(x, 4), 4, 4, 8) == x);
  CHECK(center_crop(pad_images(x, 4), 8) == x);
  CHECK(pad_images(x, 2).at(0, 0, 0, 0) == 0.0);
  AugmentOptions o{4, 8, 0.5};
  Rng a(9), b(9);
  CHECK(augment(x, a, o) == augment(x, b, o));
  o.flip_p = 1.0;
  o.pad = 0;
  Rng c(1);
  CHECK(augment(x, c, o) == flip_horizontal(x));
  o.crop = 9;
  CHECK_THROWS_AS(augment(x, c, o), InvalidArgument);
}

TEST_CASE("dataset validation and subsets") {
  Dataset d = make_synthetic_cifar(10, 1);
  CHECK(d.head(4).size() == 4);
  CHECK(d.head(4).images.dim(0) == 4);
  d.labels[0] = 12;
  CHECK_THROWS_AS(d.validate(), InvalidArgument);
  d.labels.pop_back();
  CHECK_THROWS_AS(d.validate(), InvalidArgument);
  const std::vector<std::size_t> idx{2, 0};
  const Dataset e = make_synthetic_cifar(10, 1);
  const Tensor g = gather(e.images, idx);
  CHECK(g.at(1, 0, 3, 3) == e.images.at(0, 0, 3, 3));
  const std::vector<std::size_t> bad{10};
  CHECK_THROWS_AS(gather(e.images, bad), InvalidArgument);
}
