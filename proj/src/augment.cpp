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

#include "mpelu/data.hpp"
#include "mpelu/errors.hpp"

namespace mpelu {

namespace {

void require_nchw(const Tensor& t, const char* who) {
  if (t.rank() != 4)
    throw InvalidArgument(std::string(who) + ": expected [N, C, H, W], got " +
                          shape_str(t.shape()));
}

}  // namespace

Tensor pad_images(const Tensor& batch, std::size_t pad) {
  require_nchw(batch, "pad");
  const std::size_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2),
                    w = batch.dim(3);
  const std::size_t ph = h + 2 * pad, pw = w + 2 * pad;
  Tensor out({n, c, ph, pw});
  for (std::size_t i = 0; i < n * c; ++i)
    for (std::size_t y = 0; y < h; ++y)
      std::copy_n(batch.data() + (i * h + y) * w, w,
                  out.data() + (i * ph + y + pad) * pw + pad);
  return out;
}

Tensor crop_images(const Tensor& batch, std::size_t top, std::size_t left,
                   std::size_t size) {
  require_nchw(batch, "crop");
  const std::size_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2),
                    w = batch.dim(3);
  if (top + size > h || left + size > w)
    throw InvalidArgument("crop: " + std::to_string(size) + "x" +
                          std::to_string(size) + " window at (" +
                          std::to_string(top) + ", " + std::to_string(left) +
                          ") exceeds " + std::to_string(h) + "x" +
                          std::to_string(w) + " image");
  Tensor out({n, c, size, size});
  for (std::size_t i = 0; i < n * c; ++i)
    for (std::size_t y = 0; y < size; ++y)
      std::copy_n(batch.data() + (i * h + top + y) * w + left, size,
                  out.data() + (i * size + y) * size);
  return out;
}

Tensor center_crop(const Tensor& batch, std::size_t size) {
  require_nchw(batch, "center_crop");
  if (size > batch.dim(2) || size > batch.dim(3))
    throw InvalidArgument("center_crop: crop larger than image");
  return crop_images(batch, (batch.dim(2) - size) / 2,
                     (batch.dim(3) - size) / 2, size);
}

Tensor flip_horizontal(const Tensor& batch) {
  require_nchw(batch, "flip");
  Tensor out = batch;
  const std::size_t rows = batch.dim(0) * batch.dim(1) * batch.dim(2);
  const std::size_t w = batch.dim(3);
  for (std::size_t r = 0; r < rows; ++r)
    std::reverse(out.data() + r * w, out.data() + (r + 1) * w);
  return out;
}

Tensor augment(const Tensor& batch, Rng& rng, const AugmentOptions& o) {
  require_nchw(batch, "augment");
  const std::size_t n = batch.dim(0), c = batch.dim(1);
  const std::size_t ph = batch.dim(2) + 2 * o.pad, pw = batch.dim(3) + 2 * o.pad;
  if (o.crop == 0 || o.crop > ph || o.crop > pw)
    throw InvalidArgument("augment: crop " + std::to_string(o.crop) +
                          " larger than padded image " + std::to_string(ph) +
                          "x" + std::to_string(pw));
  const Tensor padded = pad_images(batch, o.pad);
  const std::size_t s = o.crop;
  Tensor out({n, c, s, s});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t top = rng.uniform_int(ph - s + 1);
    const std::size_t left = rng.uniform_int(pw - s + 1);
    const bool flip = rng.bernoulli(o.flip_p);
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < s; ++y) {
        const double* src = padded.data() + ((i * c + ch) * ph + top + y) * pw + left;
        double* dst = out.data() + ((i * c + ch) * s + y) * s;
        if (flip)
          for (std::size_t x = 0; x < s; ++x) dst[x] = src[s - 1 - x];
        else
          std::copy_n(src, s, dst);
      }
  }
  return out;
}

}  // namespace mpelu
