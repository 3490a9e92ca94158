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

#include <bit>
#include <cstring>
#include <fstream>

#include "mpelu/data.hpp"
#include "mpelu/errors.hpp"

namespace mpelu {

namespace {

std::size_t type_size(IdxType t) {
  switch (t) {
    case IdxType::U8:
    case IdxType::I8: return 1;
    case IdxType::I16: return 2;
    case IdxType::I32:
    case IdxType::F32: return 4;
    case IdxType::F64: return 8;
  }
  return 0;
}

bool valid_type(std::uint8_t code) {
  switch (code) {
    case 0x08: case 0x09: case 0x0B: case 0x0C: case 0x0D: case 0x0E:
      return true;
    default: return false;
  }
}

template <typename U>
U load_be(const unsigned char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v = static_cast<U>((v << 8) | p[i]);
  return v;
}

template <typename U>
void store_be(unsigned char* p, U v) {
  for (std::size_t i = sizeof(U); i-- > 0;) {
    p[i] = static_cast<unsigned char>(v & 0xFF);
    v = static_cast<U>(v >> 8);
  }
}

double decode(IdxType t, const unsigned char* p) {
  switch (t) {
    case IdxType::U8: return p[0];
    case IdxType::I8: return static_cast<std::int8_t>(p[0]);
    case IdxType::I16: return static_cast<std::int16_t>(load_be<std::uint16_t>(p));
    case IdxType::I32: return static_cast<std::int32_t>(load_be<std::uint32_t>(p));
    case IdxType::F32: return std::bit_cast<float>(load_be<std::uint32_t>(p));
    case IdxType::F64: return std::bit_cast<double>(load_be<std::uint64_t>(p));
  }
  return 0.0;
}

void encode(IdxType t, double v, unsigned char* p) {
  switch (t) {
    case IdxType::U8: p[0] = static_cast<unsigned char>(v); break;
    case IdxType::I8:
      p[0] = static_cast<unsigned char>(static_cast<std::int8_t>(v));
      break;
    case IdxType::I16:
      store_be(p, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
      break;
    case IdxType::I32:
      store_be(p, static_cast<std::uint32_t>(static_cast<std::int32_t>(v)));
      break;
    case IdxType::F32:
      store_be(p, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      break;
    case IdxType::F64: store_be(p, std::bit_cast<std::uint64_t>(v)); break;
  }
}

}  // namespace

IdxArray read_idx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 4)
    throw FormatError("idx: " + path + " is shorter than the 4-byte magic");
  if (bytes[0] != 0 || bytes[1] != 0 || !valid_type(bytes[2]) || bytes[3] == 0)
    throw FormatError("idx: bad magic in " + path);
  const auto type = static_cast<IdxType>(bytes[2]);
  const std::size_t rank = bytes[3];
  const std::size_t header = 4 + 4 * rank;
  if (bytes.size() < header)
    throw FormatError("idx: truncated header in " + path);
  Shape shape(rank);
  for (std::size_t d = 0; d < rank; ++d)
    shape[d] = load_be<std::uint32_t>(bytes.data() + 4 + 4 * d);
  const std::size_t expected = header + shape_numel(shape) * type_size(type);
  if (bytes.size() != expected)
    throw FormatError("idx: " + path + " has " + std::to_string(bytes.size()) +
                      " bytes, expected " + std::to_string(expected));
  IdxArray a;
  a.type = type;
  a.data = Tensor(shape);
  const std::size_t w = type_size(type);
  for (std::size_t i = 0; i < a.data.numel(); ++i)
    a.data[i] = decode(type, bytes.data() + header + i * w);
  return a;
}

void write_idx(const std::string& path, const IdxArray& array) {
  const Shape& shape = array.data.shape();
  if (shape.empty() || shape.size() > 255)
    throw InvalidArgument("idx: rank must be in [1, 255]");
  const std::size_t header = 4 + 4 * shape.size();
  const std::size_t w = type_size(array.type);
  std::vector<unsigned char> bytes(header + array.data.numel() * w);
  bytes[2] = static_cast<unsigned char>(array.type);
  bytes[3] = static_cast<unsigned char>(shape.size());
  for (std::size_t d = 0; d < shape.size(); ++d)
    store_be(bytes.data() + 4 + 4 * d, static_cast<std::uint32_t>(shape[d]));
  for (std::size_t i = 0; i < array.data.numel(); ++i)
    encode(array.type, array.data[i], bytes.data() + header + i * w);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path) {
  IdxArray images = read_idx(images_path);
  const IdxArray labels = read_idx(labels_path);
  Shape shape = images.data.shape();
  if (shape.size() == 3) shape.insert(shape.begin() + 1, 1);
  if (shape.size() != 4)
    throw FormatError("idx: images must have rank 3 or 4, got " +
                      std::to_string(images.data.rank()));
  if (labels.data.rank() != 1 || labels.data.dim(0) != shape[0])
    throw FormatError("idx: label file does not match " +
                      std::to_string(shape[0]) + " images");
  Dataset d;
  d.source = images_path;
  d.images = images.data.reshaped(shape);
  if (images.type == IdxType::U8)
    for (double& v : d.images.values()) v /= 255.0;
  int max_label = 0;
  for (double v : labels.data.values()) {
    if (v < 0 || v != static_cast<int>(v))
      throw FormatError("idx: labels must be non-negative integers");
    d.labels.push_back(static_cast<int>(v));
    max_label = std::max(max_label, static_cast<int>(v));
  }
  d.classes = static_cast<std::size_t>(max_label) + 1;
  return d;
}

}  // namespace mpelu
