// Copyright 2026 The dpbrem Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpbrem/data/idx.hpp"

#include <fstream>
#include <limits>

namespace dpbrem::data {

namespace {

constexpr std::uint8_t kUnsignedByteType = 0x08;

std::uint32_t read_be32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) |
         (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) |
         static_cast<std::uint32_t>(p[3]);
}

}  // namespace

IdxTensor parse_idx(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4) {
    throw IdxError(IdxErrorKind::truncated, "idx: file shorter than magic");
  }
  if (bytes[0] != 0 || bytes[1] != 0) {
    throw IdxError(IdxErrorKind::bad_magic, "idx: first two magic bytes not zero");
  }
  if (bytes[2] != kUnsignedByteType) {
    throw IdxError(IdxErrorKind::bad_magic,
                   "idx: unsupported element type 0x" +
                       std::to_string(bytes[2]));
  }
  const std::size_t rank = bytes[3];
  if (rank == 0) {
    throw IdxError(IdxErrorKind::bad_magic, "idx: rank is zero");
  }
  const std::size_t header = 4 + 4 * rank;
  if (bytes.size() < header) {
    throw IdxError(IdxErrorKind::truncated, "idx: truncated dimension list");
  }

  IdxTensor out;
  out.dims.resize(rank);
  std::size_t total = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    out.dims[i] = read_be32(bytes.data() + 4 + 4 * i);
    const std::size_t dim = out.dims[i];
    if (dim != 0 && total > std::numeric_limits<std::size_t>::max() / dim) {
      throw IdxError(IdxErrorKind::dimension_overflow,
                     "idx: dimension product overflows");
    }
    total *= dim;
  }
  if (bytes.size() < header + total) {
    throw IdxError(IdxErrorKind::truncated, "idx: truncated payload");
  }
  out.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header),
                     bytes.begin() + static_cast<std::ptrdiff_t>(header + total));
  return out;
}

IdxTensor read_idx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IdxError(IdxErrorKind::io, "idx: cannot open " + path);
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_idx(bytes);
}

Dataset load_idx(const std::string& images_path) {
  const IdxTensor tensor = read_idx(images_path);
  if (tensor.dims.size() < 2) {
    throw IdxError(IdxErrorKind::bad_magic,
                   "idx: image file must have rank >= 2");
  }
  const std::size_t n = tensor.dims[0];
  std::size_t features = 1;
  for (std::size_t i = 1; i < tensor.dims.size(); ++i) {
    features *= tensor.dims[i];
  }
  Dataset out;
  out.num_classes = 1;
  out.records.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& rec = out.records[i];
    rec.features.resize(features);
    for (std::size_t j = 0; j < features; ++j) {
      rec.features[j] =
          static_cast<double>(tensor.payload[i * features + j]) / 255.0;
    }
  }
  return out;
}

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path) {
  Dataset out = load_idx(images_path);
  const IdxTensor labels = read_idx(labels_path);
  if (labels.dims.size() != 1) {
    throw IdxError(IdxErrorKind::bad_magic, "idx: label file must have rank 1");
  }
  if (labels.dims[0] != out.records.size()) {
    throw IdxError(IdxErrorKind::truncated,
                   "idx: image/label record counts differ");
  }
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    out.records[i].label = labels.payload[i];
    max_label = std::max<std::size_t>(max_label, labels.payload[i]);
  }
  out.num_classes = max_label + 1;
  return out;
}

}  // namespace dpbrem::data
