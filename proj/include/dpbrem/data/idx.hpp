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

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpbrem/data/dataset.hpp"

namespace dpbrem::data {

enum class IdxErrorKind {
  io,
  bad_magic,
  truncated,
  dimension_overflow,
};

class IdxError : public std::runtime_error {
 public:
  IdxError(IdxErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  IdxErrorKind kind() const { return kind_; }

 private:
  IdxErrorKind kind_;
};

// Raw IDX tensor: 4-byte big-endian magic (bytes 0-1 zero, byte 2 = 0x08
// for unsigned byte data, byte 3 = rank), rank big-endian u32 dimension
// sizes, then the row-major payload.
struct IdxTensor {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;
};

IdxTensor read_idx(const std::string& path);
IdxTensor parse_idx(const std::vector<std::uint8_t>& bytes);

// Images file (rank >= 2): dims[0] records, remaining dims flattened
// row-major into features, pixel bytes scaled to [0, 1]. Labels are 0 and
// num_classes is 1 until labels are attached.
Dataset load_idx(const std::string& images_path);

// Images plus a rank-1 label file of matching length.
Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path);

}  // namespace dpbrem::data
