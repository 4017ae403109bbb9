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

#include "dpbrem/secure/field.hpp"

namespace dpbrem::secure {

struct FxpParams {
  unsigned fractional_bits = 16;  // f

  double resolution() const {
    return 1.0 / static_cast<double>(1ULL << fractional_bits);
  }
};

/**
 * Fixed-point embedding into the field: raw = round(x * 2^f), negatives
 * stored as p - |raw|. Encoding enforces |raw| < p / (2n) so that sums of
 * up to n terms cannot wrap around.
 */
std::uint64_t fxp_encode(double x, const FxpParams& fxp,
                         const SharingConfig& cfg);

double fxp_decode(std::uint64_t v, const FxpParams& fxp,
                  const SharingConfig& cfg);

// Decode a value carrying 2f fractional bits (a product of two encodings).
double fxp_decode_product(std::uint64_t v, const FxpParams& fxp,
                          const SharingConfig& cfg);

}  // namespace dpbrem::secure
