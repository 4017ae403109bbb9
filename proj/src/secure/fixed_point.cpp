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

#include "dpbrem/secure/fixed_point.hpp"

#include <cmath>
#include <stdexcept>

namespace dpbrem::secure {

std::uint64_t fxp_encode(double x, const FxpParams& fxp,
                         const SharingConfig& cfg) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument("fxp_encode: non-finite value");
  }
  const double scaled =
      x * static_cast<double>(1ULL << fxp.fractional_bits);
  const double limit = static_cast<double>(cfg.modulus) /
                       (2.0 * static_cast<double>(cfg.n_parties));
  if (!(std::abs(scaled) < limit)) {
    throw std::overflow_error("fxp_encode: |raw| >= p/(2n)");
  }
  const auto raw = static_cast<long long>(std::llround(scaled));
  if (raw >= 0) {
    return static_cast<std::uint64_t>(raw) % cfg.modulus;
  }
  return cfg.modulus - (static_cast<std::uint64_t>(-raw) % cfg.modulus);
}

double fxp_decode(std::uint64_t v, const FxpParams& fxp,
                  const SharingConfig& cfg) {
  const __int128 s = to_signed(v % cfg.modulus, cfg.modulus);
  return static_cast<double>(s) /
         static_cast<double>(1ULL << fxp.fractional_bits);
}

double fxp_decode_product(std::uint64_t v, const FxpParams& fxp,
                          const SharingConfig& cfg) {
  const __int128 s = to_signed(v % cfg.modulus, cfg.modulus);
  return static_cast<double>(s) /
         std::pow(2.0, 2.0 * static_cast<double>(fxp.fractional_bits));
}

}  // namespace dpbrem::secure
