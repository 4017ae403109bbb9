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

namespace dpbrem::secure {

// Prime field for sharing and aggregation. A prime modulus (rather than a
// characteristic-2 field) is required for the arithmetic share sums in the
// aggregation steps; the default is the Mersenne prime 2^61 - 1.
inline constexpr std::uint64_t kDefaultModulus = (1ULL << 61) - 1;

inline std::uint64_t mod_add(std::uint64_t a, std::uint64_t b,
                             std::uint64_t p) {
  const std::uint64_t s = a + b;  // p < 2^62, no overflow
  return s >= p ? s - p : s;
}

inline std::uint64_t mod_sub(std::uint64_t a, std::uint64_t b,
                             std::uint64_t p) {
  return a >= b ? a - b : a + p - b;
}

inline std::uint64_t mod_mul(std::uint64_t a, std::uint64_t b,
                             std::uint64_t p) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(a) * b) % p);
}

inline std::uint64_t mod_pow(std::uint64_t base, std::uint64_t exp,
                             std::uint64_t p) {
  std::uint64_t result = 1 % p;
  base %= p;
  while (exp > 0) {
    if (exp & 1) {
      result = mod_mul(result, base, p);
    }
    base = mod_mul(base, base, p);
    exp >>= 1;
  }
  return result;
}

// Fermat inverse; p must be prime and x nonzero.
inline std::uint64_t mod_inv(std::uint64_t x, std::uint64_t p) {
  if (x % p == 0) {
    throw std::invalid_argument("mod_inv: zero has no inverse");
  }
  return mod_pow(x, p - 2, p);
}

// Signed interpretation: residues above p/2 are negative.
inline __int128 to_signed(std::uint64_t v, std::uint64_t p) {
  return v > p / 2 ? static_cast<__int128>(v) - static_cast<__int128>(p)
                   : static_cast<__int128>(v);
}

inline std::uint64_t from_signed(__int128 v, std::uint64_t p) {
  __int128 r = v % static_cast<__int128>(p);
  if (r < 0) {
    r += p;
  }
  return static_cast<std::uint64_t>(r);
}

struct SharingConfig {
  std::size_t n_parties = 0;   // n: evaluation points 1..n
  std::size_t threshold = 0;   // t: any t shares reconstruct
  std::uint64_t modulus = kDefaultModulus;

  void validate() const {
    if (threshold < 1 || threshold > n_parties) {
      throw std::invalid_argument("SharingConfig: need 1 <= t <= n");
    }
    if (n_parties >= modulus) {
      throw std::invalid_argument("SharingConfig: need n < modulus");
    }
  }
};

struct Share {
  std::size_t point = 0;  // evaluation index in [1, n]
  std::uint64_t value = 0;
};

}  // namespace dpbrem::secure
