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

#include <optional>
#include <span>
#include <vector>

#include "dpbrem/core/rng.hpp"
#include "dpbrem/secure/field.hpp"

namespace dpbrem::secure {

// t-of-n Shamir sharing: a uniform polynomial of degree t-1 with constant
// term equal to the secret, evaluated at 1..n.
std::vector<Share> share(std::uint64_t secret, const SharingConfig& cfg,
                         core::RngStream& stream);

// Lagrange interpolation at 0 from at least t error-free shares with
// distinct points. Throws on fewer than t shares or duplicate points.
std::uint64_t reconstruct(std::span<const Share> shares,
                          const SharingConfig& cfg);

/**
 * Reed-Solomon decoding of the share word (Gao's algorithm: interpolate,
 * partial extended GCD, divide). With m received shares of which at most
 * q hold wrong values, decoding is guaranteed for 2q <= m - t, i.e.
 * 2q + e < n - t + 1 with e = n - m erasures. Returns nullopt when the
 * residual check fails; it never silently returns a value that fails the
 * divisibility/degree checks.
 */
std::optional<std::uint64_t> robust_reconstruct(std::span<const Share> shares,
                                                const SharingConfig& cfg);

}  // namespace dpbrem::secure
