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

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace dpbrem::core {

/**
 * Deterministic, splittable random stream.
 *
 * A stream is identified by 256 bits of seed material (the "key"). Child
 * streams are derived by absorbing a length-prefixed label into the parent
 * key, so the output of a stream is a pure function of (root seed, full
 * derivation path) and is independent of how many values the parent has
 * already produced. Output generation runs xoshiro256** over a state
 * expanded from the key.
 *
 * Derivation is length-prefixed: derive(derive(s,"a"),"b") and
 * derive(s,"ab") name different streams.
 */
class RngStream {
 public:
  RngStream() : RngStream(from_seed(0)) {}

  static RngStream from_seed(std::uint64_t seed);

  // Child stream for a labelled sub-computation. Does not advance *this.
  [[nodiscard]] RngStream derive(std::string_view label) const;
  [[nodiscard]] RngStream derive(std::uint64_t index) const;

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double next_unit();

  // Standard normal via the Box-Muller transform (rejection-free).
  // Draws a fresh pair of uniforms per call.
  double next_gaussian();

  // True with probability p.
  bool next_bernoulli(double p);

  // Uniform integer in [0, bound) via rejection from the top bits.
  std::uint64_t next_below(std::uint64_t bound);

  friend bool operator==(const RngStream& a, const RngStream& b) {
    return a.key_ == b.key_ && a.state_ == b.state_;
  }

 private:
  explicit RngStream(const std::array<std::uint64_t, 4>& key);

  std::array<std::uint64_t, 4> key_;
  std::array<std::uint64_t, 4> state_;
};

/**
 * d independent draws from N(0, stddev^2); stddev = 0 yields the zero vector.
 */
std::vector<double> gaussian_vector(RngStream& stream, std::size_t d,
                                    double stddev);

// Fisher-Yates shuffle driven by the stream.
template <typename T>
void shuffle(std::vector<T>& items, RngStream& stream) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = stream.next_below(i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace dpbrem::core
