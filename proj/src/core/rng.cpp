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

#include "dpbrem/core/rng.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>

namespace dpbrem::core {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer; full-avalanche 64-bit mixer.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

void absorb_block(std::array<std::uint64_t, 4>& key, std::uint64_t block) {
  for (std::size_t j = 0; j < key.size(); ++j) {
    key[j] = mix64(key[j] ^ mix64(block + kGolden * (j + 1)));
  }
}

std::array<std::uint64_t, 4> absorb_label(std::array<std::uint64_t, 4> key,
                                          std::string_view label) {
  // Length prefix keeps distinct paths distinct even when their
  // concatenated bytes coincide.
  absorb_block(key, static_cast<std::uint64_t>(label.size()));
  for (std::size_t off = 0; off < label.size(); off += 8) {
    std::uint64_t block = 0;
    const std::size_t len = std::min<std::size_t>(8, label.size() - off);
    std::memcpy(&block, label.data() + off, len);
    absorb_block(key, block);
  }
  absorb_block(key, 0x6c6562616cULL);  // domain-separation terminator
  return key;
}

}  // namespace

RngStream::RngStream(const std::array<std::uint64_t, 4>& key) : key_(key) {
  // Expand the key into a xoshiro256** state that is never all-zero.
  std::uint64_t acc = kGolden;
  for (std::size_t i = 0; i < state_.size(); ++i) {
    acc += key_[i];
    state_[i] = mix64(acc + kGolden * (i + 11));
  }
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) {
    state_[0] = kGolden;
  }
}

RngStream RngStream::from_seed(std::uint64_t seed) {
  std::array<std::uint64_t, 4> key{};
  std::uint64_t z = seed;
  for (auto& k : key) {
    z += kGolden;
    k = mix64(z);
  }
  return RngStream(key);
}

RngStream RngStream::derive(std::string_view label) const {
  return RngStream(absorb_label(key_, label));
}

RngStream RngStream::derive(std::uint64_t index) const {
  char buf[8];
  std::memcpy(buf, &index, sizeof(buf));
  auto key = key_;
  absorb_block(key, 0x7864690aULL);  // tag: integer label
  key = absorb_label(key, std::string_view(buf, sizeof(buf)));
  return RngStream(key);
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_gaussian() {
  const double u = 1.0 - next_unit();  // (0, 1]: keeps log finite
  const double v = next_unit();
  return std::sqrt(-2.0 * std::log(u)) *
         std::cos(2.0 * std::numbers::pi * v);
}

bool RngStream::next_bernoulli(double p) {
  return next_unit() < p;
}

std::uint64_t RngStream::next_below(std::uint64_t bound) {
  if (bound == 0) {
    throw std::invalid_argument("next_below: bound must be positive");
  }
  // Rejection from the smallest power-of-two envelope.
  std::uint64_t mask = bound - 1;
  mask |= mask >> 1;
  mask |= mask >> 2;
  mask |= mask >> 4;
  mask |= mask >> 8;
  mask |= mask >> 16;
  mask |= mask >> 32;
  for (;;) {
    const std::uint64_t candidate = next_u64() & mask;
    if (candidate < bound) {
      return candidate;
    }
  }
}

std::vector<double> gaussian_vector(RngStream& stream, std::size_t d,
                                    double stddev) {
  if (!(stddev >= 0.0)) {
    throw std::invalid_argument("gaussian_vector: stddev must be >= 0");
  }
  std::vector<double> out(d, 0.0);
  if (stddev == 0.0) {
    return out;
  }
  for (std::size_t i = 0; i < d; i += 2) {
    const double u = 1.0 - stream.next_unit();
    const double v = stream.next_unit();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double angle = 2.0 * std::numbers::pi * v;
    out[i] = stddev * r * std::cos(angle);
    if (i + 1 < d) {
      out[i + 1] = stddev * r * std::sin(angle);
    }
  }
  return out;
}

}  // namespace dpbrem::core
