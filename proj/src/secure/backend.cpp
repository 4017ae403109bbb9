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

#include "dpbrem/secure/backend.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dpbrem/secure/shamir.hpp"

namespace dpbrem::secure {

std::uint64_t SimulatedMpcBackend::open(
    const std::vector<Share>& shares) const {
  const auto value = robust_reconstruct(shares, cfg_);
  if (!value.has_value()) {
    throw std::runtime_error("mpc backend: robust reconstruction failed");
  }
  return *value;
}

std::vector<Share> SimulatedMpcBackend::reshare(std::uint64_t value) {
  return share(value, cfg_, stream_);
}

std::vector<Share> SimulatedMpcBackend::multiply(const std::vector<Share>& a,
                                                 const std::vector<Share>& b) {
  const __int128 sa = to_signed(open(a), cfg_.modulus);
  const __int128 sb = to_signed(open(b), cfg_.modulus);
  return reshare(from_signed(sa * sb, cfg_.modulus));
}

bool SimulatedMpcBackend::less_equal_const(const std::vector<Share>& v,
                                           std::int64_t threshold) {
  const __int128 s = to_signed(open(v), cfg_.modulus);
  return s <= static_cast<__int128>(threshold);
}

std::pair<std::vector<Share>, std::vector<Share>>
SimulatedMpcBackend::box_muller(const std::vector<Share>& u,
                                const std::vector<Share>& v, double scale,
                                double u_floor) {
  if (!(u_floor > 0.0)) {
    throw std::invalid_argument("box_muller: u_floor must be positive");
  }
  double uu = fxp_decode(open(u), fxp_, cfg_);
  const double vv = fxp_decode(open(v), fxp_, cfg_);
  if (uu < u_floor) {
    uu = u_floor;  // keep the logarithm finite
  }
  const double radius = scale * std::sqrt(-2.0 * std::log(uu));
  const double angle = 2.0 * std::numbers::pi * vv;
  const double a = radius * std::cos(angle);
  const double b = radius * std::sin(angle);
  return {reshare(fxp_encode(a, fxp_, cfg_)),
          reshare(fxp_encode(b, fxp_, cfg_))};
}

}  // namespace dpbrem::secure
