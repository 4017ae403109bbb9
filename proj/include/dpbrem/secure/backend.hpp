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
#include <utility>
#include <vector>

#include "dpbrem/core/rng.hpp"
#include "dpbrem/secure/field.hpp"
#include "dpbrem/secure/fixed_point.hpp"

namespace dpbrem::secure {

/**
 * Operations on secret-shared values that are not linear in the shares.
 * Share vectors carry one share per surviving party; up to the
 * robust-decoding error bound of the sharing config, wrong share values
 * must not change the result.
 *
 * Contract (on the reconstructed signed values):
 *   multiply        shares of a * b (integer product; the caller tracks
 *                   fractional bits)
 *   less_equal_const  reconstructed(v) <= threshold
 *   box_muller      u, v hold f-bit fixed-point uniforms in [0,1);
 *                   u is floored at u_floor before the logarithm; returns
 *                   shares of fxp(scale * sqrt(-2 ln u) cos(2 pi v)) and
 *                   fxp(scale * sqrt(-2 ln u) sin(2 pi v)).
 */
class MpcBackend {
 public:
  virtual ~MpcBackend() = default;

  virtual std::vector<Share> multiply(const std::vector<Share>& a,
                                      const std::vector<Share>& b) = 0;

  virtual bool less_equal_const(const std::vector<Share>& v,
                                std::int64_t threshold) = 0;

  virtual std::pair<std::vector<Share>, std::vector<Share>> box_muller(
      const std::vector<Share>& u, const std::vector<Share>& v, double scale,
      double u_floor) = 0;
};

/**
 * Reference backend: a sealed functional simulation that robustly
 * reconstructs its inputs, computes in the clear, and re-shares the
 * result. It provides the functional semantics and integrity that the
 * tests verify; it does NOT provide cryptographic privacy for the
 * nonlinear steps. A real MPC engine can be swapped in behind the
 * interface.
 */
class SimulatedMpcBackend final : public MpcBackend {
 public:
  SimulatedMpcBackend(SharingConfig cfg, FxpParams fxp,
                      core::RngStream stream)
      : cfg_(cfg), fxp_(fxp), stream_(stream) {
    cfg_.validate();
  }

  std::vector<Share> multiply(const std::vector<Share>& a,
                              const std::vector<Share>& b) override;

  bool less_equal_const(const std::vector<Share>& v,
                        std::int64_t threshold) override;

  std::pair<std::vector<Share>, std::vector<Share>> box_muller(
      const std::vector<Share>& u, const std::vector<Share>& v, double scale,
      double u_floor) override;

 private:
  std::uint64_t open(const std::vector<Share>& shares) const;
  std::vector<Share> reshare(std::uint64_t value);

  SharingConfig cfg_;
  FxpParams fxp_;
  core::RngStream stream_;
};

}  // namespace dpbrem::secure
