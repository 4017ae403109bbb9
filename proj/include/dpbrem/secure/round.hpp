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
#include <span>
#include <string>
#include <vector>

#include "dpbrem/core/rng.hpp"
#include "dpbrem/core/vector_ops.hpp"
#include "dpbrem/secure/backend.hpp"
#include "dpbrem/secure/field.hpp"
#include "dpbrem/secure/fixed_point.hpp"

namespace dpbrem::secure {

// Plaintext input predicate: closed boundary, ||z|| <= bound is valid.
bool validate_input(const core::ParamVector& z, double bound);

// Shared-coordinate layout: coords[k] holds one share per party of
// coordinate k.
using SharedVector = std::vector<std::vector<Share>>;

SharedVector share_vector(const core::ParamVector& z, const FxpParams& fxp,
                          const SharingConfig& cfg, core::RngStream& stream);

/**
 * Shared squared-norm predicate: computes sum_k z_k^2 on shares via
 * backend multiplications and compares against
 * (bound^2 + 2^(2-f) d) in 2f-bit fixed point. Within the quantization
 * guard band of 2^(2-f) d around the boundary it may differ from the
 * plaintext predicate; outside the band it agrees.
 */
bool validate_input_shared(const SharedVector& z_shares, double bound,
                           const FxpParams& fxp, const SharingConfig& cfg,
                           MpcBackend& backend);

struct JointUniform {
  std::uint64_t bits = 0;       // XOR of all contributions
  double value = 0.0;           // bits / 2^l
  std::vector<Share> shares;    // sharing of fxp(value)
};

/**
 * Jointly generated uniform: each party contributes l random bits; their
 * XOR is the l-bit fraction of u. Requires l <= f so fxp(u) is exact.
 * Uniform over {k 2^-l} whenever at least one contribution is
 * honest-random.
 */
JointUniform joint_uniform(std::span<const std::uint64_t> contributions,
                           unsigned l_bits, const FxpParams& fxp,
                           const SharingConfig& cfg, core::RngStream& stream);

// Box-Muller on shared uniforms; delegation point for the backend's
// nonlinear map. u = 0 is floored at 2^-l_bits before the logarithm.
std::pair<std::vector<Share>, std::vector<Share>> box_muller_shared(
    const std::vector<Share>& u_shares, const std::vector<Share>& v_shares,
    double scale, unsigned l_bits, MpcBackend& backend);

enum class ClientBehavior { honest, malformed_input, corrupt_shares, dropout };

class SecureProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SecureRoundResult {
  core::ParamVector aggregate;               // decoded sum_{Valid} z_i + xi
  std::vector<std::uint64_t> aggregate_raw;  // field value per coordinate
  std::vector<bool> valid;                   // per client
  core::ParamVector noise;                   // decoded xi
  std::vector<std::uint64_t> noise_raw;      // field value per coordinate
  std::vector<std::string> transcript;       // one line per protocol step
};

/**
 * One secure noisy aggregation round over n = cfg.n_parties clients, each
 * holding input z_i (all of dimension d):
 *   1) every client fixed-point-encodes and Shamir-shares its input;
 *   2,3) the squared-norm predicate is evaluated on shares and robustly
 *        reconstructed, yielding the valid set (honest clients plus
 *        malicious clients whose inputs pass);
 *   4) clients jointly generate ceil(d/2) pairs of uniform numbers;
 *   5) the backend maps them to Gaussian noise shares at the given scale
 *        (odd d discards the final half-pair);
 *   6) each party locally sums the valid input shares and its noise
 *        share;
 *   7) the server robustly reconstructs the per-coordinate aggregate.
 *
 * corrupt_shares clients hand wrong values to every reconstruction;
 * dropout clients stop contributing lanes after sharing their input.
 * With q corruptions and e dropouts the round requires
 * 2q + e < n - t + 1 and a malicious minority, else it signals
 * SecureProtocolError.
 */
SecureRoundResult secure_noisy_round(
    const std::vector<core::ParamVector>& inputs,
    const std::vector<ClientBehavior>& behaviors, double client_bound,
    double noise_scale, const FxpParams& fxp, const SharingConfig& cfg,
    unsigned l_bits, MpcBackend& backend, core::RngStream stream);

}  // namespace dpbrem::secure
