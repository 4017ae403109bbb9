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

#include "dpbrem/secure/round.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dpbrem/secure/shamir.hpp"

namespace dpbrem::secure {

bool validate_input(const core::ParamVector& z, double bound) {
  if (!core::all_finite(z)) {
    throw std::invalid_argument("validate_input: non-finite input");
  }
  if (!(bound > 0.0)) {
    throw std::invalid_argument("validate_input: bound must be positive");
  }
  return core::l2_norm(z) <= bound;
}

SharedVector share_vector(const core::ParamVector& z, const FxpParams& fxp,
                          const SharingConfig& cfg, core::RngStream& stream) {
  SharedVector out(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    out[k] = share(fxp_encode(z[k], fxp, cfg), cfg, stream);
  }
  return out;
}

bool validate_input_shared(const SharedVector& z_shares, double bound,
                           const FxpParams& fxp, const SharingConfig& cfg,
                           MpcBackend& backend) {
  if (z_shares.empty()) {
    throw std::invalid_argument("validate_input_shared: empty share set");
  }
  const std::uint64_t p = cfg.modulus;
  const std::size_t n_lanes = z_shares.front().size();
  // Sum of squared coordinates on shares: one backend multiplication per
  // coordinate, then a local (linear) share-wise sum.
  std::vector<Share> norm_shares;
  for (const auto& coord : z_shares) {
    if (coord.size() != n_lanes) {
      throw std::invalid_argument("validate_input_shared: malformed shares");
    }
    const std::vector<Share> sq = backend.multiply(coord, coord);
    if (norm_shares.empty()) {
      norm_shares = sq;
    } else {
      for (std::size_t j = 0; j < norm_shares.size(); ++j) {
        if (norm_shares[j].point != sq[j].point) {
          throw std::invalid_argument(
              "validate_input_shared: share points misaligned");
        }
        norm_shares[j].value = mod_add(norm_shares[j].value, sq[j].value, p);
      }
    }
  }
  const double d = static_cast<double>(z_shares.size());
  const double guard =
      std::ldexp(d, 2 - static_cast<int>(fxp.fractional_bits));
  const double threshold_real = bound * bound + guard;
  const auto threshold_raw = static_cast<std::int64_t>(std::llround(
      threshold_real * std::ldexp(1.0, 2 * static_cast<int>(fxp.fractional_bits))));
  return backend.less_equal_const(norm_shares, threshold_raw);
}

JointUniform joint_uniform(std::span<const std::uint64_t> contributions,
                           unsigned l_bits, const FxpParams& fxp,
                           const SharingConfig& cfg, core::RngStream& stream) {
  if (l_bits == 0 || l_bits > 63 || l_bits > fxp.fractional_bits) {
    throw std::invalid_argument("joint_uniform: need 0 < l <= f");
  }
  const std::uint64_t mask = (1ULL << l_bits) - 1;
  std::uint64_t bits = 0;
  for (const std::uint64_t c : contributions) {
    bits ^= (c & mask);
  }
  JointUniform out;
  out.bits = bits;
  out.value = std::ldexp(static_cast<double>(bits),
                         -static_cast<int>(l_bits));
  // With l <= f the encoding bits * 2^(f-l) is exact.
  out.shares = share(fxp_encode(out.value, fxp, cfg), cfg, stream);
  return out;
}

std::pair<std::vector<Share>, std::vector<Share>> box_muller_shared(
    const std::vector<Share>& u_shares, const std::vector<Share>& v_shares,
    double scale, unsigned l_bits, MpcBackend& backend) {
  const double u_floor = std::ldexp(1.0, -static_cast<int>(l_bits));
  return backend.box_muller(u_shares, v_shares, scale, u_floor);
}

namespace {

std::vector<Share> drop_and_corrupt_lanes(
    const std::vector<Share>& shares,
    const std::vector<ClientBehavior>& behaviors, core::RngStream& garbage,
    std::uint64_t modulus) {
  std::vector<Share> out;
  out.reserve(shares.size());
  for (const auto& s : shares) {
    const ClientBehavior b = behaviors[s.point - 1];
    if (b == ClientBehavior::dropout) {
      continue;  // erasure
    }
    Share lane = s;
    if (b == ClientBehavior::corrupt_shares) {
      lane.value = garbage.next_below(modulus);
    }
    out.push_back(lane);
  }
  return out;
}

}  // namespace

SecureRoundResult secure_noisy_round(
    const std::vector<core::ParamVector>& inputs,
    const std::vector<ClientBehavior>& behaviors, double client_bound,
    double noise_scale, const FxpParams& fxp, const SharingConfig& cfg,
    unsigned l_bits, MpcBackend& backend, core::RngStream stream) {
  cfg.validate();
  const std::size_t n = cfg.n_parties;
  if (inputs.size() != n || behaviors.size() != n) {
    throw std::invalid_argument("secure_noisy_round: need one input per party");
  }
  const std::size_t d = inputs.front().size();
  for (const auto& z : inputs) {
    if (z.size() != d) {
      throw std::invalid_argument("secure_noisy_round: ragged inputs");
    }
  }

  std::size_t n_corrupt = 0;
  std::size_t n_dropout = 0;
  std::size_t n_malicious = 0;
  for (const ClientBehavior b : behaviors) {
    n_corrupt += b == ClientBehavior::corrupt_shares ? 1 : 0;
    n_dropout += b == ClientBehavior::dropout ? 1 : 0;
    n_malicious += b != ClientBehavior::honest ? 1 : 0;
  }
  if (2 * n_corrupt + n_dropout >= n - cfg.threshold + 1) {
    throw SecureProtocolError(
        "secure_noisy_round: 2q + e exceeds the robust-decoding bound");
  }
  if (2 * n_malicious >= n) {
    throw SecureProtocolError(
        "secure_noisy_round: malicious parties must be a minority");
  }

  SecureRoundResult result;
  result.transcript.reserve(7);
  auto log_step = [&result](int step, const std::string& text) {
    std::ostringstream line;
    line << "step" << step << " " << text;
    result.transcript.push_back(line.str());
  };
  auto garbage = stream.derive("corruption");

  // (1) proof and share generation: every client shares its encoded input.
  std::vector<SharedVector> input_shares(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto client_stream = stream.derive("input").derive(i);
    input_shares[i] = share_vector(inputs[i], fxp, cfg, client_stream);
  }
  log_step(1, "shared " + std::to_string(n) + " inputs of dimension " +
                  std::to_string(d));

  // (2),(3) proof summaries and verification: the squared-norm predicate
  // on shares, with corrupt lanes injected before reconstruction.
  result.valid.assign(n, false);
  std::size_t n_valid = 0;
  for (std::size_t i = 0; i < n; ++i) {
    SharedVector checked(d);
    for (std::size_t k = 0; k < d; ++k) {
      checked[k] = drop_and_corrupt_lanes(input_shares[i][k], behaviors,
                                          garbage, cfg.modulus);
    }
    result.valid[i] =
        validate_input_shared(checked, client_bound, fxp, cfg, backend);
    n_valid += result.valid[i] ? 1 : 0;
  }
  log_step(2, "proof summaries computed for " + std::to_string(n) +
                  " clients");
  log_step(3, "validation accepted " + std::to_string(n_valid) + "/" +
                  std::to_string(n) + " inputs");

  // (4) joint uniforms: one l-bit contribution per surviving party;
  // corrupt parties contribute adversarially fixed bits.
  const std::size_t n_pairs = (d + 1) / 2;
  std::vector<std::vector<Share>> noise_shares(d);
  std::vector<JointUniform> uniforms;
  uniforms.reserve(2 * n_pairs);
  auto bits_stream = stream.derive("bits");
  auto shares_stream = stream.derive("uniform_shares");
  for (std::size_t pair = 0; pair < n_pairs; ++pair) {
    for (int half = 0; half < 2; ++half) {
      std::vector<std::uint64_t> contributions;
      for (std::size_t i = 0; i < n; ++i) {
        if (behaviors[i] == ClientBehavior::dropout) {
          continue;
        }
        if (behaviors[i] == ClientBehavior::corrupt_shares) {
          contributions.push_back(0xAAAAAAAAAAAAAAAAULL);  // fixed pattern
        } else {
          contributions.push_back(bits_stream.derive(i).derive(
              2 * pair + static_cast<std::size_t>(half)).next_u64());
        }
      }
      uniforms.push_back(
          joint_uniform(contributions, l_bits, fxp, cfg, shares_stream));
    }
  }
  log_step(4, "generated " + std::to_string(n_pairs) +
                  " uniform pairs at " + std::to_string(l_bits) + " bits");

  // (5) Box-Muller transform on shares; odd d discards the last half-pair.
  for (std::size_t pair = 0; pair < n_pairs; ++pair) {
    auto [a, b] =
        box_muller_shared(uniforms[2 * pair].shares,
                          uniforms[2 * pair + 1].shares, noise_scale, l_bits,
                          backend);
    noise_shares[2 * pair] = std::move(a);
    if (2 * pair + 1 < d) {
      noise_shares[2 * pair + 1] = std::move(b);
    }
  }
  log_step(5, "transformed uniforms to " + std::to_string(d) +
                  " gaussian noise coordinates, scale " +
                  std::to_string(noise_scale));

  // Reconstruct the noise itself for the round record (the server learns
  // only the noisy aggregate; this is diagnostic output for audits).
  result.noise_raw.resize(d);
  result.noise.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    const auto lanes = drop_and_corrupt_lanes(noise_shares[k], behaviors,
                                              garbage, cfg.modulus);
    const auto value = robust_reconstruct(lanes, cfg);
    if (!value.has_value()) {
      throw SecureProtocolError("secure_noisy_round: noise reconstruction failed");
    }
    result.noise_raw[k] = *value;
    result.noise[k] = fxp_decode(*value, fxp, cfg);
  }

  // (6) share aggregation: each party sums valid input shares plus its
  // noise share locally.
  // (7) noisy aggregate reconstruction per coordinate.
  result.aggregate_raw.resize(d);
  result.aggregate.resize(d);
  std::size_t reconstructed = 0;
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<Share> lane_sums(n);
    for (std::size_t j = 0; j < n; ++j) {
      std::uint64_t acc = noise_shares[k][j].value;
      for (std::size_t i = 0; i < n; ++i) {
        if (!result.valid[i]) {
          continue;
        }
        acc = mod_add(acc, input_shares[i][k][j].value, cfg.modulus);
      }
      lane_sums[j] = Share{j + 1, acc};
    }
    const auto lanes =
        drop_and_corrupt_lanes(lane_sums, behaviors, garbage, cfg.modulus);
    const auto value = robust_reconstruct(lanes, cfg);
    if (!value.has_value()) {
      throw SecureProtocolError(
          "secure_noisy_round: aggregate reconstruction failed");
    }
    result.aggregate_raw[k] = *value;
    result.aggregate[k] = fxp_decode(*value, fxp, cfg);
    ++reconstructed;
  }
  log_step(6, "aggregated shares over " + std::to_string(n_valid) +
                  " valid inputs");
  log_step(7, "robustly reconstructed " + std::to_string(reconstructed) +
                  " coordinates");
  return result;
}

}  // namespace dpbrem::secure
