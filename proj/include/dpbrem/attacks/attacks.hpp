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

#include <memory>
#include <string>
#include <vector>

#include "dpbrem/core/rng.hpp"
#include "dpbrem/core/vector_ops.hpp"
#include "dpbrem/data/dataset.hpp"
#include "dpbrem/learner/model.hpp"
#include "dpbrem/protocol/rule.hpp"
#include "dpbrem/protocol/state.hpp"

namespace dpbrem::attacks {

enum class AttackKind { none, alie, ipm, lf, mtb };

enum class MtbPerturbation { inverse_unit, inverse_std, inverse_sign };

struct AttackConfig {
  AttackKind kind = AttackKind::none;
  double byz_fraction = 0.0;  // in [0, 0.5)
  double ipm_scale = 1.0;
  double gamma_max = 50.0;  // mtb search ceiling
  MtbPerturbation perturbation = MtbPerturbation::inverse_unit;
  double lf_scale = 1.0;  // optional rescale of the flipped-gradient difference
  double alie_z_max_override = -1.0;  // < 0: derive from (n, |B|)
};

/**
 * Everything the adversary can see: the corrupted clients' own data and
 * honest-computed submissions plus the public broadcast state. Honest
 * clients' data and momenta are structurally absent.
 */
struct ByzKnowledge {
  std::size_t n_clients = 0;
  std::vector<std::size_t> corrupted_ids;
  // Aligned with corrupted_ids: what each corrupted client would submit
  // if it behaved honestly under the active rule this round.
  std::vector<core::ParamVector> honest_submissions;
  core::ParamVector theta_prev;
  core::ParamVector noisy_momentum_prev;
};

// Per-coordinate mean and population standard deviation of the corrupted
// clients' honest-computed submissions.
std::pair<core::ParamVector, core::ParamVector> estimate_benign(
    const ByzKnowledge& knowledge);

// mean + z_max * std per coordinate with
//   z_max = PhiInv((n - |B| - s) / (n - |B|)),  s = floor(n/2 + 1) - |B|;
// s <= 0 caps z_max at PhiInv(1 - 1/(n - |B|)).
core::ParamVector alie_craft(const ByzKnowledge& knowledge,
                             double z_max_override = -1.0);

// -scale * mean of the corrupted clients' honest submissions.
core::ParamVector ipm_craft(const ByzKnowledge& knowledge, double scale);

// Largest gamma in [0, gamma_max] (20 bisection steps) such that
// mean + gamma * p stays within the corrupted submissions' diameter of
// every corrupted submission; returns mean + gamma* p.
core::ParamVector mtb_craft(const ByzKnowledge& knowledge, double gamma_max,
                            MtbPerturbation perturbation);

/**
 * Adversary driving a fixed corrupted set each round. All corrupted
 * clients in a round submit the identical crafted vector.
 */
class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual const std::vector<std::size_t>& corrupted() const = 0;
  virtual core::ParamVector craft(const ByzKnowledge& knowledge,
                                  const protocol::RoundContext& ctx,
                                  core::RngStream stream) = 0;
};

/**
 * Builds the adversary for a config; kind none or an empty corrupted set
 * yields nullptr (honest behaviour). The label-flip adversary keeps
 * shadow client states over label-flipped copies of the corrupted
 * datasets (label -> L-1-label) and submits the difference between the
 * flipped and honest submission means, scaled by lf_scale.
 */
std::unique_ptr<Adversary> make_adversary(
    const AttackConfig& config, std::size_t n_clients,
    const std::vector<protocol::ClientState>& clients,
    const protocol::AggregationRule& rule, const learner::ModelSpec& spec);

AttackKind attack_kind_from_name(const std::string& name);

}  // namespace dpbrem::attacks
