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

#include <string>

#include "dpbrem/core/rng.hpp"
#include "dpbrem/learner/model.hpp"
#include "dpbrem/protocol/ops.hpp"
#include "dpbrem/protocol/state.hpp"

namespace dpbrem::protocol {

struct RoundContext {
  std::size_t round = 1;  // 1-based
  std::size_t total_rounds = 1;
  double record_bound = 1.0;   // R(t)
  double client_bound = 1.0;   // C(t)
  double learning_rate = 0.1;  // eta(t)
};

/**
 * Common per-round contract shared by every aggregation rule: clients map
 * (state, previous model) to a submission vector; the server maps the
 * sampled submissions to the next model. The round driver and harness
 * depend only on this interface, so rules are swappable by configuration.
 */
class AggregationRule {
 public:
  virtual ~AggregationRule() = default;

  virtual std::string name() const = 0;

  // Honest client computation for this round. Mutates the client's
  // momentum state when the rule uses momentum.
  virtual core::ParamVector client_submission(
      ClientState& client, const core::ParamVector& theta_prev,
      const learner::ModelSpec& spec, const RoundContext& ctx,
      core::RngStream stream, LocalUpdate* update_info) const = 0;

  // Server step over the sampled submissions; updates server.theta (and
  // rule-specific server state) and fills the round record.
  virtual void aggregate(ServerState& server,
                         const std::vector<Submission>& submissions,
                         const RoundContext& ctx,
                         core::RngStream noise_stream,
                         RoundOutput& out) const = 0;
};

/**
 * Centered-clipped noisy momentum aggregation: clients submit
 * record-clipped gradient momentum; the server clips each submission's
 * deviation from the previous noisy momentum to C, adds Gaussian noise
 * with standard deviation R(t) * sigma to the sum, averages over the
 * sampled set, and takes a gradient step.
 */
class DpBremRule final : public AggregationRule {
 public:
  std::string name() const override { return "dp_brem"; }

  core::ParamVector client_submission(ClientState& client,
                                      const core::ParamVector& theta_prev,
                                      const learner::ModelSpec& spec,
                                      const RoundContext& ctx,
                                      core::RngStream stream,
                                      LocalUpdate* update_info) const override;

  void aggregate(ServerState& server,
                 const std::vector<Submission>& submissions,
                 const RoundContext& ctx, core::RngStream noise_stream,
                 RoundOutput& out) const override;
};

}  // namespace dpbrem::protocol
