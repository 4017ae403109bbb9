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

#include "dpbrem/protocol/rule.hpp"

namespace dpbrem::protocol {

core::ParamVector DpBremRule::client_submission(
    ClientState& client, const core::ParamVector& theta_prev,
    const learner::ModelSpec& spec, const RoundContext& ctx,
    core::RngStream stream, LocalUpdate* update_info) const {
  LocalUpdate update = client_local_update(client, theta_prev,
                                           ctx.record_bound, spec, stream);
  if (update_info != nullptr) {
    *update_info = update;
  }
  return update.momentum;
}

void DpBremRule::aggregate(ServerState& server,
                           const std::vector<Submission>& submissions,
                           const RoundContext& ctx,
                           core::RngStream noise_stream,
                           RoundOutput& out) const {
  const double noise_stddev =
      server.sigma > 0.0 ? ctx.record_bound * server.sigma : 0.0;
  out = server_aggregate(server, submissions, ctx.client_bound, noise_stddev,
                         noise_stream);
  out.round = ctx.round;
  if (!submissions.empty()) {
    server.theta =
        model_update(server.theta, server.noisy_momentum, ctx.learning_rate);
  }
}

}  // namespace dpbrem::protocol
