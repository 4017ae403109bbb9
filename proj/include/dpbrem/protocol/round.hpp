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

#include "dpbrem/protocol/rule.hpp"
#include "dpbrem/protocol/state.hpp"

namespace dpbrem::attacks {
class Adversary;
}

namespace dpbrem::protocol {

/**
 * One full round: broadcast theta_{t-1}, Bernoulli(q)-sample I_t, let
 * every client advance its local state (sampled or not), replace sampled
 * corrupted clients' submissions with the adversary's crafted vector,
 * aggregate, and update the model. Client streams are derived from
 * (round, client id), so execution order cannot change the result.
 */
RoundOutput run_round(ServerState& server, std::vector<ClientState>& clients,
                      const AggregationRule& rule,
                      attacks::Adversary* adversary,
                      const learner::ModelSpec& spec, std::size_t round,
                      const core::RngStream& experiment_stream);

}  // namespace dpbrem::protocol
