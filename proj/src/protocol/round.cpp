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

#include "dpbrem/protocol/round.hpp"

#include <algorithm>
#include <stdexcept>

#include "dpbrem/attacks/attacks.hpp"

namespace dpbrem::protocol {

RoundOutput run_round(ServerState& server, std::vector<ClientState>& clients,
                      const AggregationRule& rule,
                      attacks::Adversary* adversary,
                      const learner::ModelSpec& spec, std::size_t round,
                      const core::RngStream& experiment_stream) {
  if (round < 1 || round > server.total_rounds) {
    throw std::invalid_argument("run_round: round out of range");
  }
  RoundContext ctx;
  ctx.round = round;
  ctx.total_rounds = server.total_rounds;
  ctx.record_bound = server.record_bound_schedule.at(round - 1);
  ctx.client_bound = server.client_bound_schedule.at(round - 1);
  ctx.learning_rate = server.learning_rate_schedule.at(round - 1);

  const auto round_stream = experiment_stream.derive("round").derive(round);
  const auto sampled = sample_clients(clients.size(), server.client_rate,
                                      round_stream.derive("sample"));

  const core::ParamVector theta_prev = server.theta;

  // All clients advance local state each round; only sampled ones submit.
  std::vector<core::ParamVector> honest(clients.size());
  std::size_t batch_records = 0;
  std::size_t clipped_records = 0;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    LocalUpdate info;
    honest[i] = rule.client_submission(clients[i], theta_prev, spec, ctx,
                                       round_stream.derive("client").derive(i),
                                       &info);
    batch_records += info.batch_size;
    clipped_records += info.clipped_records;
  }

  // The adversary crafts every round (its shadow state advances like any
  // client's), whether or not a corrupted client happens to be sampled.
  core::ParamVector crafted;
  if (adversary != nullptr) {
    attacks::ByzKnowledge knowledge;
    knowledge.n_clients = clients.size();
    knowledge.corrupted_ids = adversary->corrupted();
    knowledge.honest_submissions.reserve(knowledge.corrupted_ids.size());
    for (const std::size_t cid : knowledge.corrupted_ids) {
      knowledge.honest_submissions.push_back(honest[cid]);
    }
    knowledge.theta_prev = theta_prev;
    knowledge.noisy_momentum_prev = server.noisy_momentum;
    crafted = adversary->craft(knowledge, ctx, round_stream.derive("attack"));
  }

  std::vector<Submission> submissions;
  submissions.reserve(sampled.size());
  for (const std::size_t id : sampled) {
    const bool byzantine =
        adversary != nullptr &&
        std::find(adversary->corrupted().begin(), adversary->corrupted().end(),
                  id) != adversary->corrupted().end();
    submissions.push_back({id, byzantine ? crafted : honest[id]});
  }

  RoundOutput out;
  rule.aggregate(server, submissions, ctx, round_stream.derive("noise"), out);
  out.round = round;
  out.diagnostics.record_clip_fraction =
      batch_records == 0 ? 0.0
                         : static_cast<double>(clipped_records) /
                               static_cast<double>(batch_records);
  return out;
}

}  // namespace dpbrem::protocol
