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

#include "dpbrem/core/rng.hpp"
#include "dpbrem/core/vector_ops.hpp"
#include "dpbrem/learner/model.hpp"
#include "dpbrem/protocol/state.hpp"

namespace dpbrem::protocol {

struct LocalUpdate {
  core::ParamVector momentum;   // m-bar_{t,i} after this round
  std::size_t batch_size = 0;
  std::size_t clipped_records = 0;
};

/**
 * One client-side round: Poisson-sample a batch, average the
 * record-clipped per-record gradients with the 1/(p_i |D_i|) factor, and
 * fold the result into the client momentum. The momentum equals the
 * fresh gradient on the first update and the (1-beta)/beta recursion
 * afterwards; an empty batch contributes a zero gradient but still
 * advances the recursion.
 *
 * When the client tracks raw momentum, the same batch is also averaged
 * without record clipping (divisor 1/(p_i |D_i|) unchanged) and folded
 * into client.raw_momentum.
 */
LocalUpdate client_local_update(ClientState& client,
                                const core::ParamVector& theta_prev,
                                double record_bound,
                                const learner::ModelSpec& spec,
                                core::RngStream stream);

// Independent Bernoulli(q) selection of client ids; the empty set is legal.
std::vector<std::size_t> sample_clients(std::size_t n_clients, double q,
                                        core::RngStream stream);

/**
 * Centered-clipped noisy aggregation:
 *   m~_t = m~_{t-1} + (1/|I_t|) [ sum_i Clip_C(submission_i - m~_{t-1})
 *                                 + N(0, noise_stddev^2 I_d) ]
 * Submissions are reduced in client-id order with compensated summation.
 * An empty I_t leaves the server momentum unchanged and draws no noise.
 * Updates server.noisy_momentum and returns the round record.
 */
RoundOutput server_aggregate(ServerState& server,
                             const std::vector<Submission>& submissions,
                             double client_bound, double noise_stddev,
                             core::RngStream noise_stream);

// theta_t = theta_{t-1} - eta_t * m~_t
core::ParamVector model_update(const core::ParamVector& theta_prev,
                               const core::ParamVector& noisy_momentum,
                               double learning_rate);

// Linear interpolation from v_start (t = 1) to v_end (t = T); T = 1
// returns v_start.
double linear_schedule(double v_start, double v_end, std::size_t t,
                       std::size_t total_rounds);

std::vector<double> make_linear_schedule(double v_start, double v_end,
                                         std::size_t total_rounds);

}  // namespace dpbrem::protocol
