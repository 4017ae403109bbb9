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

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "dpbrem/core/vector_ops.hpp"
#include "dpbrem/data/dataset.hpp"

namespace dpbrem::protocol {

struct ClientState {
  std::size_t id = 0;
  std::shared_ptr<const data::Dataset> dataset;
  double record_rate = 1.0;  // p_i
  double beta = 0.9;         // momentum parameter, in [0, 1)
  // Local momentum; absent before the first update.
  std::optional<core::ParamVector> momentum;
  // Momentum of unclipped batch gradients, maintained only when the
  // harness tracks aggregation error.
  std::optional<core::ParamVector> raw_momentum;
};

struct ServerState {
  core::ParamVector theta;
  core::ParamVector noisy_momentum;  // zero before round 1
  double sigma = 0.0;                // noise multiplier
  double client_rate = 1.0;          // q
  std::size_t total_rounds = 0;      // T
  // Per-round positive schedules, each of length total_rounds.
  std::vector<double> record_bound_schedule;
  std::vector<double> client_bound_schedule;
  std::vector<double> learning_rate_schedule;
};

struct RoundDiagnostics {
  double record_clip_fraction = 0.0;   // clipped records / batch records
  double client_clip_fraction = 0.0;   // clipped submissions / |I_t|
  double mean_deviation_norm = 0.0;    // mean ||submission - prev momentum||
};

struct RoundOutput {
  std::size_t round = 0;
  std::vector<std::size_t> sampled;        // I_t
  core::ParamVector aggregate_pre_noise;   // sum of clipped deviations
  core::ParamVector noise;
  core::ParamVector noisy_momentum;        // m~_t
  RoundDiagnostics diagnostics;
};

struct Submission {
  std::size_t client_id = 0;
  core::ParamVector value;
};

}  // namespace dpbrem::protocol
