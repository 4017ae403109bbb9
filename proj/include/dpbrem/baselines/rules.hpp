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

#include "dpbrem/protocol/rule.hpp"

namespace dpbrem::baselines {

enum class RuleKind { dp_brem, lfh, dp_lfh, dp_fedsgd, dp_cm, dp_rsa, ddp_rp };

struct RuleParams {
  double sigma_local = 0.0;   // dp_lfh, dp_rsa, ddp_rp
  std::size_t tau = 0;        // ddp_rp assumed honest count; 0 = all clients
  double range_bound = 0.0;   // ddp_rp element-wise accept range; 0 = none
};

RuleKind rule_kind_from_name(const std::string& name);
std::string rule_name(RuleKind kind);

/**
 * Builds one of the seven aggregation rules behind the common interface.
 * Central noise (dp_brem, dp_fedsgd, dp_cm) uses ServerState::sigma;
 * local noise uses params.sigma_local.
 *
 * Submission and aggregation semantics per kind:
 *   dp_brem   record-clipped gradient momentum; centered clipping +
 *             central noise (protocol::DpBremRule).
 *   lfh       unclipped batch-mean gradient momentum; centered clipping,
 *             no noise.
 *   dp_lfh    record-clipped batch-mean gradient (divisor |batch|) plus
 *             local Gaussian noise R*sigma_local, momentum of the noisy
 *             gradient; LFH server step, no server noise.
 *   dp_fedsgd record-clipped mean gradient, no momentum; server clips
 *             each submission to C around zero, adds central noise,
 *             averages, steps.
 *   dp_cm     record-clipped mean gradient; coordinate-wise median
 *             (lower median on even counts) plus central noise on the
 *             median vector.
 *   dp_rsa    elementwise sign of the record-clipped mean gradient
 *             (sign(0) = 0) plus local noise sigma_local; server
 *             averages and steps.
 *   ddp_rp    record-clipped mean gradient plus local noise
 *             R*sigma_local/sqrt(tau); server accepts a submission only
 *             if every coordinate lies in [-range_bound, range_bound],
 *             averages accepted submissions; all rejected skips the
 *             update.
 */
std::unique_ptr<protocol::AggregationRule> make_rule(RuleKind kind,
                                                     const RuleParams& params);

}  // namespace dpbrem::baselines
