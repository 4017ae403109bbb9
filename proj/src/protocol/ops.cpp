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

#include "dpbrem/protocol/ops.hpp"

#include <algorithm>
#include <stdexcept>

namespace dpbrem::protocol {

namespace {

void fold_momentum(std::optional<core::ParamVector>& momentum,
                   const core::ParamVector& gradient, double beta) {
  if (!momentum.has_value()) {
    momentum = gradient;
    return;
  }
  core::ParamVector& m = *momentum;
  for (std::size_t k = 0; k < m.size(); ++k) {
    m[k] = (1.0 - beta) * gradient[k] + beta * m[k];
  }
}

}  // namespace

LocalUpdate client_local_update(ClientState& client,
                                const core::ParamVector& theta_prev,
                                double record_bound,
                                const learner::ModelSpec& spec,
                                core::RngStream stream) {
  if (!(record_bound > 0.0)) {
    throw std::invalid_argument("client_local_update: record bound must be > 0");
  }
  if (!client.dataset || client.dataset->empty()) {
    throw std::invalid_argument("client_local_update: client has no data");
  }
  const data::Dataset& dataset = *client.dataset;
  auto batch_stream = stream.derive("batch");
  const auto batch =
      data::poisson_sample_indices(dataset.size(), client.record_rate,
                                   batch_stream);

  const double divisor =
      client.record_rate * static_cast<double>(dataset.size());
  // Raw-momentum tracking is signalled by an engaged (initially empty)
  // vector; see harness aggregation-error tracking.
  const bool wants_raw = client.raw_momentum.has_value();

  core::VectorKahanSum clipped_sum(theta_prev.size());
  core::VectorKahanSum raw_sum(theta_prev.size());
  std::size_t clipped_records = 0;
  for (const std::size_t idx : batch) {
    const core::ParamVector grad =
        learner::per_record_grad(theta_prev, dataset.records[idx], spec);
    if (core::l2_norm(grad) > record_bound) {
      ++clipped_records;
    }
    clipped_sum.add(core::clip(grad, record_bound));
    if (wants_raw) {
      raw_sum.add(grad);
    }
  }
  core::ParamVector gradient = clipped_sum.value();
  core::scale_in_place(gradient, 1.0 / divisor);
  fold_momentum(client.momentum, gradient, client.beta);

  if (wants_raw) {
    core::ParamVector raw_gradient = raw_sum.value();
    core::scale_in_place(raw_gradient, 1.0 / divisor);
    if (client.raw_momentum->empty()) {
      client.raw_momentum = raw_gradient;
    } else {
      core::ParamVector& m = *client.raw_momentum;
      for (std::size_t k = 0; k < m.size(); ++k) {
        m[k] = (1.0 - client.beta) * raw_gradient[k] + client.beta * m[k];
      }
    }
  }

  LocalUpdate out;
  out.momentum = *client.momentum;
  out.batch_size = batch.size();
  out.clipped_records = clipped_records;
  return out;
}

std::vector<std::size_t> sample_clients(std::size_t n_clients, double q,
                                        core::RngStream stream) {
  if (!(q > 0.0 && q <= 1.0)) {
    throw std::invalid_argument("sample_clients: q must be in (0,1]");
  }
  std::vector<std::size_t> sampled;
  for (std::size_t i = 0; i < n_clients; ++i) {
    if (stream.next_unit() < q) {
      sampled.push_back(i);
    }
  }
  return sampled;
}

RoundOutput server_aggregate(ServerState& server,
                             const std::vector<Submission>& submissions,
                             double client_bound, double noise_stddev,
                             core::RngStream noise_stream) {
  const std::size_t d = server.theta.size();
  RoundOutput out;
  out.sampled.reserve(submissions.size());
  for (const auto& s : submissions) {
    out.sampled.push_back(s.client_id);
  }
  out.aggregate_pre_noise.assign(d, 0.0);
  out.noise.assign(d, 0.0);

  if (submissions.empty()) {
    out.noisy_momentum = server.noisy_momentum;
    return out;
  }

  // Canonical client-id order makes the reduction schedule-independent.
  std::vector<const Submission*> ordered;
  ordered.reserve(submissions.size());
  for (const auto& s : submissions) {
    if (s.value.size() != d) {
      throw std::invalid_argument("server_aggregate: dimension mismatch");
    }
    ordered.push_back(&s);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const Submission* a, const Submission* b) {
              return a->client_id < b->client_id;
            });

  core::VectorKahanSum sum(d);
  std::size_t clipped_clients = 0;
  core::KahanSum deviation_norms;
  for (const Submission* s : ordered) {
    core::ParamVector deviation = core::sub(s->value, server.noisy_momentum);
    const double norm = core::l2_norm(deviation);
    deviation_norms.add(norm);
    if (norm > client_bound) {
      ++clipped_clients;
    }
    sum.add(core::clip(deviation, client_bound));
  }
  out.aggregate_pre_noise = sum.value();

  if (noise_stddev > 0.0) {
    out.noise = core::gaussian_vector(noise_stream, d, noise_stddev);
  }

  const double inv = 1.0 / static_cast<double>(submissions.size());
  core::ParamVector next = server.noisy_momentum;
  for (std::size_t k = 0; k < d; ++k) {
    next[k] += inv * (out.aggregate_pre_noise[k] + out.noise[k]);
  }
  server.noisy_momentum = next;
  out.noisy_momentum = std::move(next);

  out.diagnostics.client_clip_fraction =
      static_cast<double>(clipped_clients) /
      static_cast<double>(submissions.size());
  out.diagnostics.mean_deviation_norm =
      deviation_norms.value() / static_cast<double>(submissions.size());
  return out;
}

core::ParamVector model_update(const core::ParamVector& theta_prev,
                               const core::ParamVector& noisy_momentum,
                               double learning_rate) {
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("model_update: learning rate must be > 0");
  }
  core::ParamVector theta = theta_prev;
  core::axpy_in_place(theta, -learning_rate, noisy_momentum);
  return theta;
}

double linear_schedule(double v_start, double v_end, std::size_t t,
                       std::size_t total_rounds) {
  if (t < 1 || t > total_rounds) {
    throw std::invalid_argument("linear_schedule: t out of range");
  }
  if (total_rounds == 1 || v_start == v_end) {
    return v_start;
  }
  const double frac = static_cast<double>(t - 1) /
                      static_cast<double>(total_rounds - 1);
  return v_start + frac * (v_end - v_start);
}

std::vector<double> make_linear_schedule(double v_start, double v_end,
                                         std::size_t total_rounds) {
  std::vector<double> out(total_rounds);
  for (std::size_t t = 1; t <= total_rounds; ++t) {
    out[t - 1] = linear_schedule(v_start, v_end, t, total_rounds);
  }
  return out;
}

}  // namespace dpbrem::protocol
