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

#include "dpbrem/baselines/rules.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dpbrem/data/dataset.hpp"

namespace dpbrem::baselines {

namespace {

using core::ParamVector;
using protocol::ClientState;
using protocol::LocalUpdate;
using protocol::RoundContext;
using protocol::RoundOutput;
using protocol::ServerState;
using protocol::Submission;

void fill_update(LocalUpdate* info, const ParamVector& value,
                 std::size_t batch_size, std::size_t clipped) {
  if (info != nullptr) {
    info->momentum = value;
    info->batch_size = batch_size;
    info->clipped_records = clipped;
  }
}

struct BatchGradient {
  ParamVector value;
  std::size_t batch_size = 0;
  std::size_t clipped_records = 0;
};

// Batch-mean gradient over a fresh Poisson batch. divisor_expected picks
// the 1/(p_i |D_i|) normalisation; otherwise 1/|batch| (1 when empty).
BatchGradient batch_gradient(const ClientState& client,
                             const ParamVector& theta_prev,
                             const learner::ModelSpec& spec,
                             core::RngStream& stream, double record_bound,
                             bool clip_records, bool divisor_expected) {
  const data::Dataset& dataset = *client.dataset;
  auto batch_stream = stream.derive("batch");
  const auto batch = data::poisson_sample_indices(
      dataset.size(), client.record_rate, batch_stream);

  core::VectorKahanSum sum(theta_prev.size());
  std::size_t clipped = 0;
  for (const std::size_t idx : batch) {
    ParamVector grad =
        learner::per_record_grad(theta_prev, dataset.records[idx], spec);
    if (clip_records) {
      if (core::l2_norm(grad) > record_bound) {
        ++clipped;
      }
      grad = core::clip(grad, record_bound);
    }
    sum.add(grad);
  }
  BatchGradient out;
  out.value = sum.value();
  out.batch_size = batch.size();
  out.clipped_records = clipped;
  const double divisor =
      divisor_expected
          ? client.record_rate * static_cast<double>(dataset.size())
          : static_cast<double>(std::max<std::size_t>(batch.size(), 1));
  core::scale_in_place(out.value, 1.0 / divisor);
  return out;
}

void momentum_step(ClientState& client, const ParamVector& gradient) {
  if (!client.momentum.has_value()) {
    client.momentum = gradient;
    return;
  }
  ParamVector& m = *client.momentum;
  for (std::size_t k = 0; k < m.size(); ++k) {
    m[k] = (1.0 - client.beta) * gradient[k] + client.beta * m[k];
  }
}

// LFH server step: centered clipping of submissions around the running
// momentum, no noise, then the model step.
void lfh_server_step(ServerState& server,
                     const std::vector<Submission>& submissions,
                     const RoundContext& ctx, RoundOutput& out) {
  out = protocol::server_aggregate(server, submissions, ctx.client_bound,
                                   /*noise_stddev=*/0.0, core::RngStream());
  out.round = ctx.round;
  if (!submissions.empty()) {
    server.theta = protocol::model_update(server.theta, server.noisy_momentum,
                                          ctx.learning_rate);
  }
}

class LfhRule final : public protocol::AggregationRule {
 public:
  std::string name() const override { return "lfh"; }

  ParamVector client_submission(ClientState& client,
                                const ParamVector& theta_prev,
                                const learner::ModelSpec& spec,
                                const RoundContext& ctx,
                                core::RngStream stream,
                                LocalUpdate* info) const override {
    (void)ctx;
    BatchGradient g = batch_gradient(client, theta_prev, spec, stream,
                                     /*record_bound=*/0.0,
                                     /*clip_records=*/false,
                                     /*divisor_expected=*/false);
    momentum_step(client, g.value);
    fill_update(info, *client.momentum, g.batch_size, 0);
    return *client.momentum;
  }

  void aggregate(ServerState& server, const std::vector<Submission>& subs,
                 const RoundContext& ctx, core::RngStream noise_stream,
                 RoundOutput& out) const override {
    (void)noise_stream;
    lfh_server_step(server, subs, ctx, out);
  }
};

class DpLfhRule final : public protocol::AggregationRule {
 public:
  explicit DpLfhRule(const RuleParams& params) : params_(params) {}

  std::string name() const override { return "dp_lfh"; }

  ParamVector client_submission(ClientState& client,
                                const ParamVector& theta_prev,
                                const learner::ModelSpec& spec,
                                const RoundContext& ctx,
                                core::RngStream stream,
                                LocalUpdate* info) const override {
    BatchGradient g = batch_gradient(client, theta_prev, spec, stream,
                                     ctx.record_bound,
                                     /*clip_records=*/true,
                                     /*divisor_expected=*/false);
    const double noise_stddev = ctx.record_bound * params_.sigma_local;
    if (noise_stddev > 0.0) {
      auto noise_stream = stream.derive("local_noise");
      const ParamVector noise =
          core::gaussian_vector(noise_stream, g.value.size(), noise_stddev);
      core::add_in_place(g.value, noise);
    }
    momentum_step(client, g.value);
    fill_update(info, *client.momentum, g.batch_size, g.clipped_records);
    return *client.momentum;
  }

  void aggregate(ServerState& server, const std::vector<Submission>& subs,
                 const RoundContext& ctx, core::RngStream noise_stream,
                 RoundOutput& out) const override {
    (void)noise_stream;
    lfh_server_step(server, subs, ctx, out);
  }

 private:
  RuleParams params_;
};

class DpFedSgdRule final : public protocol::AggregationRule {
 public:
  std::string name() const override { return "dp_fedsgd"; }

  ParamVector client_submission(ClientState& client,
                                const ParamVector& theta_prev,
                                const learner::ModelSpec& spec,
                                const RoundContext& ctx,
                                core::RngStream stream,
                                LocalUpdate* info) const override {
    BatchGradient g = batch_gradient(client, theta_prev, spec, stream,
                                     ctx.record_bound,
                                     /*clip_records=*/true,
                                     /*divisor_expected=*/true);
    fill_update(info, g.value, g.batch_size, g.clipped_records);
    return g.value;
  }

  void aggregate(ServerState& server, const std::vector<Submission>& subs,
                 const RoundContext& ctx, core::RngStream noise_stream,
                 RoundOutput& out) const override {
    out.round = ctx.round;
    const std::size_t d = server.theta.size();
    out.aggregate_pre_noise.assign(d, 0.0);
    out.noise.assign(d, 0.0);
    out.noisy_momentum = server.noisy_momentum;
    for (const auto& s : subs) {
      out.sampled.push_back(s.client_id);
    }
    if (subs.empty()) {
      return;
    }
    std::vector<const Submission*> ordered;
    for (const auto& s : subs) {
      ordered.push_back(&s);
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const Submission* a, const Submission* b) {
                return a->client_id < b->client_id;
              });
    core::VectorKahanSum sum(d);
    std::size_t clipped = 0;
    core::KahanSum norms;
    for (const Submission* s : ordered) {
      const double norm = core::l2_norm(s->value);
      norms.add(norm);
      if (norm > ctx.client_bound) {
        ++clipped;
      }
      sum.add(core::clip(s->value, ctx.client_bound));
    }
    out.aggregate_pre_noise = sum.value();
    const double noise_stddev =
        server.sigma > 0.0 ? ctx.record_bound * server.sigma : 0.0;
    if (noise_stddev > 0.0) {
      out.noise = core::gaussian_vector(noise_stream, d, noise_stddev);
    }
    ParamVector update = out.aggregate_pre_noise;
    core::add_in_place(update, out.noise);
    core::scale_in_place(update, 1.0 / static_cast<double>(subs.size()));
    server.theta =
        protocol::model_update(server.theta, update, ctx.learning_rate);
    out.diagnostics.client_clip_fraction =
        static_cast<double>(clipped) / static_cast<double>(subs.size());
    out.diagnostics.mean_deviation_norm =
        norms.value() / static_cast<double>(subs.size());
  }
};

class DpCmRule final : public protocol::AggregationRule {
 public:
  std::string name() const override { return "dp_cm"; }

  ParamVector client_submission(ClientState& client,
                                const ParamVector& theta_prev,
                                const learner::ModelSpec& spec,
                                const RoundContext& ctx,
                                core::RngStream stream,
                                LocalUpdate* info) const override {
    BatchGradient g = batch_gradient(client, theta_prev, spec, stream,
                                     ctx.record_bound,
                                     /*clip_records=*/true,
                                     /*divisor_expected=*/true);
    fill_update(info, g.value, g.batch_size, g.clipped_records);
    return g.value;
  }

  void aggregate(ServerState& server, const std::vector<Submission>& subs,
                 const RoundContext& ctx, core::RngStream noise_stream,
                 RoundOutput& out) const override {
    out.round = ctx.round;
    const std::size_t d = server.theta.size();
    out.aggregate_pre_noise.assign(d, 0.0);
    out.noise.assign(d, 0.0);
    out.noisy_momentum = server.noisy_momentum;
    for (const auto& s : subs) {
      out.sampled.push_back(s.client_id);
    }
    if (subs.empty()) {
      throw std::invalid_argument("dp_cm: empty submission set");
    }
    // Coordinate-wise lower median.
    std::vector<double> column(subs.size());
    ParamVector median(d);
    for (std::size_t k = 0; k < d; ++k) {
      for (std::size_t i = 0; i < subs.size(); ++i) {
        column[i] = subs[i].value[k];
      }
      const std::size_t mid = (subs.size() - 1) / 2;
      std::nth_element(column.begin(),
                       column.begin() + static_cast<std::ptrdiff_t>(mid),
                       column.end());
      median[k] = column[mid];
    }
    out.aggregate_pre_noise = median;
    const double noise_stddev =
        server.sigma > 0.0 ? ctx.record_bound * server.sigma : 0.0;
    if (noise_stddev > 0.0) {
      out.noise = core::gaussian_vector(noise_stream, d, noise_stddev);
    }
    ParamVector update = median;
    core::add_in_place(update, out.noise);
    server.theta =
        protocol::model_update(server.theta, update, ctx.learning_rate);
  }
};

class DpRsaRule final : public protocol::AggregationRule {
 public:
  explicit DpRsaRule(const RuleParams& params) : params_(params) {}

  std::string name() const override { return "dp_rsa"; }

  ParamVector client_submission(ClientState& client,
                                const ParamVector& theta_prev,
                                const learner::ModelSpec& spec,
                                const RoundContext& ctx,
                                core::RngStream stream,
                                LocalUpdate* info) const override {
    BatchGradient g = batch_gradient(client, theta_prev, spec, stream,
                                     ctx.record_bound,
                                     /*clip_records=*/true,
                                     /*divisor_expected=*/true);
    ParamVector signs(g.value.size());
    for (std::size_t k = 0; k < signs.size(); ++k) {
      signs[k] =
          g.value[k] > 0.0 ? 1.0 : (g.value[k] < 0.0 ? -1.0 : 0.0);
    }
    if (params_.sigma_local > 0.0) {
      auto noise_stream = stream.derive("local_noise");
      const ParamVector noise = core::gaussian_vector(
          noise_stream, signs.size(), params_.sigma_local);
      core::add_in_place(signs, noise);
    }
    fill_update(info, signs, g.batch_size, g.clipped_records);
    return signs;
  }

  void aggregate(ServerState& server, const std::vector<Submission>& subs,
                 const RoundContext& ctx, core::RngStream noise_stream,
                 RoundOutput& out) const override {
    (void)noise_stream;
    out.round = ctx.round;
    const std::size_t d = server.theta.size();
    out.aggregate_pre_noise.assign(d, 0.0);
    out.noise.assign(d, 0.0);
    out.noisy_momentum = server.noisy_momentum;
    for (const auto& s : subs) {
      out.sampled.push_back(s.client_id);
    }
    if (subs.empty()) {
      return;
    }
    core::VectorKahanSum sum(d);
    for (const auto& s : subs) {
      sum.add(s.value);
    }
    ParamVector update = sum.value();
    core::scale_in_place(update, 1.0 / static_cast<double>(subs.size()));
    out.aggregate_pre_noise = update;
    server.theta =
        protocol::model_update(server.theta, update, ctx.learning_rate);
  }

 private:
  RuleParams params_;
};

class DdpRpRule final : public protocol::AggregationRule {
 public:
  explicit DdpRpRule(const RuleParams& params) : params_(params) {}

  std::string name() const override { return "ddp_rp"; }

  ParamVector client_submission(ClientState& client,
                                const ParamVector& theta_prev,
                                const learner::ModelSpec& spec,
                                const RoundContext& ctx,
                                core::RngStream stream,
                                LocalUpdate* info) const override {
    BatchGradient g = batch_gradient(client, theta_prev, spec, stream,
                                     ctx.record_bound,
                                     /*clip_records=*/true,
                                     /*divisor_expected=*/true);
    if (params_.sigma_local > 0.0) {
      // Distributed noise: each client adds a 1/sqrt(tau) share so the
      // sum over tau honest clients reaches the full R*sigma scale.
      const double tau = params_.tau > 0
                             ? static_cast<double>(params_.tau)
                             : 1.0;
      const double noise_stddev =
          ctx.record_bound * params_.sigma_local / std::sqrt(tau);
      auto noise_stream = stream.derive("local_noise");
      const ParamVector noise =
          core::gaussian_vector(noise_stream, g.value.size(), noise_stddev);
      core::add_in_place(g.value, noise);
    }
    fill_update(info, g.value, g.batch_size, g.clipped_records);
    return g.value;
  }

  void aggregate(ServerState& server, const std::vector<Submission>& subs,
                 const RoundContext& ctx, core::RngStream noise_stream,
                 RoundOutput& out) const override {
    (void)noise_stream;
    out.round = ctx.round;
    const std::size_t d = server.theta.size();
    out.aggregate_pre_noise.assign(d, 0.0);
    out.noise.assign(d, 0.0);
    out.noisy_momentum = server.noisy_momentum;
    // Element-wise range check stands in for the range proof: one
    // out-of-range coordinate rejects the whole submission.
    std::vector<const Submission*> accepted;
    for (const auto& s : subs) {
      out.sampled.push_back(s.client_id);
      bool ok = true;
      if (params_.range_bound > 0.0) {
        for (const double v : s.value) {
          if (std::abs(v) > params_.range_bound) {
            ok = false;
            break;
          }
        }
      }
      if (ok) {
        accepted.push_back(&s);
      }
    }
    if (accepted.empty()) {
      return;  // all rejected: skip the update
    }
    std::sort(accepted.begin(), accepted.end(),
              [](const Submission* a, const Submission* b) {
                return a->client_id < b->client_id;
              });
    core::VectorKahanSum sum(d);
    for (const Submission* s : accepted) {
      sum.add(s->value);
    }
    ParamVector update = sum.value();
    core::scale_in_place(update, 1.0 / static_cast<double>(accepted.size()));
    out.aggregate_pre_noise = update;
    out.diagnostics.client_clip_fraction =
        1.0 - static_cast<double>(accepted.size()) /
                  static_cast<double>(subs.size());
    server.theta =
        protocol::model_update(server.theta, update, ctx.learning_rate);
  }

 private:
  RuleParams params_;
};

}  // namespace

RuleKind rule_kind_from_name(const std::string& name) {
  if (name == "dp_brem") return RuleKind::dp_brem;
  if (name == "lfh") return RuleKind::lfh;
  if (name == "dp_lfh") return RuleKind::dp_lfh;
  if (name == "dp_fedsgd") return RuleKind::dp_fedsgd;
  if (name == "dp_cm") return RuleKind::dp_cm;
  if (name == "dp_rsa") return RuleKind::dp_rsa;
  if (name == "ddp_rp") return RuleKind::ddp_rp;
  throw std::invalid_argument("unknown rule: " + name);
}

std::string rule_name(RuleKind kind) {
  switch (kind) {
    case RuleKind::dp_brem: return "dp_brem";
    case RuleKind::lfh: return "lfh";
    case RuleKind::dp_lfh: return "dp_lfh";
    case RuleKind::dp_fedsgd: return "dp_fedsgd";
    case RuleKind::dp_cm: return "dp_cm";
    case RuleKind::dp_rsa: return "dp_rsa";
    case RuleKind::ddp_rp: return "ddp_rp";
  }
  throw std::invalid_argument("unknown rule kind");
}

std::unique_ptr<protocol::AggregationRule> make_rule(RuleKind kind,
                                                     const RuleParams& params) {
  switch (kind) {
    case RuleKind::dp_brem:
      return std::make_unique<protocol::DpBremRule>();
    case RuleKind::lfh:
      return std::make_unique<LfhRule>();
    case RuleKind::dp_lfh:
      return std::make_unique<DpLfhRule>(params);
    case RuleKind::dp_fedsgd:
      return std::make_unique<DpFedSgdRule>();
    case RuleKind::dp_cm:
      return std::make_unique<DpCmRule>();
    case RuleKind::dp_rsa:
      return std::make_unique<DpRsaRule>(params);
    case RuleKind::ddp_rp:
      return std::make_unique<DdpRpRule>(params);
  }
  throw std::invalid_argument("unknown rule kind");
}

}  // namespace dpbrem::baselines
