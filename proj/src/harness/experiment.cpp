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

#include "dpbrem/harness/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "dpbrem/attacks/attacks.hpp"
#include "dpbrem/baselines/rules.hpp"
#include "dpbrem/data/idx.hpp"
#include "dpbrem/protocol/round.hpp"
#include "dpbrem/secure/round.hpp"

namespace dpbrem::harness {

namespace {

using baselines::RuleKind;

constexpr double kUnbounded = 1e18;  // stands in for an infinite bound

bool uses_local_noise(RuleKind kind) {
  return kind == RuleKind::dp_lfh || kind == RuleKind::dp_rsa ||
         kind == RuleKind::ddp_rp;
}

bool uses_central_noise(RuleKind kind) {
  return kind == RuleKind::dp_brem || kind == RuleKind::dp_fedsgd ||
         kind == RuleKind::dp_cm;
}

std::string format_double(double v) {
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Instance {
  data::Dataset train;
  data::Dataset test;
  std::vector<data::Dataset> parts;
  learner::ModelSpec spec;
  std::size_t min_client_records = 0;
};

Instance build_instance(const ExperimentConfig& c,
                        const core::RngStream& root) {
  Instance inst;
  if (c.dataset.kind == "synthetic") {
    inst.train = data::gen_synthetic(
        root.derive("data"), c.dataset.n_records, c.dataset.d_in,
        c.dataset.num_classes, c.dataset.class_separation,
        c.dataset.label_noise);
    inst.test = data::gen_synthetic(
        root.derive("test_data"), c.dataset.test_records, c.dataset.d_in,
        c.dataset.num_classes, c.dataset.class_separation, /*label_noise=*/0.0);
  } else {
    inst.train = data::load_idx(c.dataset.images, c.dataset.labels);
    if (!c.dataset.test_images.empty() && !c.dataset.test_labels.empty()) {
      inst.test = data::load_idx(c.dataset.test_images, c.dataset.test_labels);
      inst.test.num_classes = inst.train.num_classes;
    } else {
      inst.test = inst.train;
    }
  }

  data::PartitionSpec part;
  part.n_clients = c.partition.n_clients;
  part.shards_per_client = c.partition.shards_per_client;
  part.alpha = c.partition.alpha;
  if (c.partition.scheme == "shards") {
    part.scheme = data::PartitionScheme::shards;
  } else if (c.partition.scheme == "dirichlet") {
    part.scheme = data::PartitionScheme::dirichlet;
  } else {
    part.scheme = data::PartitionScheme::uniform;
  }
  inst.parts = data::partition(inst.train, part, root.derive("partition"));

  inst.min_client_records = inst.parts.front().size();
  for (const auto& p : inst.parts) {
    inst.min_client_records = std::min(inst.min_client_records, p.size());
  }

  inst.spec.kind = c.model.kind == "mlp" ? learner::ModelKind::mlp
                                         : learner::ModelKind::logistic_regression;
  inst.spec.d_in = inst.train.feature_dim();
  inst.spec.num_classes = inst.train.num_classes;
  inst.spec.hidden = c.model.hidden;
  return inst;
}

// Accountant view of the configured mechanism. Local-noise rules get no
// client-level amplification (q forced to 1) and no client-clip branch.
accountant::PrivacyConfig privacy_config(const ExperimentConfig& c,
                                         RuleKind kind,
                                         std::size_t min_records,
                                         double sigma) {
  accountant::PrivacyConfig pc;
  pc.rounds = c.params.rounds;
  pc.record_rate = c.params.record_rate;
  pc.records = min_records;
  pc.delta = c.accountant.delta;
  pc.sigma = sigma;
  if (uses_local_noise(kind)) {
    pc.client_rate = 1.0;
    pc.record_bound = c.params.record_bound0;
    pc.client_bound = kUnbounded;  // p*n branch always active
  } else {
    pc.client_rate = c.params.client_rate;
    pc.record_bound = c.params.record_bound0;
    pc.client_bound = c.params.client_bound0;
  }
  return pc;
}

double resolve_sigma(const ExperimentConfig& c, RuleKind kind,
                     std::size_t min_records) {
  if (kind == RuleKind::lfh) {
    return 0.0;
  }
  const bool local = uses_local_noise(kind);
  const double explicit_sigma = local ? c.params.sigma_local : c.params.sigma;
  if (explicit_sigma >= 0.0) {
    return explicit_sigma;
  }
  if (!(c.params.epsilon_target > 0.0)) {
    throw std::invalid_argument(
        "experiment: need sigma or a positive epsilon_target");
  }
  accountant::PrivacyConfig pc = privacy_config(c, kind, min_records, 0.0);
  return accountant::calibrate_sigma(c.params.epsilon_target, pc);
}

double epsilon_spent(const ExperimentConfig& c, RuleKind kind,
                     std::size_t min_records, double sigma,
                     std::size_t rounds_done) {
  if (sigma <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  accountant::PrivacyConfig pc = privacy_config(c, kind, min_records, sigma);
  pc.rounds = rounds_done;
  return accountant::report(pc).epsilon;
}

struct SecureEngine {
  secure::SharingConfig cfg;
  secure::FxpParams fxp;
  unsigned l_bits = 16;
  bool transcript = false;
  std::unique_ptr<secure::SimulatedMpcBackend> backend;
  std::ofstream transcript_out;
};

}  // namespace

const char* const kMetricsHeader =
    "round,test_accuracy,train_loss,epsilon_spent,clip_fraction_record,"
    "clip_fraction_client,agg_error_sq";

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  std::string out = kMetricsHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.round);
    out += ',';
    out += format_double(r.test_accuracy);
    out += ',';
    out += format_double(r.train_loss);
    out += ',';
    out += format_double(r.epsilon_spent);
    out += ',';
    out += format_double(r.clip_fraction_record);
    out += ',';
    out += format_double(r.clip_fraction_client);
    out += ',';
    if (r.agg_error_sq.has_value()) {
      out += format_double(*r.agg_error_sq);
    }
    out += '\n';
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write " + tmp);
    }
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

std::vector<accountant::AccountantReport> accountant_reports(
    const ExperimentConfig& config) {
  const RuleKind kind = baselines::rule_kind_from_name(config.rule);
  const auto root = core::RngStream::from_seed(config.seed);
  const Instance inst = build_instance(config, root);
  const double sigma = resolve_sigma(config, kind, inst.min_client_records);

  std::vector<std::pair<double, std::size_t>> client_rates;
  client_rates.reserve(inst.parts.size());
  for (const auto& part : inst.parts) {
    client_rates.emplace_back(config.params.record_rate, part.size());
  }
  accountant::PrivacyConfig pc =
      privacy_config(config, kind, inst.min_client_records, sigma);
  return accountant::per_client_reports(pc, client_rates);
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                bool write_output) {
  const RuleKind kind = baselines::rule_kind_from_name(config.rule);
  const auto root = core::RngStream::from_seed(config.seed);
  Instance inst = build_instance(config, root);

  const double sigma = resolve_sigma(config, kind, inst.min_client_records);

  baselines::RuleParams rule_params;
  rule_params.sigma_local = uses_local_noise(kind) ? sigma : 0.0;
  rule_params.tau = config.params.tau > 0 ? config.params.tau
                                          : config.partition.n_clients;
  rule_params.range_bound = config.params.range_bound;
  const auto rule = baselines::make_rule(kind, rule_params);

  protocol::ServerState server;
  server.theta = learner::init_model(inst.spec, root.derive("init"));
  server.noisy_momentum.assign(server.theta.size(), 0.0);
  server.sigma = uses_central_noise(kind) ? sigma : 0.0;
  server.client_rate = config.params.client_rate;
  server.total_rounds = config.params.rounds;
  server.record_bound_schedule = protocol::make_linear_schedule(
      config.params.record_bound0,
      config.params.record_bound0 * config.params.record_bound_end_factor,
      config.params.rounds);
  server.client_bound_schedule = protocol::make_linear_schedule(
      config.params.client_bound0,
      config.params.client_bound0 * config.params.client_bound_end_factor,
      config.params.rounds);
  server.learning_rate_schedule = protocol::make_linear_schedule(
      config.params.eta_start, config.params.eta_end, config.params.rounds);

  std::vector<protocol::ClientState> clients(config.partition.n_clients);
  for (std::size_t i = 0; i < clients.size(); ++i) {
    clients[i].id = i;
    clients[i].dataset =
        std::make_shared<data::Dataset>(std::move(inst.parts[i]));
    clients[i].record_rate = config.params.record_rate;
    clients[i].beta = config.params.beta;
  }
  inst.parts.clear();

  attacks::AttackConfig attack;
  attack.kind = attacks::attack_kind_from_name(config.attack.kind);
  attack.byz_fraction = config.attack.byz_fraction;
  attack.ipm_scale = config.attack.ipm_scale;
  attack.gamma_max = config.attack.gamma_max;
  attack.lf_scale = config.attack.lf_scale;
  attack.alie_z_max_override = config.attack.alie_z_max;
  if (config.attack.perturbation == "inverse_unit") {
    attack.perturbation = attacks::MtbPerturbation::inverse_unit;
  } else if (config.attack.perturbation == "inverse_std") {
    attack.perturbation = attacks::MtbPerturbation::inverse_std;
  } else if (config.attack.perturbation == "inverse_sign") {
    attack.perturbation = attacks::MtbPerturbation::inverse_sign;
  } else {
    throw std::invalid_argument("config: attack.perturbation unknown");
  }
  auto adversary =
      attacks::make_adversary(attack, clients.size(), clients, *rule, inst.spec);

  const bool tracking = config.tracking.aggregation_error;
  if (tracking && kind != RuleKind::dp_brem) {
    throw std::invalid_argument(
        "tracking.aggregation_error requires rule dp_brem");
  }
  std::vector<bool> honest(clients.size(), true);
  if (adversary != nullptr) {
    for (const std::size_t id : adversary->corrupted()) {
      honest[id] = false;
    }
  }
  if (tracking) {
    for (auto& c : clients) {
      c.raw_momentum.emplace();  // engage raw-momentum tracking
    }
  }

  std::unique_ptr<SecureEngine> engine;
  if (config.secure.enabled) {
    if (kind != RuleKind::dp_brem) {
      throw std::invalid_argument("secure aggregation requires rule dp_brem");
    }
    if (config.secure.n_parties != clients.size() ||
        config.params.client_rate != 1.0) {
      throw std::invalid_argument(
          "secure aggregation: n parties must equal n clients and q must be 1");
    }
    engine = std::make_unique<SecureEngine>();
    engine->cfg.n_parties = config.secure.n_parties;
    engine->cfg.threshold = config.secure.threshold;
    engine->cfg.validate();
    engine->fxp.fractional_bits = config.secure.fractional_bits;
    engine->l_bits = config.secure.l_bits;
    engine->transcript = config.secure.transcript;
    engine->backend = std::make_unique<secure::SimulatedMpcBackend>(
        engine->cfg, engine->fxp, root.derive("backend"));
    if (engine->transcript && write_output) {
      engine->transcript_out.open(config.output + ".transcript",
                                  std::ios::trunc);
    }
  }

  ExperimentResult result;
  result.sigma_used = sigma;
  result.rows.reserve(config.params.rounds);

  for (std::size_t t = 1; t <= config.params.rounds; ++t) {
    protocol::RoundOutput round_out;
    if (engine == nullptr) {
      round_out = protocol::run_round(server, clients, *rule, adversary.get(),
                                      inst.spec, t, root);
    } else {
      // DP-BREM with the secure pipeline: clients center-clip locally and
      // the noisy sum is computed over shares, bit-exact in fixed point.
      protocol::RoundContext ctx;
      ctx.round = t;
      ctx.total_rounds = server.total_rounds;
      ctx.record_bound = server.record_bound_schedule[t - 1];
      ctx.client_bound = server.client_bound_schedule[t - 1];
      ctx.learning_rate = server.learning_rate_schedule[t - 1];
      const auto round_stream = root.derive("round").derive(t);
      const core::ParamVector theta_prev = server.theta;

      std::vector<core::ParamVector> submissions(clients.size());
      std::size_t batch_records = 0;
      std::size_t clipped_records = 0;
      for (std::size_t i = 0; i < clients.size(); ++i) {
        protocol::LocalUpdate info;
        submissions[i] = rule->client_submission(
            clients[i], theta_prev, inst.spec, ctx,
            round_stream.derive("client").derive(i), &info);
        batch_records += info.batch_size;
        clipped_records += info.clipped_records;
      }
      if (adversary != nullptr) {
        attacks::ByzKnowledge knowledge;
        knowledge.n_clients = clients.size();
        knowledge.corrupted_ids = adversary->corrupted();
        for (const std::size_t cid : knowledge.corrupted_ids) {
          knowledge.honest_submissions.push_back(submissions[cid]);
        }
        knowledge.theta_prev = theta_prev;
        knowledge.noisy_momentum_prev = server.noisy_momentum;
        const core::ParamVector crafted = adversary->craft(
            knowledge, ctx, round_stream.derive("attack"));
        for (const std::size_t cid : knowledge.corrupted_ids) {
          submissions[cid] = crafted;
        }
      }
      std::vector<core::ParamVector> inputs(clients.size());
      std::size_t clipped_clients = 0;
      for (std::size_t i = 0; i < clients.size(); ++i) {
        core::ParamVector deviation =
            core::sub(submissions[i], server.noisy_momentum);
        if (core::l2_norm(deviation) > ctx.client_bound) {
          ++clipped_clients;
        }
        inputs[i] = core::clip(deviation, ctx.client_bound);
      }
      const std::vector<secure::ClientBehavior> behaviors(
          clients.size(), secure::ClientBehavior::honest);
      const double noise_scale =
          server.sigma > 0.0 ? ctx.record_bound * server.sigma : 0.0;
      const auto secure_out = secure::secure_noisy_round(
          inputs, behaviors, ctx.client_bound, noise_scale, engine->fxp,
          engine->cfg, engine->l_bits, *engine->backend,
          round_stream.derive("secure"));
      if (engine->transcript_out.is_open()) {
        for (const auto& line : secure_out.transcript) {
          engine->transcript_out << "round " << t << " " << line << '\n';
        }
      }
      core::ParamVector delta = secure_out.aggregate;
      core::scale_in_place(delta, 1.0 / static_cast<double>(clients.size()));
      core::add_in_place(server.noisy_momentum, delta);
      server.theta = protocol::model_update(server.theta,
                                            server.noisy_momentum,
                                            ctx.learning_rate);
      round_out.round = t;
      round_out.noisy_momentum = server.noisy_momentum;
      round_out.noise = secure_out.noise;
      round_out.diagnostics.record_clip_fraction =
          batch_records == 0 ? 0.0
                             : static_cast<double>(clipped_records) /
                                   static_cast<double>(batch_records);
      round_out.diagnostics.client_clip_fraction =
          static_cast<double>(clipped_clients) /
          static_cast<double>(clients.size());
    }

    MetricsRow row;
    row.round = t;
    row.test_accuracy = learner::accuracy(server.theta, inst.test, inst.spec);
    row.train_loss = learner::loss(server.theta, inst.train, inst.spec);
    row.epsilon_spent =
        epsilon_spent(config, kind, inst.min_client_records, sigma, t);
    row.clip_fraction_record = round_out.diagnostics.record_clip_fraction;
    row.clip_fraction_client = round_out.diagnostics.client_clip_fraction;
    if (tracking) {
      core::VectorKahanSum raw_mean(server.theta.size());
      std::size_t n_honest = 0;
      for (std::size_t i = 0; i < clients.size(); ++i) {
        if (!honest[i] || !clients[i].raw_momentum.has_value() ||
            clients[i].raw_momentum->empty()) {
          continue;
        }
        raw_mean.add(*clients[i].raw_momentum);
        ++n_honest;
      }
      core::ParamVector target = raw_mean.value();
      core::scale_in_place(target, 1.0 / static_cast<double>(n_honest));
      core::sub_in_place(target, server.noisy_momentum);
      const double err = core::l2_norm(target);
      row.agg_error_sq = err * err;
    }
    result.rows.push_back(row);
  }

  // Final accuracy: mean over rounds in [0.9 T, T].
  const std::size_t first_round = static_cast<std::size_t>(
      std::ceil(0.9 * static_cast<double>(config.params.rounds)));
  core::KahanSum acc;
  std::size_t count = 0;
  for (const auto& row : result.rows) {
    if (row.round >= first_round) {
      acc.add(row.test_accuracy);
      ++count;
    }
  }
  result.final_accuracy =
      count == 0 ? 0.0 : acc.value() / static_cast<double>(count);

  std::vector<std::pair<double, std::size_t>> client_rates;
  for (const auto& c : clients) {
    client_rates.emplace_back(c.record_rate, c.dataset->size());
  }
  accountant::PrivacyConfig pc =
      privacy_config(config, kind, inst.min_client_records, sigma);
  result.reports = accountant::per_client_reports(pc, client_rates);

  if (write_output) {
    write_file_atomic(config.output, metrics_to_csv(result.rows));
    result.metrics_path = config.output;
  }
  return result;
}

SweepResult sweep(const nlohmann::json& base_config,
                  const nlohmann::json& grid, std::size_t max_points) {
  if (!grid.is_object() || grid.empty()) {
    throw std::invalid_argument("sweep: grid must be a nonempty object");
  }
  std::vector<std::string> keys;
  std::vector<std::vector<nlohmann::json>> values;
  std::size_t cardinality = 1;
  for (const auto& [key, value] : grid.items()) {
    if (!value.is_array() || value.empty()) {
      throw std::invalid_argument("sweep: grid values must be nonempty arrays");
    }
    keys.push_back(key);
    values.emplace_back(value.begin(), value.end());
    cardinality *= value.size();
    if (cardinality > max_points) {
      throw std::invalid_argument("sweep: grid exceeds the point cap");
    }
  }

  const ExperimentConfig base = parse_config(base_config);
  const std::string base_output = base.output;
  const auto seed_stream =
      core::RngStream::from_seed(base.seed).derive("sweep");

  SweepResult result;
  std::string index_csv = "point";
  for (const auto& k : keys) {
    index_csv += "," + k;
  }
  index_csv += ",final_accuracy,file\n";

  for (std::size_t point = 0; point < cardinality; ++point) {
    nlohmann::json config_json = base_config;
    nlohmann::json assignment = nlohmann::json::object();
    std::size_t rest = point;
    for (std::size_t k = 0; k < keys.size(); ++k) {
      const std::size_t idx = rest % values[k].size();
      rest /= values[k].size();
      set_json_path(config_json, keys[k], values[k][idx]);
      assignment[keys[k]] = values[k][idx];
    }
    char suffix[32];
    std::snprintf(suffix, sizeof(suffix), "_%04zu", point);
    set_json_path(config_json, "output", base_output + suffix + ".csv");
    set_json_path(config_json, "seed",
                  seed_stream.derive(point).next_u64() >> 1);

    const ExperimentConfig point_config = parse_config(config_json);
    const ExperimentResult run = run_experiment(point_config, true);

    SweepPoint sp;
    sp.assignment = assignment;
    sp.final_accuracy = run.final_accuracy;
    sp.metrics_path = point_config.output;
    result.points.push_back(sp);

    index_csv += std::to_string(point);
    for (const auto& k : keys) {
      index_csv += "," + assignment[k].dump();
    }
    index_csv += "," + format_double(run.final_accuracy);
    index_csv += "," + point_config.output + "\n";
  }
  result.index_path = base_output + ".index.csv";
  write_file_atomic(result.index_path, index_csv);
  return result;
}

}  // namespace dpbrem::harness
