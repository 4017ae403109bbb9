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

#include <doctest.h>

#include <cmath>
#include <memory>

#include "dpbrem/baselines/rules.hpp"
#include "dpbrem/protocol/round.hpp"

using namespace dpbrem;

namespace {

std::shared_ptr<data::Dataset> separable_dataset(std::uint64_t seed,
                                                 std::size_t n) {
  return std::make_shared<data::Dataset>(data::gen_synthetic(
      core::RngStream::from_seed(seed), n, 2, 2, 10.0, 0.0));
}

learner::ModelSpec tiny_spec() {
  return {learner::ModelKind::logistic_regression, 2, 2, 0};
}

protocol::ServerState make_server(std::size_t d, std::size_t rounds,
                                  double record_bound, double client_bound,
                                  double eta, double sigma, double q) {
  protocol::ServerState s;
  s.theta.assign(d, 0.0);
  s.noisy_momentum.assign(d, 0.0);
  s.sigma = sigma;
  s.client_rate = q;
  s.total_rounds = rounds;
  s.record_bound_schedule.assign(rounds, record_bound);
  s.client_bound_schedule.assign(rounds, client_bound);
  s.learning_rate_schedule.assign(rounds, eta);
  return s;
}

std::vector<protocol::ClientState> make_clients(std::size_t n,
                                                std::uint64_t seed_base,
                                                double record_rate,
                                                double beta) {
  std::vector<protocol::ClientState> clients(n);
  for (std::size_t i = 0; i < n; ++i) {
    clients[i].id = i;
    clients[i].dataset = separable_dataset(seed_base + i, 40);
    clients[i].record_rate = record_rate;
    clients[i].beta = beta;
  }
  return clients;
}

protocol::RoundContext flat_ctx(double record_bound, double client_bound,
                                double eta) {
  return {1, 1, record_bound, client_bound, eta};
}

}  // namespace

TEST_CASE("rule names round trip") {
  for (const auto* name : {"dp_brem", "lfh", "dp_lfh", "dp_fedsgd", "dp_cm",
                           "dp_rsa", "ddp_rp"}) {
    CHECK(baselines::rule_name(baselines::rule_kind_from_name(name)) == name);
  }
  CHECK_THROWS_AS(baselines::rule_kind_from_name("krum"),
                  std::invalid_argument);
}

TEST_CASE("lfh equals dp_brem with sigma=0, R huge, q=1, p=1") {
  const auto spec = tiny_spec();
  auto run_rounds = [&spec](const protocol::AggregationRule& rule) {
    auto server = make_server(6, 4, 1e15, 0.8, 0.2, 0.0, 1.0);
    auto clients = make_clients(3, 500, 1.0, 0.9);
    const auto root = core::RngStream::from_seed(9);
    for (std::size_t t = 1; t <= 4; ++t) {
      protocol::run_round(server, clients, rule, nullptr, spec, t, root);
    }
    return server.theta;
  };
  const auto theta_brem = run_rounds(protocol::DpBremRule{});
  const auto theta_lfh =
      run_rounds(*baselines::make_rule(baselines::RuleKind::lfh, {}));
  CHECK(core::l2_norm(core::sub(theta_brem, theta_lfh)) <= 1e-12);
}

TEST_CASE("lfh: single client with deviation within C defines the momentum") {
  const auto rule = baselines::make_rule(baselines::RuleKind::lfh, {});
  auto server = make_server(3, 1, 1.0, 10.0, 0.1, 0.0, 1.0);
  server.noisy_momentum = {0.2, 0.0, 0.0};
  protocol::RoundOutput out;
  rule->aggregate(server, {{0, {0.5, 0.5, -0.5}}}, flat_ctx(1.0, 10.0, 0.1),
                  core::RngStream::from_seed(1), out);
  CHECK(core::l2_norm(core::sub(server.noisy_momentum,
                                core::ParamVector{0.5, 0.5, -0.5})) <= 1e-15);
}

TEST_CASE("lfh converges on the separable task") {
  const auto spec = tiny_spec();
  const auto rule = baselines::make_rule(baselines::RuleKind::lfh, {});
  auto server = make_server(6, 150, 1.0, 3.0, 0.2, 0.0, 1.0);
  auto clients = make_clients(4, 600, 0.5, 0.9);
  const auto root = core::RngStream::from_seed(10);
  for (std::size_t t = 1; t <= 150; ++t) {
    protocol::run_round(server, clients, *rule, nullptr, spec, t, root);
  }
  data::Dataset all;
  all.num_classes = 2;
  for (const auto& c : clients) {
    for (const auto& r : c.dataset->records) {
      all.records.push_back(r);
    }
  }
  CHECK(learner::accuracy(server.theta, all, spec) >= 0.95);
}

TEST_CASE("dp_lfh with sigma_local=0 and huge R equals lfh") {
  const auto spec = tiny_spec();
  auto client_a = make_clients(1, 700, 1.0, 0.9)[0];
  auto client_b = client_a;
  core::ParamVector theta(spec.param_count(), 0.05);

  baselines::RuleParams params;
  params.sigma_local = 0.0;
  const auto dp_lfh = baselines::make_rule(baselines::RuleKind::dp_lfh, params);
  const auto lfh = baselines::make_rule(baselines::RuleKind::lfh, {});
  const auto sa = dp_lfh->client_submission(
      client_a, theta, spec, flat_ctx(1e15, 1.0, 0.1),
      core::RngStream::from_seed(3), nullptr);
  const auto sb = lfh->client_submission(client_b, theta, spec,
                                         flat_ctx(1e15, 1.0, 0.1),
                                         core::RngStream::from_seed(3), nullptr);
  CHECK(core::l2_norm(core::sub(sa, sb)) <= 1e-15);
}

TEST_CASE("dp_lfh local noise has per-coordinate std R*sigma_local") {
  const auto spec = tiny_spec();
  const double record_bound = 2.0;
  const double sigma_local = 0.3;
  baselines::RuleParams params;
  params.sigma_local = sigma_local;
  const auto rule = baselines::make_rule(baselines::RuleKind::dp_lfh, params);

  // One duplicated record: the clipped mean gradient is deterministic, so
  // submission - base isolates the noise.
  auto base_client = make_clients(1, 800, 1.0, 0.0)[0];
  core::ParamVector theta(spec.param_count(), 0.0);
  baselines::RuleParams no_noise;
  const auto clean_rule =
      baselines::make_rule(baselines::RuleKind::dp_lfh, no_noise);
  auto clean_client = base_client;
  const auto base = clean_rule->client_submission(
      clean_client, theta, spec, flat_ctx(record_bound, 1.0, 0.1),
      core::RngStream::from_seed(4), nullptr);

  auto stream = core::RngStream::from_seed(5);
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (int i = 0; i < 2500; ++i) {
    auto c = base_client;
    const auto sub = rule->client_submission(
        c, theta, spec, flat_ctx(record_bound, 1.0, 0.1), stream.derive(i),
        nullptr);
    for (std::size_t k = 0; k < sub.size(); ++k) {
      const double noise = sub[k] - base[k];
      sum += noise;
      sum_sq += noise * noise;
      ++count;
    }
  }
  const double mean = sum / static_cast<double>(count);
  const double var = sum_sq / static_cast<double>(count) - mean * mean;
  const double expected = record_bound * sigma_local;
  CHECK(std::abs(std::sqrt(var) - expected) <= 0.05 * expected);
}

TEST_CASE("dp_lfh aggregate noise variance scales as (R sigma)^2 / n") {
  // All clients share one duplicated record; beta=0, C huge: the round's
  // momentum average equals base gradient + mean of n local noises.
  const auto spec = tiny_spec();
  const double record_bound = 1.5;
  const double sigma_local = 0.4;
  const std::size_t n = 8;
  baselines::RuleParams params;
  params.sigma_local = sigma_local;
  const auto rule = baselines::make_rule(baselines::RuleKind::dp_lfh, params);

  auto stream = core::RngStream::from_seed(6);
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
  const auto prototype = make_clients(n, 900, 1.0, 0.0);
  core::ParamVector theta(spec.param_count(), 0.0);
  baselines::RuleParams no_noise;
  const auto clean_rule =
      baselines::make_rule(baselines::RuleKind::dp_lfh, no_noise);
  for (int trial = 0; trial < 2000; ++trial) {
    core::ParamVector mean_noise(spec.param_count(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto c = prototype[i];
      auto clean = prototype[i];
      const auto noisy = rule->client_submission(
          c, theta, spec, flat_ctx(record_bound, 1.0, 0.1),
          stream.derive(trial).derive(i), nullptr);
      const auto base = clean_rule->client_submission(
          clean, theta, spec, flat_ctx(record_bound, 1.0, 0.1),
          stream.derive(trial).derive(i), nullptr);
      core::axpy_in_place(mean_noise, 1.0 / static_cast<double>(n),
                          core::sub(noisy, base));
    }
    for (const double x : mean_noise) {
      sum += x;
      sum_sq += x * x;
      ++count;
    }
  }
  const double mean = sum / static_cast<double>(count);
  const double var = sum_sq / static_cast<double>(count) - mean * mean;
  const double expected = record_bound * sigma_local * record_bound *
                          sigma_local / static_cast<double>(n);
  CHECK(std::abs(var - expected) <= 0.05 * expected);
}

TEST_CASE("dp_fedsgd: C huge and sigma 0 is the plain clipped-gradient mean") {
  const auto spec = tiny_spec();
  auto clients = make_clients(3, 1000, 1.0, 0.0);
  core::ParamVector theta(spec.param_count(), 0.0);
  const auto rule = baselines::make_rule(baselines::RuleKind::dp_fedsgd, {});
  auto server = make_server(spec.param_count(), 1, 5.0, 1e15, 1.0, 0.0, 1.0);

  std::vector<protocol::Submission> subs;
  core::ParamVector expected(spec.param_count(), 0.0);
  for (std::size_t i = 0; i < clients.size(); ++i) {
    const auto g = rule->client_submission(clients[i], theta, spec,
                                           flat_ctx(5.0, 1e15, 1.0),
                                           core::RngStream::from_seed(i),
                                           nullptr);
    subs.push_back({i, g});
    core::axpy_in_place(expected, 1.0 / 3.0, g);
  }
  protocol::RoundOutput out;
  rule->aggregate(server, subs, flat_ctx(5.0, 1e15, 1.0),
                  core::RngStream::from_seed(99), out);
  // theta moved by -eta * mean
  core::ParamVector moved(spec.param_count(), 0.0);
  core::axpy_in_place(moved, -1.0, expected);
  CHECK(core::l2_norm(core::sub(server.theta, moved)) <= 1e-12);
}

TEST_CASE("dp_fedsgd matches dp_brem at beta=0 with zero server momentum") {
  const auto spec = tiny_spec();
  auto run_one = [&spec](const protocol::AggregationRule& rule) {
    auto server = make_server(6, 1, 4.0, 0.6, 0.3, 0.35, 1.0);
    auto clients = make_clients(3, 1100, 0.8, 0.0);
    const auto root = core::RngStream::from_seed(13);
    protocol::run_round(server, clients, rule, nullptr, spec, 1, root);
    return server.theta;
  };
  const auto theta_fedsgd =
      run_one(*baselines::make_rule(baselines::RuleKind::dp_fedsgd, {}));
  const auto theta_brem = run_one(protocol::DpBremRule{});
  CHECK(core::l2_norm(core::sub(theta_fedsgd, theta_brem)) <= 1e-12);
}

TEST_CASE("dp_fedsgd bounds a single Byzantine submission by C/|I|") {
  const auto rule = baselines::make_rule(baselines::RuleKind::dp_fedsgd, {});
  const double client_bound = 0.5;
  auto ctx = flat_ctx(1.0, client_bound, 1.0);
  auto run_with = [&](const core::ParamVector& byz) {
    auto server = make_server(2, 1, 1.0, client_bound, 1.0, 0.0, 1.0);
    std::vector<protocol::Submission> subs{{0, {0.1, 0.0}},
                                           {1, {0.0, 0.1}},
                                           {2, byz}};
    protocol::RoundOutput out;
    rule->aggregate(server, subs, ctx, core::RngStream::from_seed(1), out);
    return server.theta;
  };
  const auto base = run_with({0.0, 0.0});
  const auto attacked = run_with({1e6, -1e6});
  CHECK(core::l2_norm(core::sub(base, attacked)) <=
        client_bound / 3.0 + 1e-12);
}

TEST_CASE("dp_cm: scalar median, unanimity, and lower-median convention") {
  const auto rule = baselines::make_rule(baselines::RuleKind::dp_cm, {});
  auto ctx = flat_ctx(1.0, 1.0, 1.0);

  // {1,3,5,7,9} -> median 5; theta moves by -eta * 5.
  {
    auto server = make_server(1, 1, 1.0, 1.0, 1.0, 0.0, 1.0);
    std::vector<protocol::Submission> subs;
    std::size_t id = 0;
    for (const double v : {1.0, 3.0, 5.0, 7.0, 9.0}) {
      subs.push_back({id++, {v}});
    }
    protocol::RoundOutput out;
    rule->aggregate(server, subs, ctx, core::RngStream::from_seed(2), out);
    CHECK(server.theta[0] == doctest::Approx(-5.0));
  }
  // lower median for even counts
  {
    auto server = make_server(1, 1, 1.0, 1.0, 1.0, 0.0, 1.0);
    std::vector<protocol::Submission> subs{{0, {1.0}}, {1, {3.0}},
                                           {2, {5.0}}, {3, {7.0}}};
    protocol::RoundOutput out;
    rule->aggregate(server, subs, ctx, core::RngStream::from_seed(3), out);
    CHECK(server.theta[0] == doctest::Approx(-3.0));
  }
  // unanimity of the honest majority pins every coordinate
  {
    auto server = make_server(3, 1, 1.0, 1.0, 1.0, 0.0, 1.0);
    const core::ParamVector v{0.5, -1.0, 2.0};
    std::vector<protocol::Submission> subs;
    for (std::size_t i = 0; i < 4; ++i) {
      subs.push_back({i, v});
    }
    subs.push_back({4, {1e9, -1e9, 1e9}});
    subs.push_back({5, {-1e9, 1e9, -1e9}});
    protocol::RoundOutput out;
    rule->aggregate(server, subs, ctx, core::RngStream::from_seed(4), out);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(server.theta[k] == doctest::Approx(-v[k]));
    }
  }
  // median sensitivity demo: one value moved by <= 1 can move the median
  // by 1, while the mean moves by only 0.2
  {
    const std::vector<double> data{1, 3, 5, 7, 9};
    std::vector<double> moved{1, 3, 4, 7, 9};
    auto median_of = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      return v[(v.size() - 1) / 2];
    };
    const double med_shift =
        std::abs(median_of(data) - median_of(moved));
    CHECK(med_shift == doctest::Approx(1.0));
  }
}

TEST_CASE("dp_rsa: sign semantics and invariance under positive rescaling") {
  const auto spec = tiny_spec();
  baselines::RuleParams params;
  params.sigma_local = 0.0;
  const auto rule = baselines::make_rule(baselines::RuleKind::dp_rsa, params);
  auto client = make_clients(1, 1200, 1.0, 0.0)[0];
  core::ParamVector theta(spec.param_count(), 0.1);
  const auto s1 = rule->client_submission(client, theta, spec,
                                          flat_ctx(4.0, 1.0, 0.1),
                                          core::RngStream::from_seed(7),
                                          nullptr);
  for (const double x : s1) {
    CHECK((x == 1.0 || x == -1.0 || x == 0.0));
  }
  // rescaling the gradient (via a smaller record bound) preserves signs
  auto client2 = make_clients(1, 1200, 1.0, 0.0)[0];
  const auto s2 = rule->client_submission(client2, theta, spec,
                                          flat_ctx(0.04, 1.0, 0.1),
                                          core::RngStream::from_seed(7),
                                          nullptr);
  CHECK(s1 == s2);

  // all clients agreeing on the sign pattern yields that pattern
  auto server = make_server(spec.param_count(), 1, 1.0, 1.0, 1.0, 0.0, 1.0);
  std::vector<protocol::Submission> subs;
  for (std::size_t i = 0; i < 5; ++i) {
    subs.push_back({i, s1});
  }
  protocol::RoundOutput out;
  rule->aggregate(server, subs, flat_ctx(1.0, 1.0, 1.0),
                  core::RngStream::from_seed(8), out);
  for (std::size_t k = 0; k < s1.size(); ++k) {
    CHECK(server.theta[k] == doctest::Approx(-s1[k]));
  }
}

TEST_CASE("dp_rsa aggregate coordinates stay within the gaussian envelope") {
  const auto spec = tiny_spec();
  baselines::RuleParams params;
  params.sigma_local = 0.25;
  const auto rule = baselines::make_rule(baselines::RuleKind::dp_rsa, params);
  auto stream = core::RngStream::from_seed(9);
  const auto prototype = make_clients(6, 1300, 1.0, 0.0);
  core::ParamVector theta(spec.param_count(), 0.0);
  std::size_t violations = 0;
  std::size_t total = 0;
  for (int trial = 0; trial < 500; ++trial) {
    auto server = make_server(spec.param_count(), 1, 1.0, 1.0, 1.0, 0.0, 1.0);
    std::vector<protocol::Submission> subs;
    for (std::size_t i = 0; i < prototype.size(); ++i) {
      auto c = prototype[i];
      subs.push_back({i, rule->client_submission(
                             c, theta, spec, flat_ctx(1.0, 1.0, 1.0),
                             stream.derive(trial).derive(i), nullptr)});
    }
    protocol::RoundOutput out;
    rule->aggregate(server, subs, flat_ctx(1.0, 1.0, 1.0),
                    core::RngStream::from_seed(10), out);
    for (const double x : out.aggregate_pre_noise) {
      ++total;
      if (std::abs(x) > 1.0 + 5.0 * params.sigma_local) {
        ++violations;
      }
    }
  }
  // per-coordinate tail probability is far below 1e-5 (mean of 6 noises)
  CHECK(violations == 0);
  CHECK(total >= 3000);
}

TEST_CASE("ddp_rp: range acceptance, whole-vector rejection, skip on empty") {
  baselines::RuleParams params;
  params.sigma_local = 0.0;
  params.range_bound = 1.0;
  params.tau = 4;
  const auto rule = baselines::make_rule(baselines::RuleKind::ddp_rp, params);
  auto ctx = flat_ctx(1.0, 1.0, 1.0);

  auto server = make_server(2, 1, 1.0, 1.0, 1.0, 0.0, 1.0);
  std::vector<protocol::Submission> subs{
      {0, {0.5, 0.5}},
      {1, {-0.5, 0.25}},
      {2, {0.2, 1.5}},  // one out-of-range coordinate rejects the vector
  };
  protocol::RoundOutput out;
  rule->aggregate(server, subs, ctx, core::RngStream::from_seed(11), out);
  CHECK(server.theta[0] == doctest::Approx(-(0.5 - 0.5) / 2.0));
  CHECK(server.theta[1] == doctest::Approx(-(0.5 + 0.25) / 2.0));

  // all rejected: update skipped
  auto server2 = make_server(2, 1, 1.0, 1.0, 1.0, 0.0, 1.0);
  std::vector<protocol::Submission> bad{{0, {9.0, 0.0}}, {1, {0.0, 9.0}}};
  protocol::RoundOutput out2;
  rule->aggregate(server2, bad, ctx, core::RngStream::from_seed(12), out2);
  CHECK(server2.theta == core::ParamVector(2, 0.0));
}

TEST_CASE("ddp_rp aggregate noise follows the sqrt(n/tau) sum convention") {
  const auto spec = tiny_spec();
  const std::size_t n = 6;
  const std::size_t tau = 4;
  const double record_bound = 1.2;
  const double sigma_local = 0.5;
  baselines::RuleParams params;
  params.sigma_local = sigma_local;
  params.tau = tau;
  params.range_bound = 0.0;  // accept everything: isolate the noise
  const auto rule = baselines::make_rule(baselines::RuleKind::ddp_rp, params);
  baselines::RuleParams clean_params = params;
  clean_params.sigma_local = 0.0;
  const auto clean = baselines::make_rule(baselines::RuleKind::ddp_rp,
                                          clean_params);

  auto stream = core::RngStream::from_seed(13);
  const auto prototype = make_clients(n, 1400, 1.0, 0.0);
  core::ParamVector theta(spec.param_count(), 0.0);
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    core::ParamVector mean_noise(spec.param_count(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto noisy_client = prototype[i];
      auto clean_client = prototype[i];
      const auto a = rule->client_submission(
          noisy_client, theta, spec, flat_ctx(record_bound, 1.0, 1.0),
          stream.derive(trial).derive(i), nullptr);
      const auto b = clean->client_submission(
          clean_client, theta, spec, flat_ctx(record_bound, 1.0, 1.0),
          stream.derive(trial).derive(i), nullptr);
      core::axpy_in_place(mean_noise, 1.0 / static_cast<double>(n),
                          core::sub(a, b));
    }
    for (const double x : mean_noise) {
      sum += x;
      sum_sq += x * x;
      ++count;
    }
  }
  const double mean = sum / static_cast<double>(count);
  const double var = sum_sq / static_cast<double>(count) - mean * mean;
  // per-client std R sigma / sqrt(tau); average of n: R sigma sqrt(n/tau)/n
  const double expected_std = record_bound * sigma_local *
                              std::sqrt(static_cast<double>(n) /
                                        static_cast<double>(tau)) /
                              static_cast<double>(n);
  CHECK(std::abs(std::sqrt(var) - expected_std) <= 0.05 * expected_std);
}

TEST_CASE("interface law: every rule runs through the same round driver") {
  const auto spec = tiny_spec();
  for (const auto kind :
       {baselines::RuleKind::dp_brem, baselines::RuleKind::lfh,
        baselines::RuleKind::dp_lfh, baselines::RuleKind::dp_fedsgd,
        baselines::RuleKind::dp_cm, baselines::RuleKind::dp_rsa,
        baselines::RuleKind::ddp_rp}) {
    baselines::RuleParams params;
    params.sigma_local = 0.1;
    params.tau = 3;
    params.range_bound = 100.0;
    const auto rule = baselines::make_rule(kind, params);
    auto server = make_server(6, 3, 5.0, 1.0, 0.1, 0.1, 0.9);
    auto clients = make_clients(4, 1500, 0.5, 0.9);
    const auto root = core::RngStream::from_seed(21);
    for (std::size_t t = 1; t <= 3; ++t) {
      const auto out =
          protocol::run_round(server, clients, *rule, nullptr, spec, t, root);
      CHECK(out.round == t);
    }
    CHECK(core::all_finite(server.theta));
  }
}
