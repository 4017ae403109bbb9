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

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "dpbrem/protocol/round.hpp"
#include "dpbrem/protocol/rule.hpp"

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

}  // namespace

TEST_CASE("momentum recursion matches the explicit weighted sum") {
  auto stream = core::RngStream::from_seed(1);
  for (int rep = 0; rep < 20; ++rep) {
    const double beta = 0.95 * stream.next_unit();
    const std::size_t rounds = 3 + stream.next_below(48);
    const std::size_t d = 4;
    std::vector<core::ParamVector> grads(rounds);
    for (auto& g : grads) {
      g.resize(d);
      for (auto& x : g) {
        x = stream.next_gaussian();
      }
    }
    core::ParamVector momentum = grads[0];
    for (std::size_t t = 1; t < rounds; ++t) {
      for (std::size_t k = 0; k < d; ++k) {
        momentum[k] = (1.0 - beta) * grads[t][k] + beta * momentum[k];
      }
    }
    // (1-beta) sum_{tau >= 2} beta^{t-tau} g_tau + beta^{t-1} g_1
    core::ParamVector explicit_sum(d, 0.0);
    for (std::size_t tau = 1; tau < rounds; ++tau) {
      const double w =
          (1.0 - beta) * std::pow(beta, static_cast<double>(rounds - 1 - tau));
      core::axpy_in_place(explicit_sum, w, grads[tau]);
    }
    core::axpy_in_place(explicit_sum,
                        std::pow(beta, static_cast<double>(rounds - 1)),
                        grads[0]);
    const double err = core::l2_norm(core::sub(momentum, explicit_sum));
    CHECK(err <= 1e-12 * std::max(1.0, core::l2_norm(momentum)));
  }
}

TEST_CASE("client_local_update: beta=0 reproduces the per-round gradient") {
  protocol::ClientState client;
  client.dataset = separable_dataset(3, 40);
  client.record_rate = 1.0;
  client.beta = 0.0;
  const auto spec = tiny_spec();
  core::ParamVector theta(spec.param_count(), 0.0);

  const auto u1 = protocol::client_local_update(
      client, theta, 100.0, spec, core::RngStream::from_seed(4).derive("r1"));
  // with p=1 and a huge bound this is the plain mean gradient
  auto expected = learner::dataset_mean_grad(theta, *client.dataset, spec);
  CHECK(core::l2_norm(core::sub(u1.momentum, expected)) <= 1e-12);
  CHECK(u1.batch_size == 40);
  CHECK(u1.clipped_records == 0);
}

TEST_CASE("client_local_update: two-round hand unrolling at beta=0.9") {
  protocol::ClientState client;
  client.dataset = separable_dataset(5, 30);
  client.record_rate = 1.0;
  client.beta = 0.9;
  const auto spec = tiny_spec();
  core::ParamVector theta1(spec.param_count(), 0.0);
  core::ParamVector theta2(spec.param_count(), 0.1);

  const auto g1 = learner::dataset_mean_grad(theta1, *client.dataset, spec);
  const auto g2 = learner::dataset_mean_grad(theta2, *client.dataset, spec);

  protocol::client_local_update(client, theta1, 1e9, spec,
                                core::RngStream::from_seed(6).derive("a"));
  const auto u2 = protocol::client_local_update(
      client, theta2, 1e9, spec, core::RngStream::from_seed(6).derive("b"));

  core::ParamVector expected(g2.size());
  for (std::size_t k = 0; k < expected.size(); ++k) {
    expected[k] = 0.1 * g2[k] + 0.9 * g1[k];
  }
  CHECK(core::l2_norm(core::sub(u2.momentum, expected)) <= 1e-12);
}

TEST_CASE("client_local_update: empty batch still advances the recursion") {
  protocol::ClientState client;
  client.dataset = separable_dataset(7, 20);
  client.record_rate = 1e-12;  // empty batch with near certainty
  client.beta = 0.5;
  client.momentum = core::ParamVector{2.0, 4.0, -2.0, 0.0, 6.0, 8.0};
  const auto spec = tiny_spec();
  core::ParamVector theta(spec.param_count(), 0.0);
  const auto update = protocol::client_local_update(
      client, theta, 1.0, spec, core::RngStream::from_seed(8));
  CHECK(update.batch_size == 0);
  // momentum halves: (1-beta) * 0 + beta * previous
  CHECK((*client.momentum)[0] == doctest::Approx(1.0));
  CHECK((*client.momentum)[4] == doctest::Approx(3.0));
}

TEST_CASE("sample_clients: q=1 selects everyone; q=0.5 concentrates") {
  const auto all =
      protocol::sample_clients(25, 1.0, core::RngStream::from_seed(9));
  CHECK(all.size() == 25);

  auto stream = core::RngStream::from_seed(10);
  double total = 0.0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    total += static_cast<double>(
        protocol::sample_clients(100, 0.5, stream.derive(i)).size());
  }
  CHECK(std::abs(total / trials - 50.0) <= 1.5);

  auto s1 = protocol::sample_clients(50, 0.3, core::RngStream::from_seed(11));
  auto s2 = protocol::sample_clients(50, 0.3, core::RngStream::from_seed(11));
  CHECK(s1 == s2);
}

TEST_CASE("server_aggregate: single in-bound client moves momentum exactly") {
  auto server = make_server(3, 1, 1.0, 5.0, 0.1, 0.0, 1.0);
  server.noisy_momentum = {1.0, 0.0, 0.0};
  const core::ParamVector submission{1.5, 1.0, -0.5};
  const auto out = protocol::server_aggregate(
      server, {{0, submission}}, 5.0, 0.0, core::RngStream::from_seed(1));
  CHECK(core::l2_norm(core::sub(server.noisy_momentum, submission)) <= 1e-15);
  CHECK(out.diagnostics.client_clip_fraction == 0.0);
}

TEST_CASE("server_aggregate: colinear saturation adds exactly C") {
  auto server = make_server(2, 1, 1.0, 1.0, 0.1, 0.0, 1.0);
  server.noisy_momentum = {0.5, 0.5};
  // all deviations along u = (1, 0), far beyond C
  std::vector<protocol::Submission> subs;
  for (std::size_t i = 0; i < 4; ++i) {
    subs.push_back({i, {0.5 + 100.0 + 10.0 * static_cast<double>(i), 0.5}});
  }
  protocol::server_aggregate(server, subs, 1.0, 0.0,
                             core::RngStream::from_seed(2));
  CHECK(server.noisy_momentum[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(server.noisy_momentum[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("server_aggregate: empty sampled set keeps the momentum") {
  auto server = make_server(2, 1, 1.0, 1.0, 0.1, 0.5, 1.0);
  server.noisy_momentum = {0.25, -0.75};
  const auto out = protocol::server_aggregate(server, {}, 1.0, 0.5,
                                              core::RngStream::from_seed(3));
  CHECK(server.noisy_momentum == core::ParamVector{0.25, -0.75});
  CHECK(out.noisy_momentum == server.noisy_momentum);
}

TEST_CASE("server_aggregate: noise variance is (R sigma / |I_t|)^2") {
  const double record_bound = 2.0;
  const double sigma = 0.5;
  const std::size_t n_subs = 5;
  const std::size_t d = 4;
  auto stream = core::RngStream::from_seed(4);
  double sum = 0.0;
  double sum_sq = 0.0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    auto server = make_server(d, 1, record_bound, 1.0, 0.1, sigma, 1.0);
    server.noisy_momentum.assign(d, 0.7);
    std::vector<protocol::Submission> subs;
    for (std::size_t c = 0; c < n_subs; ++c) {
      subs.push_back({c, core::ParamVector(d, 0.7)});  // zero deviations
    }
    protocol::server_aggregate(server, subs, 1.0, record_bound * sigma,
                               stream.derive(i));
    for (std::size_t k = 0; k < d; ++k) {
      const double delta = server.noisy_momentum[k] - 0.7;
      sum += delta;
      sum_sq += delta * delta;
    }
  }
  const double count = static_cast<double>(trials * d);
  const double mean = sum / count;
  const double var = sum_sq / count - mean * mean;
  const double expected =
      (record_bound * sigma / static_cast<double>(n_subs)) *
      (record_bound * sigma / static_cast<double>(n_subs));
  CHECK(std::abs(var - expected) <= 0.05 * expected);
}

TEST_CASE("server_aggregate is independent of submission order") {
  std::vector<protocol::Submission> subs;
  auto stream = core::RngStream::from_seed(5);
  for (std::size_t c = 0; c < 7; ++c) {
    core::ParamVector v(3);
    for (auto& x : v) {
      x = stream.next_gaussian();
    }
    subs.push_back({c, v});
  }
  auto reversed = subs;
  std::reverse(reversed.begin(), reversed.end());

  auto s1 = make_server(3, 1, 1.0, 0.8, 0.1, 0.0, 1.0);
  auto s2 = make_server(3, 1, 1.0, 0.8, 0.1, 0.0, 1.0);
  protocol::server_aggregate(s1, subs, 0.8, 0.0, core::RngStream::from_seed(6));
  protocol::server_aggregate(s2, reversed, 0.8, 0.0,
                             core::RngStream::from_seed(6));
  CHECK(s1.noisy_momentum == s2.noisy_momentum);
}

TEST_CASE("server_aggregate rejects dimension mismatches") {
  auto server = make_server(3, 1, 1.0, 1.0, 0.1, 0.0, 1.0);
  CHECK_THROWS_AS(
      protocol::server_aggregate(server, {{0, {1.0, 2.0}}}, 1.0, 0.0,
                                 core::RngStream::from_seed(7)),
      std::invalid_argument);
}

TEST_CASE("model_update basics") {
  CHECK(protocol::model_update({1.0, 2.0}, {0.0, 0.0}, 0.5) ==
        core::ParamVector{1.0, 2.0});
  CHECK(protocol::model_update({1.0, 2.0}, {1.0, 2.0}, 1.0) ==
        core::ParamVector{0.0, 0.0});
  const core::ParamVector m{0.5, -0.5};
  auto theta = protocol::model_update({1.0, 1.0}, m, 0.1);
  theta = protocol::model_update(theta, m, 0.1);
  CHECK(theta[0] == doctest::Approx(1.0 - 0.2 * 0.5));
  CHECK(theta[1] == doctest::Approx(1.0 + 0.2 * 0.5));
}

TEST_CASE("linear_schedule endpoints, midpoint, and the 0.3 R0 rule") {
  CHECK(protocol::linear_schedule(0.1, 0.01, 1, 100) == doctest::Approx(0.1));
  CHECK(protocol::linear_schedule(0.1, 0.01, 100, 100) ==
        doctest::Approx(0.01));
  CHECK(protocol::linear_schedule(10.0, 3.0, 101, 101) == doctest::Approx(3.0));
  // odd T: the midpoint is the arithmetic mean
  CHECK(protocol::linear_schedule(2.0, 6.0, 51, 101) == doctest::Approx(4.0));
  CHECK(protocol::linear_schedule(5.0, 1.0, 1, 1) == doctest::Approx(5.0));
  CHECK_THROWS_AS(protocol::linear_schedule(1.0, 2.0, 0, 5),
                  std::invalid_argument);
}

TEST_CASE("run_round: smoke convergence without any mechanism") {
  // sigma=0, q=1, beta=0, huge R and C: plain distributed SGD.
  const std::size_t rounds = 60;
  auto server = make_server(6, rounds, 1e15, 1e15, 0.5, 0.0, 1.0);
  const auto spec = tiny_spec();
  std::vector<protocol::ClientState> clients(4);
  for (std::size_t i = 0; i < clients.size(); ++i) {
    clients[i].id = i;
    clients[i].dataset = separable_dataset(100 + i, 50);
    clients[i].record_rate = 1.0;
    clients[i].beta = 0.0;
  }
  protocol::DpBremRule rule;
  const auto root = core::RngStream::from_seed(42);
  for (std::size_t t = 1; t <= rounds; ++t) {
    protocol::run_round(server, clients, rule, nullptr, spec, t, root);
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

TEST_CASE("run_round: unsampled clients still advance momentum") {
  auto server = make_server(6, 3, 10.0, 1.0, 0.1, 0.0, 1e-9);
  const auto spec = tiny_spec();
  std::vector<protocol::ClientState> clients(3);
  for (std::size_t i = 0; i < clients.size(); ++i) {
    clients[i].id = i;
    clients[i].dataset = separable_dataset(200 + i, 30);
    clients[i].record_rate = 1.0;
    clients[i].beta = 0.9;
  }
  protocol::DpBremRule rule;
  const auto root = core::RngStream::from_seed(1);
  const auto out =
      protocol::run_round(server, clients, rule, nullptr, spec, 1, root);
  CHECK(out.sampled.empty());  // q ~ 0: nobody sampled
  for (const auto& c : clients) {
    REQUIRE(c.momentum.has_value());
    CHECK(core::l2_norm(*c.momentum) > 0.0);
  }
}

TEST_CASE("bounded influence: one submission moves the aggregate <= 2C/|I|") {
  auto stream = core::RngStream::from_seed(6);
  const std::size_t d = 5;
  const double client_bound = 0.7;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<protocol::Submission> subs;
    for (std::size_t c = 0; c < 6; ++c) {
      core::ParamVector v(d);
      for (auto& x : v) {
        x = 3.0 * stream.next_gaussian();
      }
      subs.push_back({c, v});
    }
    auto adversarial = subs;
    for (auto& x : adversarial[2].value) {
      x = 50.0 * stream.next_gaussian();  // arbitrary replacement
    }
    auto s1 = make_server(d, 1, 1.0, client_bound, 0.1, 0.0, 1.0);
    auto s2 = make_server(d, 1, 1.0, client_bound, 0.1, 0.0, 1.0);
    s1.noisy_momentum = core::ParamVector(d, 0.2);
    s2.noisy_momentum = core::ParamVector(d, 0.2);
    protocol::server_aggregate(s1, subs, client_bound, 0.0,
                               core::RngStream::from_seed(7));
    protocol::server_aggregate(s2, adversarial, client_bound, 0.0,
                               core::RngStream::from_seed(7));
    const double shift =
        core::l2_norm(core::sub(s1.noisy_momentum, s2.noisy_momentum));
    CHECK(shift <= 2.0 * client_bound / 6.0 + 1e-12);
  }
}

TEST_CASE("run_round determinism: identical seeds give identical output") {
  const auto spec = tiny_spec();
  auto run_once = [&spec](std::uint64_t seed) {
    auto server = make_server(6, 5, 5.0, 1.0, 0.1, 0.2, 0.8);
    std::vector<protocol::ClientState> clients(4);
    for (std::size_t i = 0; i < clients.size(); ++i) {
      clients[i].id = i;
      clients[i].dataset = separable_dataset(300 + i, 40);
      clients[i].record_rate = 0.5;
      clients[i].beta = 0.9;
    }
    protocol::DpBremRule rule;
    const auto root = core::RngStream::from_seed(seed);
    std::vector<protocol::RoundOutput> outs;
    for (std::size_t t = 1; t <= 5; ++t) {
      outs.push_back(
          protocol::run_round(server, clients, rule, nullptr, spec, t, root));
    }
    return std::make_pair(server.theta, outs);
  };
  const auto [theta_a, outs_a] = run_once(77);
  const auto [theta_b, outs_b] = run_once(77);
  CHECK(theta_a == theta_b);
  REQUIRE(outs_a.size() == outs_b.size());
  for (std::size_t i = 0; i < outs_a.size(); ++i) {
    CHECK(outs_a[i].sampled == outs_b[i].sampled);
    CHECK(outs_a[i].noisy_momentum == outs_b[i].noisy_momentum);
    CHECK(outs_a[i].noise == outs_b[i].noise);
  }
}
