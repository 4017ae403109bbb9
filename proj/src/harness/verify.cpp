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

#include "dpbrem/harness/verify.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dpbrem/accountant/gdp.hpp"
#include "dpbrem/core/rng.hpp"
#include "dpbrem/learner/model.hpp"
#include "dpbrem/secure/shamir.hpp"

namespace dpbrem::harness {

namespace {

core::ParamVector random_vector(core::RngStream& stream, std::size_t d,
                                double scale) {
  core::ParamVector v(d);
  for (auto& x : v) {
    x = scale * stream.next_gaussian();
  }
  return v;
}

// Worst violation of ||clip(x,C) - clip(x+delta,C)|| <= min{2C, ||delta||}
// over randomized triples spanning both clip branches.
VerifyCheck check_clipping(const ClipFn& clip_fn, std::size_t trials) {
  auto stream = core::RngStream::from_seed(0xC11F).derive("clipping");
  double worst = -1e300;
  for (std::size_t i = 0; i < trials; ++i) {
    const std::size_t d = 1 + stream.next_below(64);
    const double x_scale = std::pow(10.0, -1.0 + 3.0 * stream.next_unit());
    const double d_scale = std::pow(10.0, -1.0 + 3.0 * stream.next_unit());
    const double bound = std::pow(10.0, -2.0 + 3.0 * stream.next_unit());
    const core::ParamVector x = random_vector(stream, d, x_scale);
    const core::ParamVector delta = random_vector(stream, d, d_scale);
    core::ParamVector shifted = x;
    core::add_in_place(shifted, delta);
    const core::ParamVector a = clip_fn(x, bound);
    const core::ParamVector b = clip_fn(shifted, bound);
    const double lhs = core::l2_norm(core::sub(a, b));
    const double rhs = std::min(2.0 * bound, core::l2_norm(delta));
    worst = std::max(worst, lhs - rhs);
  }
  VerifyCheck check;
  check.name = "clipping_distance_bound";
  check.observed = worst;
  check.bound = 1e-9;
  check.passed = worst <= check.bound;
  std::ostringstream detail;
  detail << trials << " randomized (x, delta, C) triples, d in [1,64]";
  check.detail = detail.str();
  return check;
}

// Exhaustive one-record-removal neighbors on a tiny one-client instance:
// every batch-inclusion pattern over T rounds for the shared records and
// the removed record, against the closed-form bound min{2C, R/(p n)}.
// Both dominating branches of the bound are exercised.
VerifyCheck check_sensitivity(const ClipFn& clip_fn) {
  constexpr std::size_t kRecords = 5;
  constexpr std::size_t kRounds = 3;
  constexpr std::size_t kDim = 3;
  constexpr double kBeta = 0.9;
  constexpr double kRate = 0.4;  // p

  auto stream = core::RngStream::from_seed(0x5EA5).derive("sensitivity");
  // Per-record, per-round gradients with norms around the clip bounds.
  double grads[kRecords][kRounds][kDim];
  for (auto& per_record : grads) {
    for (auto& per_round : per_record) {
      const double scale = 0.2 + 2.8 * stream.next_unit();
      for (auto& x : per_round) {
        x = scale * stream.next_gaussian();
      }
    }
  }
  // Public previous-momentum sequence, shared by both neighbors.
  double centers[kRounds][kDim];
  for (auto& per_round : centers) {
    for (auto& x : per_round) {
      x = 0.3 * stream.next_gaussian();
    }
  }

  const struct {
    double record_bound, client_bound;
  } regimes[] = {{1.0, 0.05},   // 2C branch dominates
                 {0.5, 10.0}};  // R/(p n) branch dominates

  double worst_ratio = 0.0;
  for (const auto& regime : regimes) {
    const double bound = std::min(
        2.0 * regime.client_bound,
        regime.record_bound / (kRate * static_cast<double>(kRecords)));
    const double divisor = kRate * static_cast<double>(kRecords);

    // momentum sequence for a given inclusion pattern; bit (r * kRounds + t)
    // of the mask selects record r in round t. The skip record (if any)
    // uses its own 3-bit mask.
    const auto momentum_rounds =
        [&](std::uint32_t shared_mask, const std::size_t shared[kRecords - 1],
            std::size_t extra_record, std::uint32_t extra_mask,
            core::ParamVector out[kRounds]) {
          core::ParamVector momentum;
          for (std::size_t t = 0; t < kRounds; ++t) {
            core::ParamVector grad_sum(kDim, 0.0);
            for (std::size_t s = 0; s < kRecords - 1; ++s) {
              if ((shared_mask >> (s * kRounds + t)) & 1U) {
                const core::ParamVector g(
                    grads[shared[s]][t], grads[shared[s]][t] + kDim);
                core::add_in_place(grad_sum,
                                   clip_fn(g, regime.record_bound));
              }
            }
            if (extra_record < kRecords && ((extra_mask >> t) & 1U)) {
              const core::ParamVector g(grads[extra_record][t],
                                        grads[extra_record][t] + kDim);
              core::add_in_place(grad_sum, clip_fn(g, regime.record_bound));
            }
            core::scale_in_place(grad_sum, 1.0 / divisor);
            if (t == 0) {
              momentum = grad_sum;
            } else {
              for (std::size_t k = 0; k < kDim; ++k) {
                momentum[k] = (1.0 - kBeta) * grad_sum[k] + kBeta * momentum[k];
              }
            }
            out[t] = momentum;
          }
        };

    for (std::size_t removed = 0; removed < kRecords; ++removed) {
      std::size_t shared[kRecords - 1];
      std::size_t idx = 0;
      for (std::size_t r = 0; r < kRecords; ++r) {
        if (r != removed) {
          shared[idx++] = r;
        }
      }
      const std::uint32_t shared_limit = 1U
                                         << ((kRecords - 1) * kRounds);
      for (std::uint32_t shared_mask = 0; shared_mask < shared_limit;
           ++shared_mask) {
        core::ParamVector without[kRounds];
        momentum_rounds(shared_mask, shared, kRecords, 0, without);
        for (std::uint32_t extra_mask = 1; extra_mask < (1U << kRounds);
             ++extra_mask) {
          core::ParamVector with[kRounds];
          momentum_rounds(shared_mask, shared, removed, extra_mask, with);
          for (std::size_t t = 0; t < kRounds; ++t) {
            const core::ParamVector center(centers[t], centers[t] + kDim);
            const double diff = core::l2_norm(core::sub(
                clip_fn(core::sub(with[t], center), regime.client_bound),
                clip_fn(core::sub(without[t], center), regime.client_bound)));
            worst_ratio = std::max(worst_ratio, diff / bound);
          }
        }
      }
    }
  }

  VerifyCheck check;
  check.name = "sensitivity_exhaustive";
  check.observed = worst_ratio;
  check.bound = 1.0 + 1e-9;
  check.passed = worst_ratio <= check.bound;
  check.detail =
      "one client, 5 records, d=3, T=3, beta=0.9: all removal neighbors x "
      "all batch patterns, both min branches";
  return check;
}

VerifyCheck check_gradients() {
  auto stream = core::RngStream::from_seed(0x9AD).derive("gradients");
  const learner::ModelSpec specs[] = {
      {learner::ModelKind::logistic_regression, 5, 3, 0},
      {learner::ModelKind::mlp, 4, 2, 3},
  };
  double worst = 0.0;
  for (const auto& spec : specs) {
    for (int trial = 0; trial < 100; ++trial) {
      core::ParamVector theta =
          random_vector(stream, spec.param_count(), 0.8);
      data::Record record;
      record.features = random_vector(stream, spec.d_in, 1.5);
      record.label = stream.next_below(spec.num_classes);
      const auto analytic = learner::per_record_grad(theta, record, spec);
      const auto numeric =
          learner::fd_gradient_oracle(theta, record, spec, 1e-5);
      const double norm = std::max(core::l2_norm(analytic), 1e-12);
      worst = std::max(worst,
                       core::l2_norm(core::sub(analytic, numeric)) / norm);
    }
  }
  VerifyCheck check;
  check.name = "gradient_finite_difference";
  check.observed = worst;
  check.bound = 1e-5;
  check.passed = worst <= check.bound;
  check.detail = "100 random (theta, record) pairs per model kind";
  return check;
}

VerifyCheck check_shamir() {
  secure::SharingConfig small{10, 4, 257};
  auto stream = core::RngStream::from_seed(0x54A).derive("shamir");
  std::size_t failures = 0;
  std::size_t trials = 0;
  // All (q errors, e erasures) with 2q + e <= n - t = 6.
  for (std::size_t q = 0; 2 * q <= 6; ++q) {
    for (std::size_t e = 0; 2 * q + e <= 6; ++e) {
      for (int rep = 0; rep < 60; ++rep) {
        ++trials;
        const std::uint64_t secret = stream.next_below(small.modulus);
        auto shares = secure::share(secret, small, stream);
        core::shuffle(shares, stream);
        shares.resize(small.n_parties - e);  // erasures
        for (std::size_t k = 0; k < q; ++k) {
          const std::uint64_t wrong =
              (shares[k].value + 1 + stream.next_below(small.modulus - 1)) %
              small.modulus;
          shares[k].value = wrong;
        }
        const auto decoded = secure::robust_reconstruct(shares, small);
        if (!decoded.has_value() || *decoded != secret) {
          ++failures;
        }
      }
    }
  }
  // Plain round trip at the production modulus.
  secure::SharingConfig big{10, 4, secure::kDefaultModulus};
  for (int rep = 0; rep < 1000; ++rep) {
    ++trials;
    const std::uint64_t secret = stream.next_below(big.modulus);
    auto shares = secure::share(secret, big, stream);
    core::shuffle(shares, stream);
    shares.resize(big.threshold);
    if (secure::reconstruct(shares, big) != secret) {
      ++failures;
    }
  }
  VerifyCheck check;
  check.name = "shamir_robust_reconstruction";
  check.observed = static_cast<double>(failures);
  check.bound = 0.0;
  check.passed = failures == 0;
  check.detail = std::to_string(trials) +
                 " reconstructions: exhaustive (q,e) at p=257 plus "
                 "round-trips at p=2^61-1";
  return check;
}

VerifyCheck check_accountant() {
  // Oracle values computed offline with 60-digit arithmetic for
  // T=1000, q=1, p=0.05, n=600, R=10, C=1, delta=1e-6.
  struct Golden {
    double sigma, epsilon;
  };
  const Golden golden[] = {{0.15, 1.06067243105},
                           {0.06, 2.99051445947},
                           {0.029, 7.98835622889}};
  double worst = 0.0;
  for (const auto& g : golden) {
    accountant::PrivacyConfig pc;
    pc.rounds = 1000;
    pc.client_rate = 1.0;
    pc.record_rate = 0.05;
    pc.records = 600;
    pc.record_bound = 10.0;
    pc.client_bound = 1.0;
    pc.sigma = g.sigma;
    pc.delta = 1e-6;
    const auto report = accountant::report(pc);
    worst = std::max(worst,
                     std::abs(report.epsilon - g.epsilon) / g.epsilon);
  }
  // Spot values.
  worst = std::max(worst, std::abs(accountant::sensitivity(10, 1, 0.05, 600) -
                                   1.0 / 3.0) * 3.0);
  worst = std::max(
      worst, std::abs(accountant::effective_sigma(0.06, 10, 1, 0.05, 600) -
                      1.8) / 1.8);
  worst = std::max(worst,
                   std::abs(accountant::gdp_mu(1000, 1.0, 0.05, 1.8) -
                            0.645881908811461) / 0.645881908811461);
  worst = std::max(worst, std::abs(accountant::std_normal_cdf(-4.3217) -
                                   7.741580788e-6) / 7.741580788e-6);
  worst = std::max(worst, std::abs(accountant::gdp_to_delta(0.6459, 3.0) -
                                   9.339290565e-7) / 9.339290565e-7);
  VerifyCheck check;
  check.name = "accountant_golden_values";
  check.observed = worst;
  check.bound = 1e-3;
  check.passed = worst <= check.bound;
  check.detail = "epsilon/mu/sensitivity/cdf against high-precision oracle";
  return check;
}

}  // namespace

VerifyReport verify(const std::string& suite) {
  return verify(suite, [](const core::ParamVector& v, double bound) {
    return core::clip(v, bound);
  });
}

VerifyReport verify(const std::string& suite, const ClipFn& clip_fn) {
  VerifyReport report;
  const bool all = suite == "all";
  bool known = all;
  if (all || suite == "clipping") {
    report.checks.push_back(check_clipping(clip_fn, 100000));
    known = true;
  }
  if (all || suite == "sensitivity") {
    report.checks.push_back(check_sensitivity(clip_fn));
    known = true;
  }
  if (all || suite == "gradients") {
    report.checks.push_back(check_gradients());
    known = true;
  }
  if (all || suite == "shamir") {
    report.checks.push_back(check_shamir());
    known = true;
  }
  if (all || suite == "accountant") {
    report.checks.push_back(check_accountant());
    known = true;
  }
  if (!known) {
    throw std::invalid_argument("verify: unknown suite '" + suite + "'");
  }
  return report;
}

std::string format_report(const VerifyReport& report) {
  std::ostringstream out;
  for (const auto& c : report.checks) {
    out << (c.passed ? "PASS" : "FAIL") << " " << c.name << ": observed "
        << c.observed << " vs bound " << c.bound << " (" << c.detail << ")\n";
  }
  out << (report.all_passed() ? "all checks passed" : "CHECKS FAILED") << "\n";
  return out.str();
}

}  // namespace dpbrem::harness
