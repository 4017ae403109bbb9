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
#include <span>
#include <vector>

namespace dpbrem::accountant {

/**
 * Record-level Gaussian-DP accountant for the centered-clipped noisy
 * momentum aggregate.
 *
 * Per round, the aggregate query has record-level sensitivity
 *   S_i = min{2C, R / (p_i n_i)}
 * and the added noise has standard deviation R*sigma, giving the
 * effective noise multiplier
 *   sigma_i = R*sigma / S_i = sigma * max{R/(2C), p_i n_i}.
 * T compounded rounds with client sampling q and record sampling p_i
 * satisfy mu_i-GDP with
 *   mu_i = q p_i sqrt(T (exp(1/(2 sigma_i^2)) - 1)),
 * which converts to (epsilon, delta)-DP through the standard-normal CDF.
 */
struct PrivacyConfig {
  std::size_t rounds = 0;      // T
  double client_rate = 1.0;    // q in (0,1]
  double record_rate = 1.0;    // p_i in (0,1]
  std::size_t records = 0;     // n_i = |D_i|
  double record_bound = 1.0;   // R
  double client_bound = 1.0;   // C
  double sigma = 0.0;          // noise multiplier
  double delta = 1e-6;         // target delta
};

struct AccountantReport {
  double record_rate = 0.0;
  std::size_t records = 0;
  double sensitivity = 0.0;   // S_i
  double sigma_i = 0.0;       // effective noise multiplier
  double mu = 0.0;            // GDP parameter (infinity when sigma == 0)
  double epsilon = 0.0;       // solved at the configured delta
};

// Phi(x), absolute accuracy ~1e-15 on [-8, 8] via the complementary
// error function.
double std_normal_cdf(double x);

// Inverse of std_normal_cdf on (0, 1); rational initial guess polished
// by Newton steps against std_normal_cdf.
double std_normal_quantile(double p);

// min{2C, R/(p_i n_i)}
double sensitivity(double record_bound, double client_bound,
                   double record_rate, std::size_t records);

// sigma * max{R/(2C), p_i n_i}
double effective_sigma(double sigma, double record_bound, double client_bound,
                       double record_rate, std::size_t records);

// q p_i sqrt(T (e^{1/(2 sigma_i^2)} - 1)); throws when sigma_i == 0 and
// T > 0 (no finite budget exists).
double gdp_mu(std::size_t rounds, double client_rate, double record_rate,
              double sigma_i);

// delta(epsilon) under mu-GDP, clamped to [0, 1].
double gdp_to_delta(double mu, double epsilon);

// Bisection of gdp_to_delta on [0, 64]; stops when
// |delta(eps) - target| <= 1e-3 * target or the bracket is <= 1e-9.
// An unbracketable target (delta(0) <= target) returns 0.
double solve_epsilon(double mu, double delta_target);

// Root-sum-of-squares composition of GDP parameters.
double compose_gdp(std::span<const double> mus);

AccountantReport report(const PrivacyConfig& config);

// One report per distinct (record_rate, records) pair, in first-seen order.
std::vector<AccountantReport> per_client_reports(
    const PrivacyConfig& base,
    std::span<const std::pair<double, std::size_t>> client_rates);

// Smallest sigma whose solved epsilon is <= epsilon_target (bisection).
double calibrate_sigma(double epsilon_target, PrivacyConfig config);

}  // namespace dpbrem::accountant
