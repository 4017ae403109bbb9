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

#include "dpbrem/accountant/gdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dpbrem::accountant {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kEpsilonCeiling = 64.0;
}  // namespace

double std_normal_cdf(double x) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument("std_normal_cdf: non-finite argument");
  }
  // erfc keeps full relative accuracy in the lower tail, which the
  // delta(epsilon) difference of two near-equal tails depends on.
  return 0.5 * std::erfc(-x / kSqrt2);
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("std_normal_quantile: p must be in (0,1)");
  }
  // Beasley-Springer-Moro style rational initial guess.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Two Newton polish steps against the high-accuracy CDF.
  for (int i = 0; i < 2; ++i) {
    const double err = std_normal_cdf(x) - p;
    const double pdf =
        std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.141592653589793);
    if (pdf <= 0.0) {
      break;
    }
    x -= err / pdf;
  }
  return x;
}

double sensitivity(double record_bound, double client_bound,
                   double record_rate, std::size_t records) {
  if (!(record_bound > 0.0) || !(client_bound > 0.0)) {
    throw std::invalid_argument("sensitivity: bounds must be positive");
  }
  const double expected_batch = record_rate * static_cast<double>(records);
  if (!(expected_batch > 0.0)) {
    throw std::invalid_argument("sensitivity: p_i * n_i must be positive");
  }
  return std::min(2.0 * client_bound, record_bound / expected_batch);
}

double effective_sigma(double sigma, double record_bound, double client_bound,
                       double record_rate, std::size_t records) {
  if (!(sigma >= 0.0)) {
    throw std::invalid_argument("effective_sigma: sigma must be >= 0");
  }
  if (!(record_bound > 0.0) || !(client_bound > 0.0)) {
    throw std::invalid_argument("effective_sigma: bounds must be positive");
  }
  return sigma * std::max(record_bound / (2.0 * client_bound),
                          record_rate * static_cast<double>(records));
}

double gdp_mu(std::size_t rounds, double client_rate, double record_rate,
              double sigma_i) {
  if (rounds == 0) {
    return 0.0;
  }
  if (!(sigma_i > 0.0)) {
    throw std::invalid_argument(
        "gdp_mu: sigma_i = 0 gives no finite privacy parameter");
  }
  return client_rate * record_rate *
         std::sqrt(static_cast<double>(rounds) *
                   std::expm1(1.0 / (2.0 * sigma_i * sigma_i)));
}

double gdp_to_delta(double mu, double epsilon) {
  if (!(mu > 0.0)) {
    throw std::invalid_argument("gdp_to_delta: mu must be positive");
  }
  if (!(epsilon >= 0.0)) {
    throw std::invalid_argument("gdp_to_delta: epsilon must be >= 0");
  }
  const double lhs = std_normal_cdf(-epsilon / mu + mu / 2.0);
  const double rhs = std::exp(epsilon) * std_normal_cdf(-epsilon / mu - mu / 2.0);
  return std::clamp(lhs - rhs, 0.0, 1.0);
}

double solve_epsilon(double mu, double delta_target) {
  if (!(mu > 0.0)) {
    throw std::invalid_argument("solve_epsilon: mu must be positive");
  }
  if (!(delta_target > 0.0 && delta_target < 1.0)) {
    throw std::invalid_argument("solve_epsilon: delta must be in (0,1)");
  }
  if (gdp_to_delta(mu, 0.0) <= delta_target) {
    return 0.0;
  }
  double lo = 0.0;
  double hi = kEpsilonCeiling;
  const double tolerance = 1e-3 * delta_target;
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    const double delta_mid = gdp_to_delta(mu, mid);
    if (std::abs(delta_mid - delta_target) <= tolerance) {
      return mid;
    }
    if (delta_mid > delta_target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double compose_gdp(std::span<const double> mus) {
  double total = 0.0;
  for (const double mu : mus) {
    if (!(mu >= 0.0)) {
      throw std::invalid_argument("compose_gdp: mu must be >= 0");
    }
    total += mu * mu;
  }
  return std::sqrt(total);
}

AccountantReport report(const PrivacyConfig& config) {
  AccountantReport out;
  out.record_rate = config.record_rate;
  out.records = config.records;
  out.sensitivity = sensitivity(config.record_bound, config.client_bound,
                                config.record_rate, config.records);
  out.sigma_i = effective_sigma(config.sigma, config.record_bound,
                                config.client_bound, config.record_rate,
                                config.records);
  if (out.sigma_i == 0.0) {
    out.mu = std::numeric_limits<double>::infinity();
    out.epsilon = std::numeric_limits<double>::infinity();
    return out;
  }
  out.mu = gdp_mu(config.rounds, config.client_rate, config.record_rate,
                  out.sigma_i);
  out.epsilon = out.mu > 0.0 ? solve_epsilon(out.mu, config.delta) : 0.0;
  return out;
}

std::vector<AccountantReport> per_client_reports(
    const PrivacyConfig& base,
    std::span<const std::pair<double, std::size_t>> client_rates) {
  std::vector<AccountantReport> out;
  for (const auto& [rate, records] : client_rates) {
    const bool seen =
        std::any_of(out.begin(), out.end(), [&](const AccountantReport& r) {
          return r.record_rate == rate && r.records == records;
        });
    if (seen) {
      continue;
    }
    PrivacyConfig config = base;
    config.record_rate = rate;
    config.records = records;
    out.push_back(report(config));
  }
  return out;
}

double calibrate_sigma(double epsilon_target, PrivacyConfig config) {
  if (!(epsilon_target > 0.0)) {
    throw std::invalid_argument("calibrate_sigma: epsilon must be positive");
  }
  auto epsilon_of = [&config](double sigma) {
    config.sigma = sigma;
    return report(config).epsilon;
  };
  double lo = 1e-4;
  double hi = 64.0;
  if (epsilon_of(hi) > epsilon_target) {
    throw std::invalid_argument("calibrate_sigma: target out of reach");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (epsilon_of(mid) > epsilon_target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

}  // namespace dpbrem::accountant
