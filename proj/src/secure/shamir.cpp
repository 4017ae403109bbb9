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

#include "dpbrem/secure/shamir.hpp"

#include <algorithm>

namespace dpbrem::secure {

namespace {

// Polynomials as little-endian coefficient vectors without leading zeros;
// the zero polynomial is the empty vector (degree -1).
using Poly = std::vector<std::uint64_t>;

int degree(const Poly& p) { return static_cast<int>(p.size()) - 1; }

void normalize(Poly& p) {
  while (!p.empty() && p.back() == 0) {
    p.pop_back();
  }
}

Poly poly_add(const Poly& a, const Poly& b, std::uint64_t p) {
  Poly out(std::max(a.size(), b.size()), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint64_t av = i < a.size() ? a[i] : 0;
    const std::uint64_t bv = i < b.size() ? b[i] : 0;
    out[i] = mod_add(av, bv, p);
  }
  normalize(out);
  return out;
}

Poly poly_sub(const Poly& a, const Poly& b, std::uint64_t p) {
  Poly out(std::max(a.size(), b.size()), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint64_t av = i < a.size() ? a[i] : 0;
    const std::uint64_t bv = i < b.size() ? b[i] : 0;
    out[i] = mod_sub(av, bv, p);
  }
  normalize(out);
  return out;
}

Poly poly_mul(const Poly& a, const Poly& b, std::uint64_t p) {
  if (a.empty() || b.empty()) {
    return {};
  }
  Poly out(a.size() + b.size() - 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      out[i + j] = mod_add(out[i + j], mod_mul(a[i], b[j], p), p);
    }
  }
  normalize(out);
  return out;
}

// quotient/remainder of a / b; b nonzero.
std::pair<Poly, Poly> poly_divmod(const Poly& a, const Poly& b,
                                  std::uint64_t p) {
  Poly rem = a;
  normalize(rem);
  if (degree(rem) < degree(b)) {
    return {{}, rem};
  }
  Poly quot(static_cast<std::size_t>(degree(rem) - degree(b)) + 1, 0);
  const std::uint64_t lead_inv = mod_inv(b.back(), p);
  while (degree(rem) >= degree(b)) {
    const std::size_t shift =
        static_cast<std::size_t>(degree(rem) - degree(b));
    const std::uint64_t factor = mod_mul(rem.back(), lead_inv, p);
    quot[shift] = factor;
    for (std::size_t i = 0; i < b.size(); ++i) {
      rem[shift + i] = mod_sub(rem[shift + i], mod_mul(factor, b[i], p), p);
    }
    normalize(rem);
    if (rem.empty()) {
      break;
    }
  }
  normalize(quot);
  return {quot, rem};
}

std::uint64_t poly_eval(const Poly& poly, std::uint64_t x, std::uint64_t p) {
  std::uint64_t acc = 0;
  for (auto it = poly.rbegin(); it != poly.rend(); ++it) {
    acc = mod_add(mod_mul(acc, x, p), *it, p);
  }
  return acc;
}

void check_shares(std::span<const Share> shares, const SharingConfig& cfg) {
  cfg.validate();
  std::vector<std::size_t> points;
  points.reserve(shares.size());
  for (const auto& s : shares) {
    if (s.point < 1 || s.point > cfg.n_parties) {
      throw std::invalid_argument("shamir: share point out of range");
    }
    points.push_back(s.point);
  }
  std::sort(points.begin(), points.end());
  if (std::adjacent_find(points.begin(), points.end()) != points.end()) {
    throw std::invalid_argument("shamir: duplicate share points");
  }
}

}  // namespace

std::vector<Share> share(std::uint64_t secret, const SharingConfig& cfg,
                         core::RngStream& stream) {
  cfg.validate();
  const std::uint64_t p = cfg.modulus;
  if (secret >= p) {
    throw std::invalid_argument("share: secret not reduced mod p");
  }
  Poly poly(cfg.threshold);
  poly[0] = secret;
  for (std::size_t i = 1; i < cfg.threshold; ++i) {
    poly[i] = stream.next_below(p);
  }
  std::vector<Share> out(cfg.n_parties);
  for (std::size_t j = 0; j < cfg.n_parties; ++j) {
    out[j].point = j + 1;
    out[j].value = poly_eval(poly, j + 1, p);
  }
  return out;
}

std::uint64_t reconstruct(std::span<const Share> shares,
                          const SharingConfig& cfg) {
  check_shares(shares, cfg);
  if (shares.size() < cfg.threshold) {
    throw std::invalid_argument("reconstruct: fewer than t shares");
  }
  const std::uint64_t p = cfg.modulus;
  // Lagrange basis at x = 0 over the first t shares.
  const std::size_t t = cfg.threshold;
  std::uint64_t secret = 0;
  for (std::size_t i = 0; i < t; ++i) {
    std::uint64_t num = 1;
    std::uint64_t den = 1;
    const std::uint64_t xi = shares[i].point;
    for (std::size_t j = 0; j < t; ++j) {
      if (j == i) {
        continue;
      }
      const std::uint64_t xj = shares[j].point;
      num = mod_mul(num, xj % p, p);
      den = mod_mul(den, mod_sub(xj % p, xi % p, p), p);
    }
    const std::uint64_t weight = mod_mul(num, mod_inv(den, p), p);
    secret = mod_add(secret, mod_mul(shares[i].value % p, weight, p), p);
  }
  return secret;
}

std::optional<std::uint64_t> robust_reconstruct(std::span<const Share> shares,
                                                const SharingConfig& cfg) {
  check_shares(shares, cfg);
  const std::uint64_t p = cfg.modulus;
  const std::size_t m = shares.size();
  const std::size_t k = cfg.threshold;  // message length
  if (m < k) {
    return std::nullopt;
  }

  // g0 = prod (x - x_i)
  Poly g0{1};
  for (const auto& s : shares) {
    g0 = poly_mul(g0, Poly{mod_sub(0, s.point % p, p), 1}, p);
  }

  // g1 interpolates all received points: g1 = sum y_i * (g0 / (x - x_i))
  // normalised at x_i.
  Poly g1;
  for (const auto& s : shares) {
    const auto [basis, rem] =
        poly_divmod(g0, Poly{mod_sub(0, s.point % p, p), 1}, p);
    (void)rem;  // exact division
    const std::uint64_t denom = poly_eval(basis, s.point % p, p);
    const std::uint64_t scale =
        mod_mul(s.value % p, mod_inv(denom, p), p);
    Poly term = basis;
    for (auto& c : term) {
      c = mod_mul(c, scale, p);
    }
    g1 = poly_add(g1, term, p);
  }

  // Partial extended Euclid on (g0, g1), tracking v with g = u g0 + v g1,
  // stopping at the first remainder of degree < (m + k) / 2.
  Poly r_prev = g0;
  Poly r_cur = g1;
  Poly v_prev{};   // v for r_prev
  Poly v_cur{1};   // v for r_cur
  while (!r_cur.empty() &&
         2 * degree(r_cur) >= static_cast<int>(m + k)) {
    const auto [q, r] = poly_divmod(r_prev, r_cur, p);
    Poly v_next = poly_sub(v_prev, poly_mul(q, v_cur, p), p);
    r_prev = std::move(r_cur);
    r_cur = r;
    v_prev = std::move(v_cur);
    v_cur = std::move(v_next);
  }
  if (v_cur.empty()) {
    return std::nullopt;
  }
  const auto [f1, residue] = poly_divmod(r_cur, v_cur, p);
  if (!residue.empty()) {
    return std::nullopt;  // residual check failed
  }
  if (degree(f1) >= static_cast<int>(k)) {
    return std::nullopt;
  }
  return f1.empty() ? 0 : f1[0];
}

}  // namespace dpbrem::secure
