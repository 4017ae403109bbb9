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
#include <limits>
#include <stdexcept>

#include "dpbrem/core/rng.hpp"
#include "dpbrem/core/vector_ops.hpp"

using namespace dpbrem;

TEST_CASE("l2_norm basics") {
  CHECK(core::l2_norm(std::vector<double>{3.0, 4.0}) == doctest::Approx(5.0));
  CHECK(core::l2_norm(std::vector<double>(17, 0.0)) == 0.0);
  CHECK(core::l2_norm(std::vector<double>{}) == 0.0);
}

TEST_CASE("l2_norm matches a naive summation oracle") {
  auto stream = core::RngStream::from_seed(11);
  core::ParamVector v(100);
  for (auto& x : v) {
    x = 3.0 * stream.next_gaussian();
  }
  double naive = 0.0;
  for (const double x : v) {
    naive += x * x;
  }
  const double expected = std::sqrt(naive);
  CHECK(std::abs(core::l2_norm(v) - expected) <= 1e-12 * expected);
}

TEST_CASE("l2_norm survives entries near the overflow edge") {
  core::ParamVector v{1e200, -1e200, 5e199};
  const double norm = core::l2_norm(v);
  CHECK(std::isfinite(norm));
  CHECK(norm == doctest::Approx(1e200 * std::sqrt(2.25)));
}

TEST_CASE("clip scales to the bound") {
  const auto out = core::clip({3.0, 4.0}, 2.0);
  CHECK(out[0] == doctest::Approx(1.2));
  CHECK(out[1] == doctest::Approx(1.6));
}

TEST_CASE("clip is the identity inside the ball and on zero") {
  const core::ParamVector v{0.5, -0.25, 0.1};
  CHECK(core::clip(v, 1.0) == v);
  const core::ParamVector zero(4, 0.0);
  CHECK(core::clip(zero, 0.5) == zero);
}

TEST_CASE("clip rejects bad inputs") {
  CHECK_THROWS_AS(core::clip({1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(core::clip({1.0}, -2.0), std::invalid_argument);
  CHECK_THROWS_AS(core::clip({std::numeric_limits<double>::quiet_NaN()}, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(core::clip({std::numeric_limits<double>::infinity()}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("clip properties: idempotence, norm bound, direction") {
  auto stream = core::RngStream::from_seed(22);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t d = 1 + stream.next_below(16);
    core::ParamVector v(d);
    const double scale = std::pow(10.0, -2.0 + 4.0 * stream.next_unit());
    for (auto& x : v) {
      x = scale * stream.next_gaussian();
    }
    const double bound = std::pow(10.0, -2.0 + 3.0 * stream.next_unit());
    const auto once = core::clip(v, bound);
    CHECK(core::l2_norm(once) <= bound + 1e-12);
    CHECK(core::clip(once, bound) == once);
    // direction: clipped vector is a nonnegative multiple of v
    const double vnorm = core::l2_norm(v);
    if (vnorm > 0.0) {
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        dot += once[k] * v[k];
      }
      CHECK(dot >= 0.0);
      CHECK(std::abs(dot - core::l2_norm(once) * vnorm) <=
            1e-9 * (1.0 + dot));
    }
  }
}

TEST_CASE("clip distance bound on random triples") {
  auto stream = core::RngStream::from_seed(33);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t d = 1 + stream.next_below(64);
    core::ParamVector x(d);
    core::ParamVector delta(d);
    const double xs = std::pow(10.0, -1.0 + 3.0 * stream.next_unit());
    const double ds = std::pow(10.0, -1.0 + 3.0 * stream.next_unit());
    for (std::size_t k = 0; k < d; ++k) {
      x[k] = xs * stream.next_gaussian();
      delta[k] = ds * stream.next_gaussian();
    }
    const double bound = std::pow(10.0, -2.0 + 3.0 * stream.next_unit());
    core::ParamVector shifted = x;
    core::add_in_place(shifted, delta);
    const double lhs = core::l2_norm(
        core::sub(core::clip(x, bound), core::clip(shifted, bound)));
    CHECK(lhs <= std::min(2.0 * bound, core::l2_norm(delta)) + 1e-9);
  }
}

TEST_CASE("gaussian_vector: zero stddev and determinism") {
  auto a = core::RngStream::from_seed(7).derive("noise");
  auto b = core::RngStream::from_seed(7).derive("noise");
  CHECK(core::gaussian_vector(a, 5, 0.0) == core::ParamVector(5, 0.0));
  const auto va = core::gaussian_vector(a, 32, 1.5);
  core::gaussian_vector(b, 5, 0.0);  // consumes nothing at stddev 0
  const auto vb = core::gaussian_vector(b, 32, 1.5);
  CHECK(va == vb);
}

TEST_CASE("gaussian_vector moments at 1e5 samples") {
  auto stream = core::RngStream::from_seed(1234).derive("moments");
  const auto v = core::gaussian_vector(stream, 100000, 1.0);
  double mean = 0.0;
  for (const double x : v) {
    mean += x;
  }
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (const double x : v) {
    var += (x - mean) * (x - mean);
  }
  var /= static_cast<double>(v.size());
  CHECK(std::abs(mean) <= 0.01);
  CHECK(std::abs(var - 1.0) <= 0.02);
}

TEST_CASE("stream derivation is deterministic and label-sensitive") {
  auto root = core::RngStream::from_seed(99);
  auto a1 = root.derive("round/1/client/3");
  auto a2 = root.derive("round/1/client/3");
  CHECK(a1.next_u64() == a2.next_u64());
  CHECK(a1.next_u64() == a2.next_u64());

  auto x = root.derive("a");
  auto y = root.derive("b");
  CHECK(x.next_u64() != y.next_u64());

  // Length-prefixed paths: ("a" then "b") differs from ("ab").
  auto nested = root.derive("a").derive("b");
  auto flat = root.derive("ab");
  CHECK(nested.next_u64() != flat.next_u64());
}

TEST_CASE("derivation does not depend on parent consumption") {
  auto fresh = core::RngStream::from_seed(5);
  auto spent = core::RngStream::from_seed(5);
  for (int i = 0; i < 10; ++i) {
    spent.next_u64();
  }
  auto c1 = fresh.derive("child");
  auto c2 = spent.derive("child");
  CHECK(c1.next_u64() == c2.next_u64());
}

TEST_CASE("integer and string derivations differ") {
  auto root = core::RngStream::from_seed(5);
  auto by_index = root.derive(std::uint64_t{3});
  auto by_text = root.derive("3");
  CHECK(by_index.next_u64() != by_text.next_u64());
}

TEST_CASE("next_below stays in range and covers values") {
  auto stream = core::RngStream::from_seed(17);
  std::vector<int> seen(10, 0);
  for (int i = 0; i < 5000; ++i) {
    const auto v = stream.next_below(10);
    REQUIRE(v < 10);
    seen[v] += 1;
  }
  for (const int count : seen) {
    CHECK(count > 300);  // roughly uniform
  }
}

TEST_CASE("kahan summation is order-insensitive at 1e-10") {
  auto stream = core::RngStream::from_seed(3);
  std::vector<double> values(5000);
  for (auto& v : values) {
    v = std::pow(10.0, -6.0 + 12.0 * stream.next_unit()) *
        (stream.next_bernoulli(0.5) ? 1.0 : -1.0);
  }
  core::KahanSum forward;
  for (const double v : values) {
    forward.add(v);
  }
  core::KahanSum backward;
  for (auto it = values.rbegin(); it != values.rend(); ++it) {
    backward.add(*it);
  }
  const double scale = std::max(std::abs(forward.value()), 1.0);
  CHECK(std::abs(forward.value() - backward.value()) <= 1e-10 * scale);
}
