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

namespace dpbrem::core {

// Dense parameter/gradient/momentum vector of the model dimension d.
using ParamVector = std::vector<double>;

// Kahan-compensated accumulator. Client-side sums must be
// reduction-order-insensitive, so every multi-term reduction on the
// learning path goes through this.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - compensation_;
    const double t = sum_ + y;
    compensation_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

bool all_finite(std::span<const double> v);

// Euclidean norm; empty vector has norm 0. Guards against overflow for
// very large entries by rescaling.
double l2_norm(std::span<const double> v);

// v * min{1, bound / ||v||}. Unchanged when ||v|| <= bound; the zero
// vector maps to itself. Rejects bound <= 0 and non-finite input.
ParamVector clip(const ParamVector& v, double bound);

// In-place elementwise helpers.
void add_in_place(ParamVector& dst, std::span<const double> src);
void sub_in_place(ParamVector& dst, std::span<const double> src);
void scale_in_place(ParamVector& dst, double factor);
// dst += factor * src
void axpy_in_place(ParamVector& dst, double factor, std::span<const double> src);

ParamVector sub(const ParamVector& a, const ParamVector& b);

// Compensated elementwise accumulator for vector sums.
class VectorKahanSum {
 public:
  explicit VectorKahanSum(std::size_t d) : sums_(d), comps_(d) {}
  void add(std::span<const double> v);
  void add_scaled(double factor, std::span<const double> v);
  ParamVector value() const { return sums_; }
  std::size_t size() const { return sums_.size(); }

 private:
  std::vector<double> sums_;
  std::vector<double> comps_;
};

}  // namespace dpbrem::core
