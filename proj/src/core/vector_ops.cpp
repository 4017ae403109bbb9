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

#include "dpbrem/core/vector_ops.hpp"

#include <cmath>
#include <stdexcept>

namespace dpbrem::core {

bool all_finite(std::span<const double> v) {
  for (const double x : v) {
    if (!std::isfinite(x)) {
      return false;
    }
  }
  return true;
}

double l2_norm(std::span<const double> v) {
  double max_abs = 0.0;
  for (const double x : v) {
    max_abs = std::max(max_abs, std::abs(x));
  }
  if (max_abs == 0.0) {
    return 0.0;
  }
  if (max_abs > 1e150) {
    // Rescale to avoid overflow in the squared sum.
    KahanSum acc;
    for (const double x : v) {
      const double s = x / max_abs;
      acc.add(s * s);
    }
    return max_abs * std::sqrt(acc.value());
  }
  KahanSum acc;
  for (const double x : v) {
    acc.add(x * x);
  }
  return std::sqrt(acc.value());
}

ParamVector clip(const ParamVector& v, double bound) {
  if (!(bound > 0.0)) {
    throw std::invalid_argument("clip: bound must be positive");
  }
  if (!all_finite(v)) {
    throw std::invalid_argument("clip: input has non-finite entries");
  }
  const double norm = l2_norm(v);
  // The relative slack makes clipping exactly idempotent: a rescaled
  // vector's norm can exceed the bound by a few ulps, which must not
  // trigger a second rescale.
  if (norm <= bound * (1.0 + 1e-13)) {
    return v;
  }
  ParamVector out(v);
  const double factor = bound / norm;
  for (double& x : out) {
    x *= factor;
  }
  return out;
}

void add_in_place(ParamVector& dst, std::span<const double> src) {
  if (dst.size() != src.size()) {
    throw std::invalid_argument("add_in_place: dimension mismatch");
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] += src[i];
  }
}

void sub_in_place(ParamVector& dst, std::span<const double> src) {
  if (dst.size() != src.size()) {
    throw std::invalid_argument("sub_in_place: dimension mismatch");
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] -= src[i];
  }
}

void scale_in_place(ParamVector& dst, double factor) {
  for (double& x : dst) {
    x *= factor;
  }
}

void axpy_in_place(ParamVector& dst, double factor,
                   std::span<const double> src) {
  if (dst.size() != src.size()) {
    throw std::invalid_argument("axpy_in_place: dimension mismatch");
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] += factor * src[i];
  }
}

ParamVector sub(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("sub: dimension mismatch");
  }
  ParamVector out(a);
  sub_in_place(out, b);
  return out;
}

void VectorKahanSum::add(std::span<const double> v) {
  if (v.size() != sums_.size()) {
    throw std::invalid_argument("VectorKahanSum: dimension mismatch");
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double y = v[i] - comps_[i];
    const double t = sums_[i] + y;
    comps_[i] = (t - sums_[i]) - y;
    sums_[i] = t;
  }
}

void VectorKahanSum::add_scaled(double factor, std::span<const double> v) {
  if (v.size() != sums_.size()) {
    throw std::invalid_argument("VectorKahanSum: dimension mismatch");
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double y = factor * v[i] - comps_[i];
    const double t = sums_[i] + y;
    comps_[i] = (t - sums_[i]) - y;
    sums_[i] = t;
  }
}

}  // namespace dpbrem::core
