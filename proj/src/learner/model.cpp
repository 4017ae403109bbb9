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

#include "dpbrem/learner/model.hpp"

#include <cmath>
#include <stdexcept>

namespace dpbrem::learner {

namespace {

void check_spec(const ModelSpec& spec) {
  if (spec.d_in == 0 || spec.num_classes < 2) {
    throw std::invalid_argument("model: need d_in >= 1 and >= 2 classes");
  }
  if (spec.kind == ModelKind::mlp && spec.hidden == 0) {
    throw std::invalid_argument("model: mlp needs hidden >= 1");
  }
}

void check_theta(const core::ParamVector& theta, const ModelSpec& spec) {
  if (theta.size() != spec.param_count()) {
    throw std::invalid_argument("model: parameter vector has wrong length");
  }
}

// softmax probabilities in place of the logit vector, numerically stable.
void softmax_in_place(std::vector<double>& z) {
  double max = z[0];
  for (const double x : z) {
    max = std::max(max, x);
  }
  double total = 0.0;
  for (double& x : z) {
    x = std::exp(x - max);
    total += x;
  }
  for (double& x : z) {
    x /= total;
  }
}

double log_sum_exp(const std::vector<double>& z) {
  double max = z[0];
  for (const double x : z) {
    max = std::max(max, x);
  }
  double total = 0.0;
  for (const double x : z) {
    total += std::exp(x - max);
  }
  return max + std::log(total);
}

struct MlpLayout {
  std::size_t w1, b1, w2, b2;
};

MlpLayout mlp_layout(const ModelSpec& spec) {
  MlpLayout l{};
  l.w1 = 0;
  l.b1 = spec.hidden * spec.d_in;
  l.w2 = l.b1 + spec.hidden;
  l.b2 = l.w2 + spec.num_classes * spec.hidden;
  return l;
}

std::vector<double> mlp_hidden_pre(const core::ParamVector& theta,
                                   const std::vector<double>& x,
                                   const ModelSpec& spec) {
  const MlpLayout l = mlp_layout(spec);
  std::vector<double> z1(spec.hidden);
  for (std::size_t h = 0; h < spec.hidden; ++h) {
    double acc = theta[l.b1 + h];
    const std::size_t row = l.w1 + h * spec.d_in;
    for (std::size_t j = 0; j < spec.d_in; ++j) {
      acc += theta[row + j] * x[j];
    }
    z1[h] = acc;
  }
  return z1;
}

}  // namespace

core::ParamVector init_model(const ModelSpec& spec, core::RngStream stream) {
  check_spec(spec);
  core::ParamVector theta(spec.param_count(), 0.0);
  auto weights = stream.derive("init");
  if (spec.kind == ModelKind::logistic_regression) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.d_in));
    for (std::size_t i = 0; i < spec.num_classes * spec.d_in; ++i) {
      theta[i] = scale * weights.next_gaussian();
    }
    return theta;  // biases stay zero
  }
  const MlpLayout l = mlp_layout(spec);
  const double scale1 = 1.0 / std::sqrt(static_cast<double>(spec.d_in));
  for (std::size_t i = 0; i < spec.hidden * spec.d_in; ++i) {
    theta[l.w1 + i] = scale1 * weights.next_gaussian();
  }
  const double scale2 = 1.0 / std::sqrt(static_cast<double>(spec.hidden));
  for (std::size_t i = 0; i < spec.num_classes * spec.hidden; ++i) {
    theta[l.w2 + i] = scale2 * weights.next_gaussian();
  }
  return theta;
}

std::vector<double> logits(const core::ParamVector& theta,
                           const std::vector<double>& x,
                           const ModelSpec& spec) {
  check_theta(theta, spec);
  if (x.size() != spec.d_in) {
    throw std::invalid_argument("model: feature dimension mismatch");
  }
  std::vector<double> z(spec.num_classes);
  if (spec.kind == ModelKind::logistic_regression) {
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
      double acc = theta[spec.num_classes * spec.d_in + c];
      const std::size_t row = c * spec.d_in;
      for (std::size_t j = 0; j < spec.d_in; ++j) {
        acc += theta[row + j] * x[j];
      }
      z[c] = acc;
    }
    return z;
  }
  const MlpLayout l = mlp_layout(spec);
  std::vector<double> a1 = mlp_hidden_pre(theta, x, spec);
  for (double& v : a1) {
    v = std::max(v, 0.0);
  }
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    double acc = theta[l.b2 + c];
    const std::size_t row = l.w2 + c * spec.hidden;
    for (std::size_t h = 0; h < spec.hidden; ++h) {
      acc += theta[row + h] * a1[h];
    }
    z[c] = acc;
  }
  return z;
}

core::ParamVector per_record_grad(const core::ParamVector& theta,
                                  const data::Record& record,
                                  const ModelSpec& spec) {
  check_theta(theta, spec);
  if (record.label >= spec.num_classes) {
    throw std::invalid_argument("model: label out of range");
  }
  const auto& x = record.features;
  core::ParamVector grad(theta.size(), 0.0);

  if (spec.kind == ModelKind::logistic_regression) {
    std::vector<double> p = logits(theta, x, spec);
    softmax_in_place(p);
    p[record.label] -= 1.0;
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
      const std::size_t row = c * spec.d_in;
      for (std::size_t j = 0; j < spec.d_in; ++j) {
        grad[row + j] = p[c] * x[j];
      }
      grad[spec.num_classes * spec.d_in + c] = p[c];
    }
    return grad;
  }

  const MlpLayout l = mlp_layout(spec);
  std::vector<double> z1 = mlp_hidden_pre(theta, x, spec);
  std::vector<double> a1(z1.size());
  for (std::size_t h = 0; h < z1.size(); ++h) {
    a1[h] = std::max(z1[h], 0.0);
  }
  std::vector<double> p(spec.num_classes);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    double acc = theta[l.b2 + c];
    const std::size_t row = l.w2 + c * spec.hidden;
    for (std::size_t h = 0; h < spec.hidden; ++h) {
      acc += theta[row + h] * a1[h];
    }
    p[c] = acc;
  }
  softmax_in_place(p);
  p[record.label] -= 1.0;

  std::vector<double> da1(spec.hidden, 0.0);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    const std::size_t row = l.w2 + c * spec.hidden;
    for (std::size_t h = 0; h < spec.hidden; ++h) {
      grad[row + h] = p[c] * a1[h];
      da1[h] += p[c] * theta[row + h];
    }
    grad[l.b2 + c] = p[c];
  }
  for (std::size_t h = 0; h < spec.hidden; ++h) {
    // rectifier subgradient at 0 is 0
    const double dz1 = z1[h] > 0.0 ? da1[h] : 0.0;
    const std::size_t row = l.w1 + h * spec.d_in;
    for (std::size_t j = 0; j < spec.d_in; ++j) {
      grad[row + j] = dz1 * x[j];
    }
    grad[l.b1 + h] = dz1;
  }
  return grad;
}

double record_loss(const core::ParamVector& theta, const data::Record& record,
                   const ModelSpec& spec) {
  const std::vector<double> z = logits(theta, record.features, spec);
  return log_sum_exp(z) - z[record.label];
}

double loss(const core::ParamVector& theta, const data::Dataset& dataset,
            const ModelSpec& spec) {
  if (dataset.empty()) {
    throw std::invalid_argument("loss: dataset is empty");
  }
  core::KahanSum acc;
  for (const auto& rec : dataset.records) {
    acc.add(record_loss(theta, rec, spec));
  }
  return acc.value() / static_cast<double>(dataset.size());
}

double accuracy(const core::ParamVector& theta, const data::Dataset& dataset,
                const ModelSpec& spec) {
  if (dataset.empty()) {
    throw std::invalid_argument("accuracy: dataset is empty");
  }
  std::size_t correct = 0;
  for (const auto& rec : dataset.records) {
    const std::vector<double> z = logits(theta, rec.features, spec);
    std::size_t best = 0;
    for (std::size_t c = 1; c < z.size(); ++c) {
      if (z[c] > z[best]) {
        best = c;  // ties keep the smaller index
      }
    }
    correct += (best == rec.label) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

core::ParamVector dataset_mean_grad(const core::ParamVector& theta,
                                    const data::Dataset& dataset,
                                    const ModelSpec& spec) {
  if (dataset.empty()) {
    throw std::invalid_argument("dataset_mean_grad: dataset is empty");
  }
  core::VectorKahanSum acc(theta.size());
  for (const auto& rec : dataset.records) {
    acc.add(per_record_grad(theta, rec, spec));
  }
  core::ParamVector out = acc.value();
  core::scale_in_place(out, 1.0 / static_cast<double>(dataset.size()));
  return out;
}

core::ParamVector fd_gradient_oracle(const core::ParamVector& theta,
                                     const data::Record& record,
                                     const ModelSpec& spec, double h) {
  if (!(h > 0.0)) {
    throw std::invalid_argument("fd_gradient_oracle: h must be positive");
  }
  core::ParamVector grad(theta.size());
  core::ParamVector probe = theta;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    probe[k] = theta[k] + h;
    const double up = record_loss(probe, record, spec);
    probe[k] = theta[k] - h;
    const double down = record_loss(probe, record, spec);
    probe[k] = theta[k];
    grad[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace dpbrem::learner
