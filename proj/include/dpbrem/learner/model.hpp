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

#include "dpbrem/core/rng.hpp"
#include "dpbrem/core/vector_ops.hpp"
#include "dpbrem/data/dataset.hpp"

namespace dpbrem::learner {

enum class ModelKind { logistic_regression, mlp };

/**
 * Softmax classifiers with hand-written backpropagation: multinomial
 * logistic regression, and a one-hidden-layer perceptron with rectifier
 * activation (subgradient at 0 taken as 0).
 *
 * Parameter layout (row-major):
 *   logistic: [W (L x d_in), b (L)]
 *   mlp:      [W1 (hidden x d_in), b1 (hidden), W2 (L x hidden), b2 (L)]
 */
struct ModelSpec {
  ModelKind kind = ModelKind::logistic_regression;
  std::size_t d_in = 0;
  std::size_t num_classes = 0;
  std::size_t hidden = 0;  // mlp only

  std::size_t param_count() const {
    if (kind == ModelKind::logistic_regression) {
      return (d_in + 1) * num_classes;
    }
    return (d_in + 1) * hidden + (hidden + 1) * num_classes;
  }
};

// Weights drawn from N(0, 1/fan_in) per layer; biases zero.
core::ParamVector init_model(const ModelSpec& spec, core::RngStream stream);

// Class scores for one record.
std::vector<double> logits(const core::ParamVector& theta,
                           const std::vector<double>& features,
                           const ModelSpec& spec);

// Exact gradient of the softmax cross-entropy loss at a single record.
core::ParamVector per_record_grad(const core::ParamVector& theta,
                                  const data::Record& record,
                                  const ModelSpec& spec);

double record_loss(const core::ParamVector& theta, const data::Record& record,
                   const ModelSpec& spec);

// Mean cross-entropy over a nonempty dataset.
double loss(const core::ParamVector& theta, const data::Dataset& dataset,
            const ModelSpec& spec);

// Fraction of argmax-correct predictions, ties broken toward the
// smallest class index.
double accuracy(const core::ParamVector& theta, const data::Dataset& dataset,
                const ModelSpec& spec);

// Mean-loss gradient with compensated accumulation; equals the average of
// per_record_grad over the dataset up to reduction order.
core::ParamVector dataset_mean_grad(const core::ParamVector& theta,
                                    const data::Dataset& dataset,
                                    const ModelSpec& spec);

// Central-difference gradient oracle: (l(theta + h e_k) - l(theta - h e_k)) / 2h.
core::ParamVector fd_gradient_oracle(const core::ParamVector& theta,
                                     const data::Record& record,
                                     const ModelSpec& spec, double h);

}  // namespace dpbrem::learner
