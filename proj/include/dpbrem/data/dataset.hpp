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
#include <string>
#include <vector>

#include "dpbrem/core/rng.hpp"

namespace dpbrem::data {

struct Record {
  std::vector<double> features;
  std::size_t label = 0;
};

struct Dataset {
  std::vector<Record> records;
  std::size_t num_classes = 0;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  std::size_t feature_dim() const {
    return records.empty() ? 0 : records.front().features.size();
  }
};

enum class PartitionScheme { shards, dirichlet, uniform };

struct PartitionSpec {
  PartitionScheme scheme = PartitionScheme::uniform;
  std::size_t n_clients = 1;
  std::size_t shards_per_client = 1;  // shards scheme
  double alpha = 0.9;                 // dirichlet scheme
};

/**
 * Synthetic classification task: one unit-variance Gaussian cluster per
 * class, cluster means placed on an axis-aligned grid with spacing
 * class_separation (so distinct means are at least class_separation
 * apart). Labels are assigned round-robin, so every class appears and
 * the class counts are balanced up to one record. A label_noise fraction
 * of records has its label resampled uniformly over [0, L).
 */
Dataset gen_synthetic(core::RngStream stream, std::size_t n_records,
                      std::size_t d_in, std::size_t num_classes,
                      double class_separation, double label_noise);

/**
 * Label-sorted shard partition. Records are sorted by label (ties broken
 * by original index), the trailing remainder is dropped so that
 * n_clients * shards_per_client equal shards remain, and each client
 * receives shards_per_client shards without replacement.
 */
std::vector<Dataset> partition_shards(const Dataset& d, std::size_t n_clients,
                                      std::size_t shards_per_client,
                                      core::RngStream stream);

/**
 * Per-class Dirichlet(alpha) proportions across clients. Partitions are
 * disjoint and exhaustive; if a client ends up empty, one record is moved
 * from the largest client until all clients are nonempty.
 */
std::vector<Dataset> partition_dirichlet(const Dataset& d,
                                         std::size_t n_clients, double alpha,
                                         core::RngStream stream);

// IID split: shuffled records dealt round-robin.
std::vector<Dataset> partition_uniform(const Dataset& d, std::size_t n_clients,
                                       core::RngStream stream);

std::vector<Dataset> partition(const Dataset& d, const PartitionSpec& spec,
                               core::RngStream stream);

/**
 * Poisson subsampling: each record kept independently with probability p.
 * The empty sample is a legal result.
 */
Dataset poisson_sample(const Dataset& d, double p, core::RngStream& stream);

// As above but returns record indices into d (used where only membership
// matters).
std::vector<std::size_t> poisson_sample_indices(std::size_t n, double p,
                                                core::RngStream& stream);

}  // namespace dpbrem::data
