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

#include "dpbrem/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dpbrem::data {

namespace {

// Grid placement of class means: class c gets coordinates that are the
// base-m digits of c scaled by the separation, with m the smallest grid
// width that fits all classes. Distinct classes differ in at least one
// digit, so mean distance >= class_separation.
std::vector<std::vector<double>> class_means(std::size_t num_classes,
                                             std::size_t d_in,
                                             double separation) {
  std::size_t width = 2;
  while (std::pow(static_cast<double>(width), static_cast<double>(d_in)) <
         static_cast<double>(num_classes)) {
    ++width;
  }
  std::vector<std::vector<double>> means(num_classes,
                                         std::vector<double>(d_in, 0.0));
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t rest = c;
    for (std::size_t j = 0; j < d_in && rest > 0; ++j) {
      means[c][j] = separation * static_cast<double>(rest % width);
      rest /= width;
    }
  }
  return means;
}

// Marsaglia-Tsang gamma sampler (shape k, scale 1), boosted for k < 1.
double sample_gamma(double k, core::RngStream& stream) {
  if (k < 1.0) {
    const double u = 1.0 - stream.next_unit();  // (0, 1]
    return sample_gamma(k + 1.0, stream) * std::pow(u, 1.0 / k);
  }
  const double d = k - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = stream.next_gaussian();
    double v = 1.0 + c * x;
    if (v <= 0.0) {
      continue;
    }
    v = v * v * v;
    const double u = 1.0 - stream.next_unit();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
      return d * v;
    }
  }
}

std::vector<double> sample_dirichlet(double alpha, std::size_t n,
                                     core::RngStream& stream) {
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) {
    x = sample_gamma(alpha, stream);
    total += x;
  }
  if (total <= 0.0) {
    // All gammas underflowed (tiny alpha): fall back to a single winner.
    w.assign(n, 0.0);
    w[stream.next_below(n)] = 1.0;
    return w;
  }
  for (auto& x : w) {
    x /= total;
  }
  return w;
}

std::vector<Dataset> gather(const Dataset& d,
                            const std::vector<std::vector<std::size_t>>& idx) {
  std::vector<Dataset> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out[i].num_classes = d.num_classes;
    out[i].records.reserve(idx[i].size());
    for (const std::size_t r : idx[i]) {
      out[i].records.push_back(d.records[r]);
    }
  }
  return out;
}

void rebalance_nonempty(std::vector<std::vector<std::size_t>>& parts) {
  for (;;) {
    auto empty_it = std::find_if(parts.begin(), parts.end(),
                                 [](const auto& p) { return p.empty(); });
    if (empty_it == parts.end()) {
      return;
    }
    auto largest_it = std::max_element(
        parts.begin(), parts.end(),
        [](const auto& a, const auto& b) { return a.size() < b.size(); });
    if (largest_it->size() <= 1) {
      throw std::invalid_argument(
          "partition: not enough records to make every client nonempty");
    }
    empty_it->push_back(largest_it->back());
    largest_it->pop_back();
  }
}

}  // namespace

Dataset gen_synthetic(core::RngStream stream, std::size_t n_records,
                      std::size_t d_in, std::size_t num_classes,
                      double class_separation, double label_noise) {
  if (num_classes < 2) {
    throw std::invalid_argument("gen_synthetic: need at least 2 classes");
  }
  if (n_records < num_classes) {
    throw std::invalid_argument("gen_synthetic: n_records < num_classes");
  }
  if (!(class_separation > 0.0)) {
    throw std::invalid_argument("gen_synthetic: class_separation must be > 0");
  }
  if (!(label_noise >= 0.0 && label_noise < 1.0)) {
    throw std::invalid_argument("gen_synthetic: label_noise must be in [0,1)");
  }
  const auto means = class_means(num_classes, d_in, class_separation);
  auto feature_stream = stream.derive("features");
  auto noise_stream = stream.derive("label_noise");

  Dataset out;
  out.num_classes = num_classes;
  out.records.resize(n_records);
  for (std::size_t i = 0; i < n_records; ++i) {
    const std::size_t label = i % num_classes;
    Record& rec = out.records[i];
    rec.label = label;
    rec.features.resize(d_in);
    for (std::size_t j = 0; j < d_in; ++j) {
      rec.features[j] = means[label][j] + feature_stream.next_gaussian();
    }
  }
  if (label_noise > 0.0) {
    for (auto& rec : out.records) {
      if (noise_stream.next_bernoulli(label_noise)) {
        rec.label = noise_stream.next_below(num_classes);
      }
    }
  }
  return out;
}

std::vector<Dataset> partition_shards(const Dataset& d, std::size_t n_clients,
                                      std::size_t shards_per_client,
                                      core::RngStream stream) {
  if (n_clients == 0 || shards_per_client == 0) {
    throw std::invalid_argument(
        "partition_shards: n_clients and shards_per_client must be positive");
  }
  const std::size_t n_shards = n_clients * shards_per_client;
  const std::size_t per_shard = d.size() / n_shards;
  if (per_shard == 0) {
    throw std::invalid_argument("partition_shards: fewer records than shards");
  }

  // Sort by label, ties broken by original index; drop the remainder so
  // shards are exactly equal.
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&d](std::size_t a, std::size_t b) {
                     return d.records[a].label < d.records[b].label;
                   });
  order.resize(n_shards * per_shard);

  std::vector<std::size_t> shard_ids(n_shards);
  std::iota(shard_ids.begin(), shard_ids.end(), 0);
  core::shuffle(shard_ids, stream);

  std::vector<std::vector<std::size_t>> parts(n_clients);
  for (std::size_t client = 0; client < n_clients; ++client) {
    for (std::size_t k = 0; k < shards_per_client; ++k) {
      const std::size_t shard = shard_ids[client * shards_per_client + k];
      for (std::size_t r = 0; r < per_shard; ++r) {
        parts[client].push_back(order[shard * per_shard + r]);
      }
    }
  }
  return gather(d, parts);
}

std::vector<Dataset> partition_dirichlet(const Dataset& d,
                                         std::size_t n_clients, double alpha,
                                         core::RngStream stream) {
  if (n_clients == 0) {
    throw std::invalid_argument("partition_dirichlet: n_clients must be >= 1");
  }
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("partition_dirichlet: alpha must be > 0");
  }
  std::vector<std::vector<std::size_t>> by_class(d.num_classes);
  for (std::size_t i = 0; i < d.size(); ++i) {
    by_class[d.records[i].label].push_back(i);
  }
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty()) {
      throw std::invalid_argument("partition_dirichlet: class " +
                                  std::to_string(c) + " has no records");
    }
  }

  std::vector<std::vector<std::size_t>> parts(n_clients);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto class_stream = stream.derive("class").derive(c);
    auto& members = by_class[c];
    core::shuffle(members, class_stream);
    const auto w = sample_dirichlet(alpha, n_clients, class_stream);

    // Largest-remainder apportionment of |members| records to weights w.
    const std::size_t total = members.size();
    std::vector<std::size_t> counts(n_clients);
    std::vector<std::pair<double, std::size_t>> fractions(n_clients);
    std::size_t assigned = 0;
    for (std::size_t j = 0; j < n_clients; ++j) {
      const double share = w[j] * static_cast<double>(total);
      counts[j] = static_cast<std::size_t>(share);
      fractions[j] = {share - static_cast<double>(counts[j]), j};
      assigned += counts[j];
    }
    std::sort(fractions.begin(), fractions.end(),
              [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
              });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) {
      counts[fractions[k % n_clients].second] += 1;
    }

    std::size_t offset = 0;
    for (std::size_t j = 0; j < n_clients; ++j) {
      for (std::size_t r = 0; r < counts[j]; ++r) {
        parts[j].push_back(members[offset++]);
      }
    }
  }
  rebalance_nonempty(parts);
  return gather(d, parts);
}

std::vector<Dataset> partition_uniform(const Dataset& d, std::size_t n_clients,
                                       core::RngStream stream) {
  if (n_clients == 0) {
    throw std::invalid_argument("partition_uniform: n_clients must be >= 1");
  }
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  core::shuffle(order, stream);
  std::vector<std::vector<std::size_t>> parts(n_clients);
  for (std::size_t i = 0; i < order.size(); ++i) {
    parts[i % n_clients].push_back(order[i]);
  }
  rebalance_nonempty(parts);
  return gather(d, parts);
}

std::vector<Dataset> partition(const Dataset& d, const PartitionSpec& spec,
                               core::RngStream stream) {
  switch (spec.scheme) {
    case PartitionScheme::shards:
      return partition_shards(d, spec.n_clients, spec.shards_per_client,
                              stream);
    case PartitionScheme::dirichlet:
      return partition_dirichlet(d, spec.n_clients, spec.alpha, stream);
    case PartitionScheme::uniform:
      return partition_uniform(d, spec.n_clients, stream);
  }
  throw std::invalid_argument("partition: unknown scheme");
}

Dataset poisson_sample(const Dataset& d, double p, core::RngStream& stream) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::invalid_argument("poisson_sample: p must be in (0,1]");
  }
  Dataset out;
  out.num_classes = d.num_classes;
  for (const auto& rec : d.records) {
    if (stream.next_unit() < p) {
      out.records.push_back(rec);
    }
  }
  return out;
}

std::vector<std::size_t> poisson_sample_indices(std::size_t n, double p,
                                                core::RngStream& stream) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::invalid_argument("poisson_sample_indices: p must be in (0,1]");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (stream.next_unit() < p) {
      out.push_back(i);
    }
  }
  return out;
}

}  // namespace dpbrem::data
