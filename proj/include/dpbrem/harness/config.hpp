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

#include <cstdint>
#include <string>

#include <json.hpp>

namespace dpbrem::harness {

struct DatasetConfig {
  std::string kind = "synthetic";  // synthetic | idx
  // synthetic
  std::size_t n_records = 4000;
  std::size_t d_in = 24;
  std::size_t num_classes = 3;
  double class_separation = 8.0;
  double label_noise = 0.0;
  std::size_t test_records = 2000;
  // idx
  std::string images;
  std::string labels;
  std::string test_images;
  std::string test_labels;
};

struct PartitionConfig {
  std::string scheme = "shards";  // shards | dirichlet | uniform
  std::size_t n_clients = 20;
  std::size_t shards_per_client = 2;
  double alpha = 0.9;
};

struct ModelConfig {
  std::string kind = "logistic_regression";  // logistic_regression | mlp
  std::size_t hidden = 16;
};

struct ParamsConfig {
  std::size_t rounds = 300;       // T
  double client_rate = 1.0;       // q
  double record_rate = 0.05;      // p
  double beta = 0.9;
  // Noise: explicit sigma wins; otherwise epsilon_target calibrates it.
  double sigma = -1.0;
  double sigma_local = -1.0;
  double epsilon_target = 3.0;
  double record_bound0 = 15.0;    // R_0
  double record_bound_end_factor = 0.3;
  double client_bound0 = 1.0;     // C_0
  double client_bound_end_factor = 0.3;
  double eta_start = 0.1;
  double eta_end = 0.01;
  // ddp_rp extras
  std::size_t tau = 0;
  double range_bound = 0.0;
};

struct AttackConfigBlock {
  std::string kind = "none";  // none | alie | ipm | lf | mtb
  double byz_fraction = 0.0;
  double ipm_scale = 1.0;
  double gamma_max = 50.0;
  std::string perturbation = "inverse_unit";
  double lf_scale = 1.0;
  double alie_z_max = -1.0;  // < 0: derived from (n, |B|)
};

struct AccountantConfigBlock {
  double delta = 1e-6;
};

struct SecureConfigBlock {
  bool enabled = false;
  std::size_t n_parties = 10;
  std::size_t threshold = 4;
  unsigned fractional_bits = 16;
  unsigned l_bits = 16;
  bool transcript = false;
};

struct TrackingConfig {
  bool aggregation_error = false;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string rule = "dp_brem";
  DatasetConfig dataset;
  PartitionConfig partition;
  ModelConfig model;
  ParamsConfig params;
  AttackConfigBlock attack;
  AccountantConfigBlock accountant;
  SecureConfigBlock secure;
  TrackingConfig tracking;
  std::string output = "metrics.csv";
};

// Parses and cross-validates; unknown keys are rejected with their path.
ExperimentConfig parse_config(const nlohmann::json& j);

// Reads the file, applies DPBREM_* environment overrides (see
// apply_env_overrides), then parses.
ExperimentConfig load_config(const std::string& path);

nlohmann::json config_to_json(const ExperimentConfig& config);

/**
 * Environment overrides: a variable DPBREM_<path> with "__" separating
 * path segments replaces that config key; values parse as JSON scalars,
 * falling back to string. Example: DPBREM_params__sigma=0.1.
 */
void apply_env_overrides(nlohmann::json& j);

// Sets a dotted path ("params.sigma") in a JSON document.
void set_json_path(nlohmann::json& j, const std::string& dotted_path,
                   const nlohmann::json& value);

}  // namespace dpbrem::harness
