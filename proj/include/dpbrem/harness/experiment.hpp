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

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpbrem/accountant/gdp.hpp"
#include "dpbrem/harness/config.hpp"

namespace dpbrem::harness {

struct MetricsRow {
  std::size_t round = 0;
  double test_accuracy = 0.0;
  double train_loss = 0.0;
  double epsilon_spent = 0.0;  // +inf when no noise is added
  double clip_fraction_record = 0.0;
  double clip_fraction_client = 0.0;
  std::optional<double> agg_error_sq;  // only with tracking enabled
};

struct ExperimentResult {
  std::vector<MetricsRow> rows;
  // Mean test accuracy over the completed rounds with round >= ceil(0.9 T).
  double final_accuracy = 0.0;
  double sigma_used = 0.0;  // resolved noise multiplier (central or local)
  std::vector<accountant::AccountantReport> reports;
  std::string metrics_path;  // empty when not written
};

// Fixed header and %.17g reals; the agg_error_sq field is empty when
// tracking is disabled; epsilon_spent prints "inf" when infinite.
extern const char* const kMetricsHeader;
std::string metrics_to_csv(const std::vector<MetricsRow>& rows);

// Write-then-rename so readers never observe partial files.
void write_file_atomic(const std::string& path, const std::string& content);

// Runs the configured T-round experiment; deterministic in (config, seed).
ExperimentResult run_experiment(const ExperimentConfig& config,
                                bool write_output = true);

// Accountant reports for the configured experiment (one per distinct
// client (p, n) pair).
std::vector<accountant::AccountantReport> accountant_reports(
    const ExperimentConfig& config);

struct SweepPoint {
  nlohmann::json assignment;  // dotted path -> value
  double final_accuracy = 0.0;
  std::string metrics_path;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::string index_path;
};

/**
 * Cartesian sweep: grid maps dotted config paths to value arrays. Each
 * point runs with a seed derived from (base seed, point index) and writes
 * its own metrics file plus one index CSV row.
 */
SweepResult sweep(const nlohmann::json& base_config,
                  const nlohmann::json& grid, std::size_t max_points = 4096);

}  // namespace dpbrem::harness
