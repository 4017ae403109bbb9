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

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dpbrem/harness/config.hpp"
#include "dpbrem/harness/experiment.hpp"
#include "dpbrem/harness/verify.hpp"

namespace {

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open " + path);
  }
  nlohmann::json j;
  in >> j;
  return j;
}

int cmd_run(const std::string& config_path) {
  const auto config = dpbrem::harness::load_config(config_path);
  const auto result = dpbrem::harness::run_experiment(config);
  std::printf("rule=%s rounds=%zu sigma=%.6g\n", config.rule.c_str(),
              config.params.rounds, result.sigma_used);
  for (const auto& report : result.reports) {
    std::printf("client group p=%.4g n=%zu: epsilon=%.6g at delta=%.3g\n",
                report.record_rate, report.records, report.epsilon,
                config.accountant.delta);
  }
  std::printf("final_accuracy=%.6f\n", result.final_accuracy);
  std::printf("metrics written to %s\n", result.metrics_path.c_str());
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_spec) {
  nlohmann::json base = read_json_file(config_path);
  dpbrem::harness::apply_env_overrides(base);
  nlohmann::json grid;
  try {
    grid = nlohmann::json::parse(grid_spec);
  } catch (const nlohmann::json::exception&) {
    grid = read_json_file(grid_spec);
  }
  const auto result = dpbrem::harness::sweep(base, grid);
  for (const auto& point : result.points) {
    std::printf("%s -> final_accuracy=%.6f (%s)\n", point.assignment.dump().c_str(),
                point.final_accuracy, point.metrics_path.c_str());
  }
  std::printf("index written to %s\n", result.index_path.c_str());
  return 0;
}

int cmd_accountant(const std::string& config_path) {
  const auto config = dpbrem::harness::load_config(config_path);
  const auto reports = dpbrem::harness::accountant_reports(config);
  std::printf("%-12s %-8s %-14s %-14s %-14s %-14s\n", "record_rate", "records",
              "S_i", "sigma_i", "mu_i", "epsilon_i");
  for (const auto& r : reports) {
    std::printf("%-12.6g %-8zu %-14.8g %-14.8g %-14.8g %-14.8g\n",
                r.record_rate, r.records, r.sensitivity, r.sigma_i, r.mu,
                r.epsilon);
  }
  return 0;
}

int cmd_verify(const std::string& suite) {
  const auto report = dpbrem::harness::verify(suite);
  std::fputs(dpbrem::harness::format_report(report).c_str(), stdout);
  return report.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Deterministic simulator for differentially-private, "
      "Byzantine-robust federated learning"};
  app.require_subcommand(1);

  std::string run_config;
  auto* run = app.add_subcommand("run", "run one experiment from a config");
  run->add_option("config", run_config, "JSON experiment config")->required();

  std::string sweep_config;
  std::string grid_spec;
  auto* sw = app.add_subcommand("sweep", "run a parameter grid");
  sw->add_option("config", sweep_config, "JSON experiment config")->required();
  sw->add_option("--grid", grid_spec,
                 "JSON object mapping dotted config paths to value arrays, "
                 "inline or a file path")
      ->required();

  std::string acct_config;
  auto* acct =
      app.add_subcommand("accountant", "print per-client privacy reports");
  acct->add_option("config", acct_config, "JSON experiment config")
      ->required();

  std::string suite = "all";
  auto* verify = app.add_subcommand("verify", "run brute-force oracle suites");
  verify->add_option(
      "suite", suite,
      "clipping | sensitivity | gradients | shamir | accountant | all");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(run_config);
    }
    if (sw->parsed()) {
      return cmd_sweep(sweep_config, grid_spec);
    }
    if (acct->parsed()) {
      return cmd_accountant(acct_config);
    }
    if (verify->parsed()) {
      return cmd_verify(suite);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
