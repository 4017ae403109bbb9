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

#include "dpbrem/harness/config.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>

extern char** environ;

namespace dpbrem::harness {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw std::invalid_argument("config: " + path + ": " + message);
}

class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      fail(path_, "expected an object");
    }
  }

  ~Section() = default;

  template <typename T>
  void get(const char* key, T& out) {
    seen_.push_back(key);
    const auto it = j_.find(key);
    if (it == j_.end()) {
      return;
    }
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      fail(path_ + "." + key, e.what());
    }
  }

  json child(const char* key) {
    seen_.push_back(key);
    const auto it = j_.find(key);
    return it == j_.end() ? json::object() : *it;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      bool known = false;
      for (const auto& s : seen_) {
        if (key == s) {
          known = true;
          break;
        }
      }
      if (!known) {
        fail(path_.empty() ? key : path_ + "." + key, "unknown key");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

void validate(const ExperimentConfig& c) {
  const auto require = [](bool ok, const std::string& path,
                          const std::string& message) {
    if (!ok) {
      fail(path, message);
    }
  };
  require(c.dataset.kind == "synthetic" || c.dataset.kind == "idx",
          "dataset.kind", "must be synthetic or idx");
  if (c.dataset.kind == "synthetic") {
    require(c.dataset.num_classes >= 2, "dataset.num_classes", "need >= 2");
    require(c.dataset.class_separation > 0, "dataset.class_separation",
            "must be positive");
    require(c.dataset.label_noise >= 0 && c.dataset.label_noise < 1,
            "dataset.label_noise", "must be in [0,1)");
  } else {
    require(!c.dataset.images.empty(), "dataset.images", "required for idx");
    require(!c.dataset.labels.empty(), "dataset.labels", "required for idx");
  }
  require(c.partition.scheme == "shards" || c.partition.scheme == "dirichlet" ||
              c.partition.scheme == "uniform",
          "partition.scheme", "must be shards, dirichlet or uniform");
  require(c.partition.n_clients >= 1, "partition.n_clients", "need >= 1");
  require(c.partition.alpha > 0, "partition.alpha", "must be positive");
  require(c.partition.shards_per_client >= 1, "partition.shards_per_client",
          "need >= 1");
  require(c.model.kind == "logistic_regression" || c.model.kind == "mlp",
          "model.kind", "must be logistic_regression or mlp");
  require(c.params.rounds >= 1, "params.T", "need >= 1");
  require(c.params.client_rate > 0 && c.params.client_rate <= 1, "params.q",
          "must be in (0,1]");
  require(c.params.record_rate > 0 && c.params.record_rate <= 1, "params.p",
          "must be in (0,1]");
  require(c.params.beta >= 0 && c.params.beta < 1, "params.beta",
          "must be in [0,1)");
  require(c.params.sigma >= 0 || c.params.epsilon_target > 0, "params.sigma",
          "need sigma >= 0 or a positive epsilon_target");
  require(c.params.record_bound0 > 0, "params.R0", "must be positive");
  require(c.params.client_bound0 > 0, "params.C0", "must be positive");
  require(c.params.record_bound_end_factor > 0, "params.R_end_factor",
          "must be positive");
  require(c.params.client_bound_end_factor > 0, "params.C_end_factor",
          "must be positive");
  require(c.params.eta_start > 0 && c.params.eta_end > 0, "params.eta",
          "endpoints must be positive");
  require(c.attack.kind == "none" || c.attack.kind == "alie" ||
              c.attack.kind == "ipm" || c.attack.kind == "lf" ||
              c.attack.kind == "mtb",
          "attack.kind", "unknown attack");
  require(c.attack.byz_fraction >= 0 && c.attack.byz_fraction < 0.5,
          "attack.byz_fraction", "must be in [0, 0.5)");
  require(c.accountant.delta > 0 && c.accountant.delta < 1, "accountant.delta",
          "must be in (0,1)");
  if (c.secure.enabled) {
    require(c.secure.threshold >= 1 && c.secure.threshold <= c.secure.n_parties,
            "secure.t", "need 1 <= t <= n");
    require(c.secure.fractional_bits >= 1 && c.secure.fractional_bits <= 30,
            "secure.fractional_bits", "must be in [1,30]");
    require(c.secure.l_bits >= 1 &&
                c.secure.l_bits <= c.secure.fractional_bits,
            "secure.l_bits", "need 1 <= l <= fractional_bits");
  }
  require(!c.output.empty(), "output", "must be nonempty");
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig c;
  Section root(j, "");
  root.get("seed", c.seed);
  root.get("rule", c.rule);
  root.get("output", c.output);

  {
    Section s(root.child("dataset"), "dataset");
    s.get("kind", c.dataset.kind);
    s.get("n_records", c.dataset.n_records);
    s.get("d_in", c.dataset.d_in);
    s.get("num_classes", c.dataset.num_classes);
    s.get("class_separation", c.dataset.class_separation);
    s.get("label_noise", c.dataset.label_noise);
    s.get("test_records", c.dataset.test_records);
    s.get("images", c.dataset.images);
    s.get("labels", c.dataset.labels);
    s.get("test_images", c.dataset.test_images);
    s.get("test_labels", c.dataset.test_labels);
    s.finish();
  }
  {
    Section s(root.child("partition"), "partition");
    s.get("scheme", c.partition.scheme);
    s.get("n_clients", c.partition.n_clients);
    s.get("shards_per_client", c.partition.shards_per_client);
    s.get("alpha", c.partition.alpha);
    s.finish();
  }
  {
    Section s(root.child("model"), "model");
    s.get("kind", c.model.kind);
    s.get("hidden", c.model.hidden);
    s.finish();
  }
  {
    Section s(root.child("params"), "params");
    s.get("T", c.params.rounds);
    s.get("q", c.params.client_rate);
    s.get("p", c.params.record_rate);
    s.get("beta", c.params.beta);
    s.get("sigma", c.params.sigma);
    s.get("sigma_local", c.params.sigma_local);
    s.get("epsilon_target", c.params.epsilon_target);
    s.get("R0", c.params.record_bound0);
    s.get("R_end_factor", c.params.record_bound_end_factor);
    s.get("C0", c.params.client_bound0);
    s.get("C_end_factor", c.params.client_bound_end_factor);
    s.get("eta_start", c.params.eta_start);
    s.get("eta_end", c.params.eta_end);
    s.get("tau", c.params.tau);
    s.get("range_bound", c.params.range_bound);
    s.finish();
  }
  {
    Section s(root.child("attack"), "attack");
    s.get("kind", c.attack.kind);
    s.get("byz_fraction", c.attack.byz_fraction);
    s.get("ipm_scale", c.attack.ipm_scale);
    s.get("gamma_max", c.attack.gamma_max);
    s.get("perturbation", c.attack.perturbation);
    s.get("lf_scale", c.attack.lf_scale);
    s.get("alie_z_max", c.attack.alie_z_max);
    s.finish();
  }
  {
    Section s(root.child("accountant"), "accountant");
    s.get("delta", c.accountant.delta);
    s.finish();
  }
  {
    Section s(root.child("secure"), "secure");
    s.get("enabled", c.secure.enabled);
    s.get("n", c.secure.n_parties);
    s.get("t", c.secure.threshold);
    s.get("fractional_bits", c.secure.fractional_bits);
    s.get("l_bits", c.secure.l_bits);
    s.get("transcript", c.secure.transcript);
    s.finish();
  }
  {
    Section s(root.child("tracking"), "tracking");
    s.get("aggregation_error", c.tracking.aggregation_error);
    s.finish();
  }
  root.finish();
  validate(c);
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["rule"] = c.rule;
  j["output"] = c.output;
  j["dataset"] = {{"kind", c.dataset.kind},
                  {"n_records", c.dataset.n_records},
                  {"d_in", c.dataset.d_in},
                  {"num_classes", c.dataset.num_classes},
                  {"class_separation", c.dataset.class_separation},
                  {"label_noise", c.dataset.label_noise},
                  {"test_records", c.dataset.test_records}};
  if (c.dataset.kind == "idx") {
    j["dataset"]["images"] = c.dataset.images;
    j["dataset"]["labels"] = c.dataset.labels;
    j["dataset"]["test_images"] = c.dataset.test_images;
    j["dataset"]["test_labels"] = c.dataset.test_labels;
  }
  j["partition"] = {{"scheme", c.partition.scheme},
                    {"n_clients", c.partition.n_clients},
                    {"shards_per_client", c.partition.shards_per_client},
                    {"alpha", c.partition.alpha}};
  j["model"] = {{"kind", c.model.kind}, {"hidden", c.model.hidden}};
  j["params"] = {{"T", c.params.rounds},
                 {"q", c.params.client_rate},
                 {"p", c.params.record_rate},
                 {"beta", c.params.beta},
                 {"sigma", c.params.sigma},
                 {"sigma_local", c.params.sigma_local},
                 {"epsilon_target", c.params.epsilon_target},
                 {"R0", c.params.record_bound0},
                 {"R_end_factor", c.params.record_bound_end_factor},
                 {"C0", c.params.client_bound0},
                 {"C_end_factor", c.params.client_bound_end_factor},
                 {"eta_start", c.params.eta_start},
                 {"eta_end", c.params.eta_end},
                 {"tau", c.params.tau},
                 {"range_bound", c.params.range_bound}};
  j["attack"] = {{"kind", c.attack.kind},
                 {"byz_fraction", c.attack.byz_fraction},
                 {"ipm_scale", c.attack.ipm_scale},
                 {"gamma_max", c.attack.gamma_max},
                 {"perturbation", c.attack.perturbation},
                 {"lf_scale", c.attack.lf_scale},
                 {"alie_z_max", c.attack.alie_z_max}};
  j["accountant"] = {{"delta", c.accountant.delta}};
  j["secure"] = {{"enabled", c.secure.enabled},
                 {"n", c.secure.n_parties},
                 {"t", c.secure.threshold},
                 {"fractional_bits", c.secure.fractional_bits},
                 {"l_bits", c.secure.l_bits},
                 {"transcript", c.secure.transcript}};
  j["tracking"] = {{"aggregation_error", c.tracking.aggregation_error}};
  return j;
}

void set_json_path(nlohmann::json& j, const std::string& dotted_path,
                   const nlohmann::json& value) {
  nlohmann::json* node = &j;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = dotted_path.find('.', start);
    const std::string key = dotted_path.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) {
      throw std::invalid_argument("config: empty path segment in '" +
                                  dotted_path + "'");
    }
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

void apply_env_overrides(nlohmann::json& j) {
  constexpr const char* kPrefix = "DPBREM_";
  for (char** env = environ; env != nullptr && *env != nullptr; ++env) {
    const std::string entry(*env);
    if (entry.rfind(kPrefix, 0) != 0) {
      continue;
    }
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos) {
      continue;
    }
    std::string path = entry.substr(7, eq - 7);
    const std::string raw = entry.substr(eq + 1);
    // "__" separates path segments.
    std::string dotted;
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (path[i] == '_' && i + 1 < path.size() && path[i + 1] == '_') {
        dotted += '.';
        ++i;
      } else {
        dotted += path[i];
      }
    }
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
      value = raw;  // plain string
    }
    set_json_path(j, dotted, value);
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("config: cannot open " + path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config: parse error in " + path + ": " +
                                e.what());
  }
  apply_env_overrides(j);
  return parse_config(j);
}

}  // namespace dpbrem::harness
