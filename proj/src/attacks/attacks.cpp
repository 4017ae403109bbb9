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

#include "dpbrem/attacks/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dpbrem/accountant/gdp.hpp"

namespace dpbrem::attacks {

namespace {

void require_corrupted(const ByzKnowledge& knowledge) {
  if (knowledge.corrupted_ids.empty()) {
    throw std::invalid_argument("attack: no corrupted clients");
  }
  if (knowledge.honest_submissions.size() != knowledge.corrupted_ids.size()) {
    throw std::invalid_argument("attack: submissions misaligned");
  }
}

}  // namespace

std::pair<core::ParamVector, core::ParamVector> estimate_benign(
    const ByzKnowledge& knowledge) {
  require_corrupted(knowledge);
  const auto& subs = knowledge.honest_submissions;
  const std::size_t d = subs.front().size();
  const double inv = 1.0 / static_cast<double>(subs.size());

  core::ParamVector mean(d, 0.0);
  for (const auto& s : subs) {
    core::add_in_place(mean, s);
  }
  core::scale_in_place(mean, inv);

  core::ParamVector stddev(d, 0.0);
  for (const auto& s : subs) {
    for (std::size_t k = 0; k < d; ++k) {
      const double delta = s[k] - mean[k];
      stddev[k] += delta * delta;
    }
  }
  for (double& v : stddev) {
    v = std::sqrt(v * inv);  // population standard deviation
  }
  return {std::move(mean), std::move(stddev)};
}

core::ParamVector alie_craft(const ByzKnowledge& knowledge,
                             double z_max_override) {
  require_corrupted(knowledge);
  auto [mean, stddev] = estimate_benign(knowledge);

  double z_max = z_max_override;
  if (z_max < 0.0) {
    const double n = static_cast<double>(knowledge.n_clients);
    const double n_byz = static_cast<double>(knowledge.corrupted_ids.size());
    const double benign = n - n_byz;
    const double supporters = std::floor(n / 2.0 + 1.0) - n_byz;
    double quantile;
    if (supporters <= 0.0) {
      quantile = 1.0 - 1.0 / benign;
    } else {
      quantile = (benign - supporters) / benign;
    }
    quantile = std::clamp(quantile, 1e-12, 1.0 - 1e-12);
    z_max = accountant::std_normal_quantile(quantile);
  }
  core::axpy_in_place(mean, z_max, stddev);
  return mean;
}

core::ParamVector ipm_craft(const ByzKnowledge& knowledge, double scale) {
  require_corrupted(knowledge);
  if (!(scale > 0.0)) {
    throw std::invalid_argument("ipm_craft: scale must be positive");
  }
  auto [mean, stddev] = estimate_benign(knowledge);
  (void)stddev;
  core::scale_in_place(mean, -scale);
  return mean;
}

core::ParamVector mtb_craft(const ByzKnowledge& knowledge, double gamma_max,
                            MtbPerturbation perturbation) {
  require_corrupted(knowledge);
  auto [mean, stddev] = estimate_benign(knowledge);
  const auto& subs = knowledge.honest_submissions;
  const std::size_t d = mean.size();

  core::ParamVector direction(d, 0.0);
  switch (perturbation) {
    case MtbPerturbation::inverse_unit: {
      const double norm = core::l2_norm(mean);
      if (norm > 0.0) {
        for (std::size_t k = 0; k < d; ++k) {
          direction[k] = -mean[k] / norm;
        }
      }
      break;
    }
    case MtbPerturbation::inverse_std: {
      const double norm = core::l2_norm(stddev);
      if (norm > 0.0) {
        for (std::size_t k = 0; k < d; ++k) {
          direction[k] = -stddev[k] / norm;
        }
      }
      break;
    }
    case MtbPerturbation::inverse_sign: {
      for (std::size_t k = 0; k < d; ++k) {
        direction[k] = mean[k] > 0.0 ? -1.0 : (mean[k] < 0.0 ? 1.0 : 0.0);
      }
      break;
    }
  }

  double diameter = 0.0;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    for (std::size_t j = i + 1; j < subs.size(); ++j) {
      diameter = std::max(diameter, core::l2_norm(core::sub(subs[i], subs[j])));
    }
  }
  const auto feasible = [&](double gamma) {
    core::ParamVector candidate = mean;
    core::axpy_in_place(candidate, gamma, direction);
    for (const auto& s : subs) {
      if (core::l2_norm(core::sub(candidate, s)) > diameter) {
        return false;
      }
    }
    return true;
  };

  // min-max criterion: largest feasible gamma by 20-step bisection.
  double gamma = 0.0;
  if (diameter > 0.0 && core::l2_norm(direction) > 0.0) {
    double lo = 0.0;
    double hi = gamma_max;
    if (feasible(hi)) {
      gamma = hi;
    } else {
      for (int iter = 0; iter < 20; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid)) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      gamma = lo;
    }
  }
  core::axpy_in_place(mean, gamma, direction);
  return mean;
}

namespace {

class StatelessAdversary final : public Adversary {
 public:
  StatelessAdversary(AttackConfig config, std::vector<std::size_t> corrupted)
      : config_(config), corrupted_(std::move(corrupted)) {}

  const std::vector<std::size_t>& corrupted() const override {
    return corrupted_;
  }

  core::ParamVector craft(const ByzKnowledge& knowledge,
                          const protocol::RoundContext& ctx,
                          core::RngStream stream) override {
    (void)ctx;
    (void)stream;
    switch (config_.kind) {
      case AttackKind::alie:
        return alie_craft(knowledge, config_.alie_z_max_override);
      case AttackKind::ipm:
        return ipm_craft(knowledge, config_.ipm_scale);
      case AttackKind::mtb:
        return mtb_craft(knowledge, config_.gamma_max, config_.perturbation);
      default:
        throw std::logic_error("adversary: unsupported kind");
    }
  }

 private:
  AttackConfig config_;
  std::vector<std::size_t> corrupted_;
};

class LabelFlipAdversary final : public Adversary {
 public:
  LabelFlipAdversary(AttackConfig config, std::vector<std::size_t> corrupted,
                     const std::vector<protocol::ClientState>& clients,
                     const protocol::AggregationRule& rule,
                     const learner::ModelSpec& spec)
      : config_(config),
        corrupted_(std::move(corrupted)),
        rule_(rule),
        spec_(spec) {
    for (const std::size_t id : corrupted_) {
      const auto& source = clients.at(id);
      if (!source.dataset || source.dataset->empty()) {
        throw std::invalid_argument("label-flip: corrupted dataset empty");
      }
      auto flipped = std::make_shared<data::Dataset>(*source.dataset);
      for (auto& rec : flipped->records) {
        rec.label = flipped->num_classes - 1 - rec.label;
      }
      protocol::ClientState shadow = source;
      shadow.dataset = std::move(flipped);
      shadow.momentum.reset();
      shadow.raw_momentum.reset();
      shadows_.push_back(std::move(shadow));
    }
  }

  const std::vector<std::size_t>& corrupted() const override {
    return corrupted_;
  }

  core::ParamVector craft(const ByzKnowledge& knowledge,
                          const protocol::RoundContext& ctx,
                          core::RngStream stream) override {
    require_corrupted(knowledge);
    const std::size_t d = knowledge.honest_submissions.front().size();
    const double inv = 1.0 / static_cast<double>(shadows_.size());

    core::ParamVector bad(d, 0.0);
    for (std::size_t i = 0; i < shadows_.size(); ++i) {
      const core::ParamVector sub = rule_.client_submission(
          shadows_[i], knowledge.theta_prev, spec_, ctx,
          stream.derive("lf").derive(i), nullptr);
      core::add_in_place(bad, sub);
    }
    core::scale_in_place(bad, inv);

    core::ParamVector benign(d, 0.0);
    for (const auto& s : knowledge.honest_submissions) {
      core::add_in_place(benign, s);
    }
    core::scale_in_place(benign, inv);

    core::sub_in_place(bad, benign);
    core::scale_in_place(bad, config_.lf_scale);
    return bad;
  }

 private:
  AttackConfig config_;
  std::vector<std::size_t> corrupted_;
  const protocol::AggregationRule& rule_;
  learner::ModelSpec spec_;
  std::vector<protocol::ClientState> shadows_;
};

}  // namespace

std::unique_ptr<Adversary> make_adversary(
    const AttackConfig& config, std::size_t n_clients,
    const std::vector<protocol::ClientState>& clients,
    const protocol::AggregationRule& rule, const learner::ModelSpec& spec) {
  if (config.kind == AttackKind::none || config.byz_fraction <= 0.0) {
    return nullptr;
  }
  if (!(config.byz_fraction < 0.5)) {
    throw std::invalid_argument("attack: byz_fraction must be < 0.5");
  }
  const auto n_byz = static_cast<std::size_t>(
      std::llround(config.byz_fraction * static_cast<double>(n_clients)));
  if (n_byz == 0) {
    return nullptr;
  }
  // The Byzantine set is fixed at experiment start: the first |B| ids.
  std::vector<std::size_t> corrupted(n_byz);
  for (std::size_t i = 0; i < n_byz; ++i) {
    corrupted[i] = i;
  }
  if (config.kind == AttackKind::lf) {
    return std::make_unique<LabelFlipAdversary>(config, std::move(corrupted),
                                                clients, rule, spec);
  }
  return std::make_unique<StatelessAdversary>(config, std::move(corrupted));
}

AttackKind attack_kind_from_name(const std::string& name) {
  if (name == "none") return AttackKind::none;
  if (name == "alie") return AttackKind::alie;
  if (name == "ipm") return AttackKind::ipm;
  if (name == "lf") return AttackKind::lf;
  if (name == "mtb") return AttackKind::mtb;
  throw std::invalid_argument("unknown attack kind: " + name);
}

}  // namespace dpbrem::attacks
