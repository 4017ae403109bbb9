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

#include <functional>
#include <string>
#include <vector>

#include "dpbrem/core/vector_ops.hpp"

namespace dpbrem::harness {

struct VerifyCheck {
  std::string name;
  bool passed = false;
  double observed = 0.0;  // worst observed statistic
  double bound = 0.0;     // allowed bound
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool all_passed() const {
    for (const auto& c : checks) {
      if (!c.passed) {
        return false;
      }
    }
    return true;
  }
};

using ClipFn = std::function<core::ParamVector(const core::ParamVector&, double)>;

// Brute-force oracle suites. Suites: "clipping", "sensitivity",
// "gradients", "shamir", "accountant", or "all". The clip function is
// injectable so a negative control can demonstrate the suite catches a
// broken implementation.
VerifyReport verify(const std::string& suite);
VerifyReport verify(const std::string& suite, const ClipFn& clip_fn);

std::string format_report(const VerifyReport& report);

}  // namespace dpbrem::harness
