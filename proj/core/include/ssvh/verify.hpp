// Copyright 2026 The ssvh Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Self-checks run by `ssvh verify` and the acceptance suite. Each suite
// compares an implementation against an independent route (exhaustive
// search, finite differences, naive enumeration).

#ifndef SSVH_VERIFY_HPP_
#define SSVH_VERIFY_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace ssvh::verify {

struct SuiteResult {
  std::string suite;
  std::uint32_t instances = 0;
  std::uint32_t passed = 0;
  double worst = 0.0;      // largest error seen (suite-specific units)
  double tolerance = 0.0;
  std::vector<std::string> failures;  // first few failing instances

  bool ok() const { return instances > 0 && passed == instances; }
  std::string to_json() const;
};

// Component voting vs. exhaustive search over {-1,+1}^K, K <= max_bits,
// set sizes 1..max_set.
SuiteResult voting(std::uint32_t instances, std::uint64_t seed, std::uint32_t max_bits = 12,
                   std::uint32_t max_set = 25);

// One SGD step with and without gradient reversal from the same state.
inline constexpr double kGrlTolerance = 1e-9;
SuiteResult grl(std::uint32_t instances, std::uint64_t seed);

// Analytic gradients vs. central finite differences for L_FR, L_VC,
// L_P2Set and the straight-through soft paths (selection and sign).
inline constexpr double kGradientTolerance = 1e-4;
std::vector<SuiteResult> gradients(std::uint32_t instances, std::uint64_t seed);

// Retrieval metrics vs. naive enumeration.
inline constexpr double kMetricTolerance = 1e-12;
SuiteResult metrics(std::uint32_t instances, std::uint64_t seed, std::uint32_t max_gallery = 200);

// Names accepted by run(): voting, grl, ste, metrics, all.
std::vector<SuiteResult> run(const std::string& suite, std::uint32_t instances,
                             std::uint64_t seed);

}  // namespace ssvh::verify

#endif  // SSVH_VERIFY_HPP_
