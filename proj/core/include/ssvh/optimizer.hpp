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

#ifndef SSVH_OPTIMIZER_HPP_
#define SSVH_OPTIMIZER_HPP_

#include <vector>

#include "ssvh/layers.hpp"

namespace ssvh {

enum class OptimizerKind { kAdam, kSgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Descends every parameter along its accumulated gradient. Ascent on the
// sampler comes from the reversed gradient, not from the optimizer.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(OptimizerConfig config, const nn::ParamList& params);

  void step(const nn::ParamList& params);
  std::uint64_t steps() const { return t_; }
  const OptimizerConfig& config() const { return config_; }

  // Moment buffers, exposed for checkpointing.
  std::vector<Mat>& first_moments() { return m_; }
  std::vector<Mat>& second_moments() { return v_; }
  void set_steps(std::uint64_t t) { t_ = t; }

 private:
  OptimizerConfig config_;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
  std::uint64_t t_ = 0;
};

}  // namespace ssvh

#endif  // SSVH_OPTIMIZER_HPP_
