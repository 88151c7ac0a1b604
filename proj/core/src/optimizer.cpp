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

#include "ssvh/optimizer.hpp"

#include <cmath>

namespace ssvh {

Optimizer::Optimizer(OptimizerConfig config, const nn::ParamList& params) : config_(config) {
  if (!(config_.learning_rate >= 0.0)) throw ConfigError("train.learning_rate must be >= 0");
  if (config_.kind == OptimizerKind::kAdam) {
    for (const ad::Param* p : params) {
      m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    }
  }
}

void Optimizer::step(const nn::ParamList& params) {
  ++t_;
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::kSgd) {
    for (ad::Param* p : params) p->value -= lr * p->grad;
    return;
  }
  if (params.size() != m_.size()) throw ContractViolation("Optimizer: parameter list changed");
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Param& p = *params[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * p.grad;
    v_[i] = b2 * v_[i] + (1.0 - b2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.eps);
  }
}

}  // namespace ssvh
