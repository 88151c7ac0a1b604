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

#ifndef SSVH_LAYERS_HPP_
#define SSVH_LAYERS_HPP_

#include <string>
#include <vector>

#include "ssvh/autodiff.hpp"
#include "ssvh/rng.hpp"

namespace ssvh::nn {

using ParamList = std::vector<ad::Param*>;

// Normal(0, std) initialized matrix.
Mat normal_init(Index rows, Index cols, double std, Rng& rng);

struct Linear {
  Linear() = default;
  // Xavier-normal weight (in x out), zero bias.
  Linear(const std::string& name, Index in, Index out, Rng& rng);

  ad::Var operator()(ad::Tape& tape, const ad::Var& x);
  void collect(ParamList& out);
  Index in_features() const { return weight.value.rows(); }
  Index out_features() const { return weight.value.cols(); }

  ad::Param weight;
  ad::Param bias;
};

struct LayerNorm {
  static constexpr double kEps = 1e-5;

  LayerNorm() = default;
  LayerNorm(const std::string& name, Index width);

  ad::Var operator()(ad::Tape& tape, const ad::Var& x);
  void collect(ParamList& out);

  ad::Param gain;
  ad::Param shift;
};

struct MultiHeadAttention {
  MultiHeadAttention() = default;
  MultiHeadAttention(const std::string& name, Index width, int heads, Rng& rng);

  // Self-attention within each block of `block` rows.
  ad::Var operator()(ad::Tape& tape, const ad::Var& x, Index block);
  void collect(ParamList& out);

  int heads = 1;
  Linear query, key, value, output;
};

struct Mlp {
  Mlp() = default;
  Mlp(const std::string& name, Index width, Index hidden, Rng& rng);

  ad::Var operator()(ad::Tape& tape, const ad::Var& x);
  void collect(ParamList& out);

  Linear fc1, fc2;
};

// Pre-norm transformer block: x + Attn(LN(x)), then x + MLP(LN(x)).
struct TransformerBlock {
  TransformerBlock() = default;
  TransformerBlock(const std::string& name, Index width, int heads,
                   int mlp_ratio, Rng& rng);

  ad::Var operator()(ad::Tape& tape, const ad::Var& x, Index block);
  void collect(ParamList& out);

  LayerNorm norm1;
  MultiHeadAttention attn;
  LayerNorm norm2;
  Mlp mlp;
};

}  // namespace ssvh::nn

#endif  // SSVH_LAYERS_HPP_
