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

#include "ssvh/layers.hpp"

#include <cmath>

namespace ssvh::nn {

Mat normal_init(Index rows, Index cols, double std, Rng& rng) {
  std::normal_distribution<double> dist(0.0, std);
  Mat m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Linear::Linear(const std::string& name, Index in, Index out, Rng& rng)
    : weight(name + ".weight",
             normal_init(in, out, std::sqrt(2.0 / static_cast<double>(in + out)), rng)),
      bias(name + ".bias", Mat::Zero(1, out)) {}

ad::Var Linear::operator()(ad::Tape& tape, const ad::Var& x) {
  return ad::linear(x, tape.param(weight), tape.param(bias));
}

void Linear::collect(ParamList& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

LayerNorm::LayerNorm(const std::string& name, Index width)
    : gain(name + ".gain", Mat::Ones(1, width)),
      shift(name + ".shift", Mat::Zero(1, width)) {}

ad::Var LayerNorm::operator()(ad::Tape& tape, const ad::Var& x) {
  return ad::layer_norm(x, tape.param(gain), tape.param(shift), kEps);
}

void LayerNorm::collect(ParamList& out) {
  out.push_back(&gain);
  out.push_back(&shift);
}

MultiHeadAttention::MultiHeadAttention(const std::string& name, Index width,
                                       int heads_, Rng& rng)
    : heads(heads_),
      query(name + ".query", width, width, rng),
      key(name + ".key", width, width, rng),
      value(name + ".value", width, width, rng),
      output(name + ".output", width, width, rng) {}

ad::Var MultiHeadAttention::operator()(ad::Tape& tape, const ad::Var& x, Index block) {
  ad::Var q = query(tape, x);
  ad::Var k = key(tape, x);
  ad::Var v = value(tape, x);
  return output(tape, ad::attention(q, k, v, heads, block));
}

void MultiHeadAttention::collect(ParamList& out) {
  query.collect(out);
  key.collect(out);
  value.collect(out);
  output.collect(out);
}

Mlp::Mlp(const std::string& name, Index width, Index hidden, Rng& rng)
    : fc1(name + ".fc1", width, hidden, rng), fc2(name + ".fc2", hidden, width, rng) {}

ad::Var Mlp::operator()(ad::Tape& tape, const ad::Var& x) {
  return fc2(tape, ad::gelu(fc1(tape, x)));
}

void Mlp::collect(ParamList& out) {
  fc1.collect(out);
  fc2.collect(out);
}

TransformerBlock::TransformerBlock(const std::string& name, Index width, int heads,
                                   int mlp_ratio, Rng& rng)
    : norm1(name + ".norm1", width),
      attn(name + ".attn", width, heads, rng),
      norm2(name + ".norm2", width),
      mlp(name + ".mlp", width, width * mlp_ratio, rng) {}

ad::Var TransformerBlock::operator()(ad::Tape& tape, const ad::Var& x, Index block) {
  ad::Var h = ad::add(x, attn(tape, norm1(tape, x), block));
  return ad::add(h, mlp(tape, norm2(tape, h)));
}

void TransformerBlock::collect(ParamList& out) {
  norm1.collect(out);
  attn.collect(out);
  norm2.collect(out);
  mlp.collect(out);
}

}  // namespace ssvh::nn
