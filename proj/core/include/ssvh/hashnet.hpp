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

// Transformer hashing network: encoder over kept frames, tanh / mean-pool /
// sign hash layer, and a decoder that reconstructs the dropped frames.

#ifndef SSVH_HASHNET_HPP_
#define SSVH_HASHNET_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "ssvh/autodiff.hpp"
#include "ssvh/layers.hpp"
#include "ssvh/rng.hpp"

namespace ssvh {

struct HashNetConfig {
  std::uint32_t code_bits = 16;    // K
  std::uint32_t width = 32;        // d_model
  std::uint32_t encoder_layers = 2;
  std::uint32_t decoder_layers = 1;
  std::uint32_t heads = 4;
  std::uint32_t mlp_ratio = 4;
  std::uint32_t max_frames = 16;   // M0
  std::uint32_t feature_dim = 32;  // D

  void validate() const;
  friend bool operator==(const HashNetConfig&, const HashNetConfig&) = default;
};

// Continuous surrogate of a hash code: per-frame tanh codes and their mean.
struct SoftHash {
  Mat per_frame;  // T x K, entries in (-1, 1)
  Mat pooled;     // 1 x K
};

// K entries in {-1, +1}, stored as a 1 x K row.
struct HashCode {
  Mat bits;
};

struct HashOutput {
  SoftHash soft;
  HashCode code;
};

// H = tanh(Z), pooled = mean over rows, bits = sign(pooled), sign(0) = +1.
HashOutput hash(const Mat& z);

// Tape version over B stacked sequences of `block` rows each. `codes` is the
// sign with a straight-through gradient, B x K.
struct HashVars {
  ad::Var per_frame;
  ad::Var pooled;
  ad::Var codes;
};
HashVars hash(const ad::Var& z, Index block);

class HashNet {
 public:
  HashNet() = default;
  HashNet(const HashNetConfig& config, Rng& rng);

  const HashNetConfig& config() const { return config_; }

  struct Encoded {
    ad::Var memory;  // (B*T) x d_model, input of the decoder
    ad::Var z;       // (B*T) x K, input of the hash layer
  };
  // frames: (B*T) x D with `positions` giving each row's original frame
  // index; sequences are contiguous blocks of `block` rows.
  Encoded encode(ad::Tape& tape, const ad::Var& frames,
                 const std::vector<Index>& positions, Index block);

  // Predicts the dropped frames of B sequences. keep_positions has B*T_keep
  // entries (matching memory rows); drop_positions has B*M. Output is
  // (B*M) x D in drop_positions order.
  ad::Var reconstruct(ad::Tape& tape, const ad::Var& memory,
                      const std::vector<Index>& keep_positions,
                      const std::vector<Index>& drop_positions, Index drop_block);

  // Single-video conveniences. Rows are re-ordered by ascending index first.
  Mat encode(const Mat& kept_frames, std::span<const Index> keep_indices);
  Mat reconstruct(const Mat& kept_frames, std::span<const Index> keep_indices,
                  std::span<const Index> drop_indices);

  void collect(nn::ParamList& out);

  nn::Linear input_proj;
  ad::Param encoder_pos;
  std::vector<nn::TransformerBlock> encoder;
  nn::Linear hash_proj;
  ad::Param mask_token;
  ad::Param decoder_pos;
  std::vector<nn::TransformerBlock> decoder;
  nn::LayerNorm decoder_norm;
  nn::Linear head;

 private:
  HashNetConfig config_;
};

}  // namespace ssvh

#endif  // SSVH_HASHNET_HPP_
