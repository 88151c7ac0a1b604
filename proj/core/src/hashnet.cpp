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

#include "ssvh/hashnet.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace ssvh {

void HashNetConfig::validate() const {
  if (code_bits == 0) throw ConfigError("model.code_bits must be >= 1");
  if (width == 0 || heads == 0 || width % heads != 0) {
    throw ConfigError("model.width must be a positive multiple of model.heads");
  }
  if (mlp_ratio == 0) throw ConfigError("model.mlp_ratio must be >= 1");
  if (max_frames == 0 || feature_dim == 0) {
    throw ConfigError("model.max_frames and feature dimension must be positive");
  }
}

HashOutput hash(const Mat& z) {
  if (z.rows() == 0) throw ContractViolation("hash: empty frame set");
  HashOutput out;
  out.soft.per_frame = z.array().tanh().matrix();
  out.soft.pooled = out.soft.per_frame.colwise().mean();
  out.code.bits = out.soft.pooled.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
  return out;
}

HashVars hash(const ad::Var& z, Index block) {
  HashVars out;
  out.per_frame = ad::tanh(z);
  out.pooled = ad::block_mean(out.per_frame, block);
  out.codes = ad::sign_ste(out.pooled);
  return out;
}

HashNet::HashNet(const HashNetConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const Index d = config_.width;
  input_proj = nn::Linear("hashnet.input_proj", config_.feature_dim, d, rng);
  encoder_pos = ad::Param("hashnet.encoder_pos", nn::normal_init(config_.max_frames, d, 0.02, rng));
  for (std::uint32_t i = 0; i < config_.encoder_layers; ++i) {
    encoder.emplace_back("hashnet.encoder." + std::to_string(i), d,
                         static_cast<int>(config_.heads), static_cast<int>(config_.mlp_ratio), rng);
  }
  hash_proj = nn::Linear("hashnet.hash_proj", d, config_.code_bits, rng);
  mask_token = ad::Param("hashnet.mask_token", nn::normal_init(1, d, 0.02, rng));
  decoder_pos = ad::Param("hashnet.decoder_pos", nn::normal_init(config_.max_frames, d, 0.02, rng));
  for (std::uint32_t i = 0; i < config_.decoder_layers; ++i) {
    decoder.emplace_back("hashnet.decoder." + std::to_string(i), d,
                         static_cast<int>(config_.heads), static_cast<int>(config_.mlp_ratio), rng);
  }
  decoder_norm = nn::LayerNorm("hashnet.decoder_norm", d);
  head = nn::Linear("hashnet.head", d, config_.feature_dim, rng);
}

HashNet::Encoded HashNet::encode(ad::Tape& tape, const ad::Var& frames,
                                 const std::vector<Index>& positions, Index block) {
  if (frames.cols() != static_cast<Index>(config_.feature_dim)) {
    throw ShapeError("HashNet::encode: feature width differs from the model");
  }
  if (static_cast<Index>(positions.size()) != frames.rows()) {
    throw ShapeError("HashNet::encode: one position per frame row required");
  }
  if (block > static_cast<Index>(config_.max_frames)) {
    throw ShapeError("HashNet::encode: more frames than model.max_frames");
  }
  for (Index p : positions) {
    if (p < 0 || p >= static_cast<Index>(config_.max_frames)) {
      throw ShapeError("HashNet::encode: frame position beyond model.max_frames");
    }
  }
  ad::Var x = ad::add(input_proj(tape, frames),
                      ad::gather_rows(tape.param(encoder_pos), positions));
  for (auto& layer : encoder) x = layer(tape, x, block);
  return {x, hash_proj(tape, x)};
}

ad::Var HashNet::reconstruct(ad::Tape& tape, const ad::Var& memory,
                             const std::vector<Index>& keep_positions,
                             const std::vector<Index>& drop_positions, Index drop_block) {
  if (drop_block <= 0 || drop_positions.size() % static_cast<std::size_t>(drop_block) != 0) {
    throw ShapeError("HashNet::reconstruct: drop positions are not whole blocks");
  }
  const Index videos = static_cast<Index>(drop_positions.size()) / drop_block;
  if (videos == 0 || keep_positions.size() % static_cast<std::size_t>(videos) != 0 ||
      static_cast<Index>(keep_positions.size()) != memory.rows()) {
    throw ShapeError("HashNet::reconstruct: keep positions do not match memory rows");
  }
  const Index keep_block = static_cast<Index>(keep_positions.size()) / videos;
  const Index full = keep_block + drop_block;
  if (full > static_cast<Index>(config_.max_frames)) {
    throw ShapeError("HashNet::reconstruct: sequence longer than model.max_frames");
  }
  std::vector<Index> keep_rows(keep_positions.size());
  std::vector<Index> drop_rows(drop_positions.size());
  for (Index b = 0; b < videos; ++b) {
    std::vector<char> seen(static_cast<std::size_t>(full), 0);
    for (Index j = 0; j < keep_block; ++j) {
      const Index p = keep_positions[b * keep_block + j];
      if (p < 0 || p >= full || seen[p]) {
        throw ContractViolation("HashNet::reconstruct: keep/drop positions overlap or exceed the sequence");
      }
      seen[p] = 1;
      keep_rows[b * keep_block + j] = b * full + p;
    }
    for (Index j = 0; j < drop_block; ++j) {
      const Index p = drop_positions[b * drop_block + j];
      if (p < 0 || p >= full || seen[p]) {
        throw ContractViolation("HashNet::reconstruct: keep/drop positions overlap or exceed the sequence");
      }
      seen[p] = 1;
      drop_rows[b * drop_block + j] = b * full + p;
    }
  }
  ad::Var masks = ad::tile_rows(tape.param(mask_token), static_cast<Index>(drop_positions.size()));
  ad::Var x = ad::merge_rows(memory, keep_rows, masks, drop_rows);
  std::vector<Index> pos(static_cast<std::size_t>(videos * full));
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<Index>(i) % full;
  x = ad::add(x, ad::gather_rows(tape.param(decoder_pos), pos));
  for (auto& layer : decoder) x = layer(tape, x, full);
  x = head(tape, decoder_norm(tape, x));
  return ad::gather_rows(x, drop_rows);
}

namespace {

// Rows of `frames` re-ordered so that `indices` ascend.
std::pair<Mat, std::vector<Index>> sorted_rows(const Mat& frames, std::span<const Index> indices) {
  if (static_cast<Index>(indices.size()) != frames.rows()) {
    throw ShapeError("HashNet: one index per kept frame required");
  }
  std::vector<std::size_t> order(indices.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return indices[a] < indices[b]; });
  Mat out(frames.rows(), frames.cols());
  std::vector<Index> pos(indices.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.row(static_cast<Index>(i)) = frames.row(static_cast<Index>(order[i]));
    pos[i] = indices[order[i]];
  }
  return {std::move(out), std::move(pos)};
}

}  // namespace

Mat HashNet::encode(const Mat& kept_frames, std::span<const Index> keep_indices) {
  auto [frames, pos] = sorted_rows(kept_frames, keep_indices);
  ad::Tape tape;
  const Index t = frames.rows();
  return encode(tape, tape.constant(std::move(frames)), pos, t).z.value();
}

Mat HashNet::reconstruct(const Mat& kept_frames, std::span<const Index> keep_indices,
                         std::span<const Index> drop_indices) {
  auto [frames, pos] = sorted_rows(kept_frames, keep_indices);
  ad::Tape tape;
  const Index t = frames.rows();
  Encoded enc = encode(tape, tape.constant(std::move(frames)), pos, t);
  std::vector<Index> drop(drop_indices.begin(), drop_indices.end());
  return reconstruct(tape, enc.memory, pos, drop, static_cast<Index>(drop.size())).value();
}

void HashNet::collect(nn::ParamList& out) {
  input_proj.collect(out);
  out.push_back(&encoder_pos);
  for (auto& layer : encoder) layer.collect(out);
  hash_proj.collect(out);
  out.push_back(&mask_token);
  out.push_back(&decoder_pos);
  for (auto& layer : decoder) layer.collect(out);
  decoder_norm.collect(out);
  head.collect(out);
}

}  // namespace ssvh
