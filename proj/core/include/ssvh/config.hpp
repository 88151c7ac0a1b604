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

// Experiment configuration shared by the trainer, checkpoints and the CLI.
// The on-disk form is flat `key=value` text with keys grouped by owner:
// model.*, sampler.*, loss.*, centers.*, train.*.

#ifndef SSVH_CONFIG_HPP_
#define SSVH_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ssvh/hashnet.hpp"
#include "ssvh/objectives.hpp"
#include "ssvh/optimizer.hpp"
#include "ssvh/sampler.hpp"
#include "ssvh/semantic_centers.hpp"

namespace ssvh {

struct TrainConfig {
  std::uint32_t epochs = 200;
  std::uint32_t warmup_epochs = 20;  // may exceed epochs: then no full phase
  std::uint32_t batch_size = 64;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  // Write a checkpoint every this many epochs; 0 keeps only initial + final.
  std::uint32_t checkpoint_cadence = 0;

  // Ablations.
  bool disable_grl = false;     // sampler cooperates instead of competing
  bool random_sampler = false;  // uniform drop sets, Grade-Net untouched
  bool disable_fr = false;
  bool disable_vc = false;
  bool disable_p2set = false;

  void validate() const;
};

struct ExperimentConfig {
  HashNetConfig model;
  SamplerConfig sampler;
  LossConfig loss;
  ClusterConfig centers;
  TrainConfig train;

  // Sets one key from text. Throws ConfigError for unknown keys or values
  // that do not parse.
  void set(const std::string& key, const std::string& value);
  bool is_explicit(const std::string& key) const { return explicit_keys_.contains(key); }

  // Every key with its current value, in a fixed order.
  std::vector<std::pair<std::string, std::string>> to_pairs() const;
  std::string to_text() const;

  // Fills dataset-dependent defaults (feature width, max frames, drop count
  // = ceil(M0 / 2)) unless they were set explicitly, then validates.
  void resolve_for_dataset(std::uint32_t frames_per_video, std::uint32_t feature_dim);
  void validate(std::size_t train_size) const;

  static const std::vector<std::string>& known_keys();

 private:
  std::set<std::string> explicit_keys_;
};

// Parses `key=value` lines; blank lines and lines starting with '#' are
// ignored. Later lines override earlier ones.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace ssvh

#endif  // SSVH_CONFIG_HPP_
