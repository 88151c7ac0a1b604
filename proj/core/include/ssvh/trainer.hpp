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

// Joint training of Grade-Net and the hashing network.

#ifndef SSVH_TRAINER_HPP_
#define SSVH_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssvh/config.hpp"
#include "ssvh/feature_store.hpp"
#include "ssvh/hashnet.hpp"
#include "ssvh/optimizer.hpp"
#include "ssvh/sampler.hpp"
#include "ssvh/semantic_centers.hpp"

namespace ssvh {

struct Model {
  GradeNet sampler;
  HashNet net;

  nn::ParamList sampler_params();
  nn::ParamList hashnet_params();
  // Sampler parameters first, then the hashing network.
  nn::ParamList all_params();
};

// Initialises both networks from `seed` alone.
Model make_model(const HashNetConfig& config, std::uint64_t seed);

struct TrainState {
  ExperimentConfig config;
  Model model;
  Optimizer optimizer;
  std::optional<ClusterModel> clusters;
  std::uint32_t epoch = 0;  // completed epochs
};

TrainState make_initial_state(const ExperimentConfig& config);

struct StepReport {
  double l_fr = 0.0;
  double l_vc = 0.0;
  double l_p2set = 0.0;
  double total = 0.0;
  // beta * ||dL_P2Set / d codes||_F; exactly 0 when the term is inactive.
  double p2set_grad_norm = 0.0;
  // Fraction of videos whose two views dropped different frame sets.
  double view_disagreement = 0.0;
  // Drop sets of view 0, one per video in batch order.
  std::vector<std::vector<Index>> drops;
};

struct StepOptions {
  bool apply_update = true;
};

// One forward/backward pass over `ids`. Gumbel noise is a pure function of
// (train.seed, epoch, video, view), so a step is reproducible from the state.
StepReport train_step(TrainState& state, const VideoFeatureSet& set,
                      std::span<const std::uint32_t> ids, Phase phase,
                      const StepOptions& options = {});

struct EpochRecord {
  std::uint32_t epoch = 0;  // 1-based
  Phase phase = Phase::kWarmup;
  double l_fr = 0.0;
  double l_vc = 0.0;
  double l_p2set = 0.0;
  double total = 0.0;
  double p2set_grad_norm = 0.0;  // mean over steps
  double view_disagreement = 0.0;
  double wall_ms = 0.0;
  std::uint32_t steps = 0;

  std::string to_json() const;
};

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  // Called with the initial state, every train.checkpoint_cadence epochs and
  // after the last epoch.
  std::function<void(const TrainState&)> on_checkpoint;
  // Called after each step with the batch ids and its report.
  std::function<void(const StepReport&, std::span<const std::uint32_t>)> on_step;
};

// Splits a shuffled id list into batches; a trailing batch of one video is
// merged into its predecessor.
std::vector<std::vector<std::uint32_t>> make_batches(std::span<const std::uint32_t> ids,
                                                     std::uint32_t batch_size,
                                                     std::uint64_t seed, std::uint32_t epoch);

struct TrainResult {
  TrainState state;
  std::vector<EpochRecord> log;
};

TrainResult run_training(const VideoFeatureSet& set, std::span<const std::uint32_t> train_ids,
                         const ExperimentConfig& config, const TrainHooks& hooks = {});

// Continues `state` until train.epochs is reached.
void continue_training(TrainState& state, const VideoFeatureSet& set,
                       std::span<const std::uint32_t> train_ids, const TrainHooks& hooks,
                       std::vector<EpochRecord>* log);

}  // namespace ssvh

#endif  // SSVH_TRAINER_HPP_
