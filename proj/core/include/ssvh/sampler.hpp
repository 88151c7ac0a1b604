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

// Adversarial frame sampler: per-frame scoring network, Gumbel-perturbed
// softmax and hard TopK drop selection with a straight-through gradient.

#ifndef SSVH_SAMPLER_HPP_
#define SSVH_SAMPLER_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "ssvh/autodiff.hpp"
#include "ssvh/layers.hpp"
#include "ssvh/rng.hpp"

namespace ssvh {

struct SamplerConfig {
  // M; frames removed from the encoder input and reconstructed.
  std::uint32_t drop_count = 8;
  // Gumbel noise level.
  double delta = 0.5;
  double epsilon = 1e-10;

  void validate(std::uint32_t frames_per_video) const;
};

// score(v) = sigmoid(W4 (LN(W2 GELU(W1 v)) + v)), applied per frame.
class GradeNet {
 public:
  GradeNet() = default;
  GradeNet(Index feature_dim, Rng& rng);

  // frames: n x D -> n x 1 scores in (0, 1).
  ad::Var score(ad::Tape& tape, const ad::Var& frames);
  Mat score(const Mat& frames);

  void collect(nn::ParamList& out);
  Index feature_dim() const { return w1.in_features(); }

  nn::Linear w1;
  nn::Linear w2;
  nn::LayerNorm norm;
  nn::Linear w4;
};

struct DropPlan {
  std::vector<double> scores;
  std::vector<double> probs;
  // Dropped frames, ordered by descending probability (ties: lower index).
  std::vector<Index> drop;
  // Remaining frames in temporal order.
  std::vector<Index> keep;
};

// G = -log(-log(U) + eps) + eps.
double gumbel_from_uniform(double u, double epsilon);
std::vector<double> gumbel_noise(std::size_t n, double epsilon, Rng& rng);

// Softmax over frames of (S + delta * G) for explicit noise G.
std::vector<double> perturbed_probs(std::span<const double> scores,
                                    std::span<const double> gumbel, double delta);
// Draws G from rng.
std::vector<double> gumbel_perturb(std::span<const double> scores,
                                   const SamplerConfig& config, Rng& rng);

// Indices of the `drop_count` largest probabilities.
DropPlan select_drop_set(std::span<const double> probs, std::uint32_t drop_count);

// Uniform-random drop set (the random-sampler ablation).
DropPlan random_drop_plan(std::uint32_t frames, std::uint32_t drop_count, Rng& rng);

// n x 1 column with ones at dropped frames.
Mat multi_hot(const DropPlan& plan, std::uint32_t frames);

// Differentiable selection for a stack of videos. scores is (B*M0) x 1;
// gumbel holds the matching noise. The returned `selection` carries the
// hard multi-hot forward and the softmax gradient backward.
struct BatchSelection {
  std::vector<DropPlan> plans;
  ad::Var probs;
  ad::Var selection;
};
BatchSelection select_batch(const ad::Var& scores, const Mat& gumbel,
                            std::uint32_t frames, const SamplerConfig& config);

}  // namespace ssvh

#endif  // SSVH_SAMPLER_HPP_
