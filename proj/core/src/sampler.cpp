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

#include "ssvh/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ssvh {

void SamplerConfig::validate(std::uint32_t frames_per_video) const {
  if (drop_count >= frames_per_video) {
    throw ConfigError("sampler.drop_count must be smaller than the frames per video");
  }
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("sampler.delta must be >= 0");
  if (!(epsilon > 0.0 && epsilon <= 1e-3)) {
    throw ConfigError("sampler.epsilon must lie in (0, 1e-3]");
  }
}

GradeNet::GradeNet(Index feature_dim, Rng& rng)
    : w1("sampler.w1", feature_dim, feature_dim, rng),
      w2("sampler.w2", feature_dim, feature_dim, rng),
      norm("sampler.norm", feature_dim),
      w4("sampler.w4", feature_dim, 1, rng) {}

ad::Var GradeNet::score(ad::Tape& tape, const ad::Var& frames) {
  if (frames.cols() != feature_dim()) throw ShapeError("GradeNet: feature width differs");
  ad::Var h = norm(tape, w2(tape, ad::gelu(w1(tape, frames))));
  return ad::sigmoid(w4(tape, ad::add(h, frames)));
}

Mat GradeNet::score(const Mat& frames) {
  ad::Tape tape;
  return score(tape, tape.constant(frames)).value();
}

void GradeNet::collect(nn::ParamList& out) {
  w1.collect(out);
  w2.collect(out);
  norm.collect(out);
  w4.collect(out);
}

double gumbel_from_uniform(double u, double epsilon) {
  return -std::log(-std::log(u) + epsilon) + epsilon;
}

std::vector<double> gumbel_noise(std::size_t n, double epsilon, Rng& rng) {
  std::vector<double> g(n);
  for (auto& x : g) x = gumbel_from_uniform(uniform_open(rng), epsilon);
  return g;
}

std::vector<double> perturbed_probs(std::span<const double> scores,
                                    std::span<const double> gumbel, double delta) {
  if (scores.size() != gumbel.size() || scores.empty()) {
    throw ShapeError("perturbed_probs: score and noise lengths differ");
  }
  std::vector<double> z(scores.size());
  for (std::size_t j = 0; j < z.size(); ++j) z[j] = scores[j] + delta * gumbel[j];
  const double mx = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (auto& x : z) {
    x = std::exp(x - mx);
    total += x;
  }
  for (auto& x : z) x /= total;
  return z;
}

std::vector<double> gumbel_perturb(std::span<const double> scores,
                                   const SamplerConfig& config, Rng& rng) {
  const auto g = gumbel_noise(scores.size(), config.epsilon, rng);
  return perturbed_probs(scores, g, config.delta);
}

DropPlan select_drop_set(std::span<const double> probs, std::uint32_t drop_count) {
  if (drop_count >= probs.size()) {
    throw ConfigError("select_drop_set: drop count must be smaller than the frame count");
  }
  std::vector<Index> order(probs.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return probs[a] > probs[b]; });
  DropPlan plan;
  plan.probs.assign(probs.begin(), probs.end());
  plan.drop.assign(order.begin(), order.begin() + drop_count);
  std::vector<char> dropped(probs.size(), 0);
  for (Index j : plan.drop) dropped[static_cast<std::size_t>(j)] = 1;
  for (Index j = 0; j < static_cast<Index>(probs.size()); ++j) {
    if (!dropped[static_cast<std::size_t>(j)]) plan.keep.push_back(j);
  }
  return plan;
}

DropPlan random_drop_plan(std::uint32_t frames, std::uint32_t drop_count, Rng& rng) {
  if (drop_count >= frames) throw ConfigError("random_drop_plan: drop count too large");
  std::vector<Index> order(frames);
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  DropPlan plan;
  plan.probs.assign(frames, 1.0 / frames);
  plan.drop.assign(order.begin(), order.begin() + drop_count);
  plan.keep.assign(order.begin() + drop_count, order.end());
  std::sort(plan.keep.begin(), plan.keep.end());
  return plan;
}

Mat multi_hot(const DropPlan& plan, std::uint32_t frames) {
  Mat m = Mat::Zero(frames, 1);
  for (Index j : plan.drop) m(j, 0) = 1.0;
  return m;
}

BatchSelection select_batch(const ad::Var& scores, const Mat& gumbel,
                            std::uint32_t frames, const SamplerConfig& config) {
  require_same_shape(scores.value(), gumbel, "select_batch noise");
  if (scores.cols() != 1 || scores.rows() % frames != 0) {
    throw ShapeError("select_batch: scores must be a (B*M0) x 1 column");
  }
  ad::Tape& tape = *scores.tape();
  ad::Var logits = ad::add(scores, tape.constant(gumbel * config.delta));
  BatchSelection out;
  out.probs = ad::block_softmax(logits, frames);
  const Mat& p = out.probs.value();
  const Index videos = p.rows() / frames;
  Mat hard = Mat::Zero(p.rows(), 1);
  out.plans.reserve(static_cast<std::size_t>(videos));
  for (Index b = 0; b < videos; ++b) {
    std::span<const double> pb(p.data() + b * frames, frames);
    DropPlan plan = select_drop_set(pb, config.drop_count);
    plan.scores.assign(scores.value().data() + b * frames,
                       scores.value().data() + (b + 1) * frames);
    for (Index j : plan.drop) hard(b * frames + j, 0) = 1.0;
    out.plans.push_back(std::move(plan));
  }
  out.selection = ad::straight_through(hard, out.probs);
  return out;
}

}  // namespace ssvh
