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

#include "ssvh/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "ssvh/objectives.hpp"

namespace ssvh {

nn::ParamList Model::sampler_params() {
  nn::ParamList out;
  sampler.collect(out);
  return out;
}

nn::ParamList Model::hashnet_params() {
  nn::ParamList out;
  net.collect(out);
  return out;
}

nn::ParamList Model::all_params() {
  nn::ParamList out;
  sampler.collect(out);
  net.collect(out);
  return out;
}

Model make_model(const HashNetConfig& config, std::uint64_t seed) {
  config.validate();
  Rng sampler_rng = make_stream(seed, {stream::kInit, 0});
  Rng net_rng = make_stream(seed, {stream::kInit, 1});
  Model m;
  m.sampler = GradeNet(config.feature_dim, sampler_rng);
  m.net = HashNet(config, net_rng);
  return m;
}

TrainState make_initial_state(const ExperimentConfig& config) {
  TrainState s;
  s.config = config;
  s.model = make_model(config.model, config.train.seed);
  s.optimizer = Optimizer(config.train.optimizer, s.model.all_params());
  return s;
}

StepReport train_step(TrainState& state, const VideoFeatureSet& set,
                      std::span<const std::uint32_t> ids, Phase phase,
                      const StepOptions& options) {
  const ExperimentConfig& cfg = state.config;
  const Index batch = static_cast<Index>(ids.size());
  if (batch < 2) throw ConfigError("train_step: a batch needs at least two videos");
  const Index frames = set.frames_per_video();
  const Index dim = set.feature_dim();
  const Index drop = cfg.sampler.drop_count;
  const Index keep = frames - drop;
  const bool use_p2set = phase == Phase::kFull && !cfg.train.disable_p2set && cfg.loss.beta != 0.0;
  if (use_p2set && !state.clusters) {
    throw ContractViolation("train_step: full phase requires semantic centers");
  }
  const bool learned = !cfg.train.random_sampler;

  // Two views of every video stacked as sequences s = view * batch + b.
  const Index seqs = 2 * batch;
  const Mat once = set.stacked(ids);
  Mat both(seqs * frames, dim);
  both.topRows(batch * frames) = once;
  both.bottomRows(batch * frames) = once;

  ad::Tape tape;
  ad::Var x = tape.constant(both);
  std::vector<DropPlan> plans;
  ad::Var y;
  if (learned) {
    Mat gumbel(seqs * frames, 1);
    for (Index s = 0; s < seqs; ++s) {
      Rng rng = make_stream(cfg.train.seed, {stream::kGumbel, state.epoch,
                                             ids[static_cast<std::size_t>(s % batch)],
                                             static_cast<std::uint64_t>(s / batch)});
      const auto g = gumbel_noise(static_cast<std::size_t>(frames), cfg.sampler.epsilon, rng);
      for (Index j = 0; j < frames; ++j) gumbel(s * frames + j, 0) = g[static_cast<std::size_t>(j)];
    }
    BatchSelection sel = select_batch(state.model.sampler.score(tape, x), gumbel,
                                      static_cast<std::uint32_t>(frames), cfg.sampler);
    plans = std::move(sel.plans);
    y = cfg.train.disable_grl ? sel.selection : ad::gradient_reversal(sel.selection);
  } else {
    for (Index s = 0; s < seqs; ++s) {
      Rng rng = make_stream(cfg.train.seed, {stream::kRandomDrop, state.epoch,
                                             ids[static_cast<std::size_t>(s % batch)],
                                             static_cast<std::uint64_t>(s / batch)});
      plans.push_back(random_drop_plan(static_cast<std::uint32_t>(frames),
                                       static_cast<std::uint32_t>(drop), rng));
    }
  }

  std::vector<Index> keep_rows, keep_pos, drop_rows, drop_pos;
  keep_rows.reserve(static_cast<std::size_t>(seqs * keep));
  drop_rows.reserve(static_cast<std::size_t>(seqs * drop));
  for (Index s = 0; s < seqs; ++s) {
    for (Index j : plans[static_cast<std::size_t>(s)].keep) {
      keep_rows.push_back(s * frames + j);
      keep_pos.push_back(j);
    }
    for (Index j : plans[static_cast<std::size_t>(s)].drop) {
      drop_rows.push_back(s * frames + j);
      drop_pos.push_back(j);
    }
  }

  // Kept inputs carry (1 - y) so the encoder path also reaches the sampler;
  // the forward value is unchanged because y is 0 on kept frames.
  ad::Var kept = ad::gather_rows(x, keep_rows);
  if (learned) kept = ad::scale_rows(kept, ad::gather_rows(ad::one_minus(y), keep_rows));
  HashNet::Encoded enc = state.model.net.encode(tape, kept, keep_pos, keep);
  HashVars hv = hash(enc.z, keep);

  // Rows (2i, 2i+1) hold the two views of video i.
  std::vector<Index> order(static_cast<std::size_t>(seqs));
  std::vector<std::uint32_t> row_videos(static_cast<std::size_t>(seqs));
  for (Index b = 0; b < batch; ++b) {
    order[static_cast<std::size_t>(2 * b)] = b;
    order[static_cast<std::size_t>(2 * b + 1)] = batch + b;
    row_videos[static_cast<std::size_t>(2 * b)] = ids[static_cast<std::size_t>(b)];
    row_videos[static_cast<std::size_t>(2 * b + 1)] = ids[static_cast<std::size_t>(b)];
  }
  ad::Var codes = ad::gather_rows(cfg.loss.use_soft_codes ? hv.pooled : hv.codes, order);

  StepReport report;
  std::vector<ad::Var> terms;

  if (drop > 0) {
    ad::Var recon = state.model.net.reconstruct(tape, enc.memory, keep_pos, drop_pos, drop);
    Mat target(static_cast<Index>(drop_rows.size()), dim);
    for (std::size_t r = 0; r < drop_rows.size(); ++r) {
      target.row(static_cast<Index>(r)) = both.row(drop_rows[r]);
    }
    ad::Var w = learned ? ad::gather_rows(y, drop_rows)
                        : tape.constant(Mat::Ones(static_cast<Index>(drop_rows.size()), 1));
    ad::Var l_fr = ad::weighted_row_sq_error(recon, target, w,
                                             static_cast<double>(drop_rows.size()));
    report.l_fr = l_fr.scalar();
    if (!cfg.train.disable_fr) terms.push_back(l_fr);
  }

  {
    LossWithGrad vc = view_contrastive_loss(codes.value(), cfg.loss.tau1,
                                            cfg.loss.include_positive_in_denominator);
    if (cfg.loss.vc_outer_negation) {
      vc.value = -vc.value;
      vc.grad = -vc.grad;
    }
    report.l_vc = vc.value;
    if (!cfg.train.disable_vc && cfg.loss.alpha != 0.0) {
      terms.push_back(ad::scale(
          ad::fused_scalar(codes, vc.value, std::move(vc.grad), "view_contrastive"),
          cfg.loss.alpha));
    }
  }

  if (use_p2set) {
    LossWithGrad p2 = p2set_loss(codes.value(), state.clusters->anchor_sets(row_videos),
                                 cfg.loss.tau2);
    report.l_p2set = p2.value;
    report.p2set_grad_norm = cfg.loss.beta * p2.grad.norm();
    terms.push_back(ad::scale(ad::fused_scalar(codes, p2.value, std::move(p2.grad), "p2set"),
                              cfg.loss.beta));
  }

  report.total = 0.0;
  nn::ParamList params = state.model.all_params();
  for (ad::Param* p : params) p->zero_grad();
  if (!terms.empty()) {
    ad::Var total = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) total = ad::add(total, terms[i]);
    report.total = total.scalar();
    if (!std::isfinite(report.total)) {
      throw NumericError("non-finite training loss at epoch " + std::to_string(state.epoch + 1) +
                         "; first bad value at " + tape.first_non_finite());
    }
    tape.backward(total);
    for (const ad::Param* p : params) {
      if (!all_finite(p->grad)) {
        throw NumericError("non-finite gradient for " + p->name + " at epoch " +
                           std::to_string(state.epoch + 1));
      }
    }
  }
  if (options.apply_update) state.optimizer.step(params);

  Index differ = 0;
  for (Index b = 0; b < batch; ++b) {
    auto a = plans[static_cast<std::size_t>(b)].drop;
    auto c = plans[static_cast<std::size_t>(batch + b)].drop;
    std::sort(a.begin(), a.end());
    std::sort(c.begin(), c.end());
    if (a != c) ++differ;
    report.drops.push_back(plans[static_cast<std::size_t>(b)].drop);
  }
  report.view_disagreement = static_cast<double>(differ) / static_cast<double>(batch);
  return report;
}

std::string EpochRecord::to_json() const {
  nlohmann::json j = {{"epoch", epoch},
                      {"phase", phase_name(phase)},
                      {"l_fr", l_fr},
                      {"l_vc", l_vc},
                      {"l_p2set", l_p2set},
                      {"total", total},
                      {"p2set_grad_norm", p2set_grad_norm},
                      {"view_disagreement", view_disagreement},
                      {"steps", steps},
                      {"wall_ms", wall_ms}};
  return j.dump();
}

std::vector<std::vector<std::uint32_t>> make_batches(std::span<const std::uint32_t> ids,
                                                     std::uint32_t batch_size,
                                                     std::uint64_t seed, std::uint32_t epoch) {
  if (batch_size == 0) throw ConfigError("make_batches: batch size must be positive");
  std::vector<std::uint32_t> shuffled(ids.begin(), ids.end());
  Rng rng = make_stream(seed, {stream::kShuffle, epoch});
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  std::vector<std::vector<std::uint32_t>> out;
  for (std::size_t i = 0; i < shuffled.size(); i += batch_size) {
    const std::size_t end = std::min(shuffled.size(), i + batch_size);
    out.emplace_back(shuffled.begin() + static_cast<std::ptrdiff_t>(i),
                     shuffled.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (out.size() > 1 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back()[0]);
    out.pop_back();
  }
  return out;
}

void continue_training(TrainState& state, const VideoFeatureSet& set,
                       std::span<const std::uint32_t> train_ids, const TrainHooks& hooks,
                       std::vector<EpochRecord>* log) {
  const ExperimentConfig& cfg = state.config;
  if (train_ids.size() < 2) throw ConfigError("training needs at least two videos");
  if (cfg.model.feature_dim != set.feature_dim() || cfg.model.max_frames < set.frames_per_video()) {
    throw ConfigError("model configuration does not match the feature set");
  }
  cfg.sampler.validate(set.frames_per_video());
  cfg.validate(train_ids.size());
  for (std::uint32_t id : train_ids) {
    if (id >= set.count()) throw ContractViolation("training id beyond the feature set");
  }

  if (state.epoch == 0 && hooks.on_checkpoint) hooks.on_checkpoint(state);
  const bool centers_needed = !cfg.train.disable_p2set && cfg.loss.beta != 0.0;
  std::uint32_t full_epochs_done =
      state.epoch > cfg.train.warmup_epochs ? state.epoch - cfg.train.warmup_epochs : 0;

  while (state.epoch < cfg.train.epochs) {
    const auto t0 = std::chrono::steady_clock::now();
    const Phase phase = state.epoch < cfg.train.warmup_epochs ? Phase::kWarmup : Phase::kFull;
    if (phase == Phase::kFull && centers_needed) {
      const std::uint32_t every = std::max<std::uint32_t>(1, cfg.centers.refresh_every_epochs);
      if (!state.clusters || full_epochs_done % every == 0) {
        ClusterConfig cc = cfg.centers;
        cc.seed = stream_seed(cfg.train.seed, {stream::kKMeans, state.epoch});
        state.clusters = refresh_centers(state.model.net, set, train_ids, cc);
      }
    }

    EpochRecord rec;
    rec.epoch = state.epoch + 1;
    rec.phase = phase;
    double weight = 0.0;
    for (const auto& b : make_batches(train_ids, cfg.train.batch_size, cfg.train.seed, state.epoch)) {
      const StepReport r = train_step(state, set, b, phase);
      const double n = static_cast<double>(b.size());
      rec.l_fr += n * r.l_fr;
      rec.l_vc += n * r.l_vc;
      rec.l_p2set += n * r.l_p2set;
      rec.total += n * r.total;
      rec.p2set_grad_norm += r.p2set_grad_norm;
      rec.view_disagreement += n * r.view_disagreement;
      weight += n;
      ++rec.steps;
      if (hooks.on_step) hooks.on_step(r, b);
    }
    rec.l_fr /= weight;
    rec.l_vc /= weight;
    rec.l_p2set /= weight;
    rec.total /= weight;
    rec.view_disagreement /= weight;
    rec.p2set_grad_norm /= static_cast<double>(rec.steps);
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();

    ++state.epoch;
    if (phase == Phase::kFull) ++full_epochs_done;
    if (log) log->push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
    const bool cadence = cfg.train.checkpoint_cadence > 0 &&
                         state.epoch % cfg.train.checkpoint_cadence == 0;
    if (hooks.on_checkpoint && (cadence || state.epoch == cfg.train.epochs)) {
      hooks.on_checkpoint(state);
    }
  }
}

TrainResult run_training(const VideoFeatureSet& set, std::span<const std::uint32_t> train_ids,
                         const ExperimentConfig& config, const TrainHooks& hooks) {
  TrainResult result{make_initial_state(config), {}};
  continue_training(result.state, set, train_ids, hooks, &result.log);
  return result;
}

}  // namespace ssvh
