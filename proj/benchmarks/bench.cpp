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

#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "ssvh/retrieval.hpp"
#include "ssvh/semantic_centers.hpp"
#include "ssvh/trainer.hpp"

namespace {

using namespace ssvh;

Mat random_codes(Index n, Index k, std::uint64_t seed) {
  Rng rng(seed);
  std::bernoulli_distribution coin(0.5);
  Mat m(n, k);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = coin(rng) ? 1.0 : -1.0;
  return m;
}

void BM_HammingRank(benchmark::State& state) {
  const Index n = state.range(0);
  const Index k = state.range(1);
  std::vector<std::uint32_t> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0u);
  const CodeTable gallery = CodeTable::pack(random_codes(n, k, 1), ids);
  const CodeTable query = CodeTable::pack(random_codes(1, k, 2), {0});
  for (auto _ : state) benchmark::DoNotOptimize(rank_gallery(query.code(0), gallery));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_HammingRank)->Args({10000, 16})->Args({10000, 64})->Args({100000, 64});

void BM_ComponentVote(benchmark::State& state) {
  const Mat codes = random_codes(state.range(0), 64, 3);
  for (auto _ : state) benchmark::DoNotOptimize(component_vote(codes));
}
BENCHMARK(BM_ComponentVote)->Arg(100)->Arg(1000);

void BM_TrainStep(benchmark::State& state) {
  SyntheticSpec spec;
  spec.videos_per_class = 8;
  const SyntheticData d = generate_synthetic(spec);
  ExperimentConfig cfg;
  cfg.set("model.width", std::to_string(state.range(0)));
  cfg.resolve_for_dataset(spec.frames_per_video, spec.feature_dim);
  TrainState s = make_initial_state(cfg);
  std::vector<std::uint32_t> batch(64);
  std::iota(batch.begin(), batch.end(), 0u);
  for (auto _ : state) benchmark::DoNotOptimize(train_step(s, d.set, batch, Phase::kWarmup));
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_RefreshCenters(benchmark::State& state) {
  SyntheticSpec spec;
  spec.videos_per_class = 40;
  const SyntheticData d = generate_synthetic(spec);
  ExperimentConfig cfg;
  cfg.resolve_for_dataset(spec.frames_per_video, spec.feature_dim);
  Model m = make_model(cfg.model, 0);
  std::vector<std::uint32_t> ids(d.set.count());
  std::iota(ids.begin(), ids.end(), 0u);
  for (auto _ : state) benchmark::DoNotOptimize(refresh_centers(m.net, d.set, ids, cfg.centers));
}
BENCHMARK(BM_RefreshCenters)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
