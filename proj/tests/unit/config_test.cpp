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

#include "ssvh/config.hpp"

#include <gtest/gtest.h>

#include <fstream>

#include "test_support.hpp"

namespace ssvh {
namespace {

TEST(Config, DefaultsRoundTripThroughText) {
  ExperimentConfig a;
  const ExperimentConfig b = parse_config(a.to_text());
  EXPECT_EQ(a.to_pairs(), b.to_pairs());
}

TEST(Config, EveryStoredKeyAppearsOnceInPairs) {
  // model.preset is a write-only shorthand for the layer counts.
  ExperimentConfig c;
  const auto pairs = c.to_pairs();
  std::vector<std::string> stored;
  for (const auto& k : ExperimentConfig::known_keys()) {
    if (k != "model.preset") stored.push_back(k);
  }
  ASSERT_EQ(pairs.size(), stored.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) EXPECT_EQ(pairs[i].first, stored[i]);
}

TEST(Config, ModifiedValuesRoundTrip) {
  ExperimentConfig a;
  a.set("loss.beta", "0.01");
  a.set("loss.alpha", "0.2");
  a.set("centers.granularities", "250,400,600");
  a.set("train.optimizer", "sgd");
  a.set("train.disable_grl", "true");
  a.set("centers.embedding_stage", "encoder_output");
  a.set("train.seed", "18446744073709551615");
  const ExperimentConfig b = parse_config(a.to_text());
  EXPECT_EQ(a.to_pairs(), b.to_pairs());
  EXPECT_EQ(b.loss.beta, 0.01);
  EXPECT_EQ(b.centers.granularities, (std::vector<std::uint32_t>{250, 400, 600}));
  EXPECT_EQ(b.train.optimizer.kind, OptimizerKind::kSgd);
  EXPECT_TRUE(b.train.disable_grl);
  EXPECT_EQ(b.centers.embedding_stage, EmbeddingStage::kEncoderOutput);
  EXPECT_EQ(b.train.seed, 18446744073709551615ULL);
}

TEST(Config, RealsPrintShortest) {
  ExperimentConfig a;
  a.set("loss.beta", "0.2");
  for (const auto& [k, v] : a.to_pairs()) {
    if (k == "loss.beta") EXPECT_EQ(v, "0.2");
  }
}

TEST(Config, UnknownKeyAndBadValuesAreConfigErrors) {
  ExperimentConfig c;
  EXPECT_THROW(c.set("loss.gamma", "1"), ConfigError);
  EXPECT_THROW(c.set("train.epochs", "-3"), ConfigError);
  EXPECT_THROW(c.set("train.epochs", "many"), ConfigError);
  EXPECT_THROW(c.set("loss.tau1", "warm"), ConfigError);
  EXPECT_THROW(c.set("train.disable_grl", "maybe"), ConfigError);
  EXPECT_THROW(c.set("train.optimizer", "rmsprop"), ConfigError);
  EXPECT_THROW(parse_config("no equals sign here\n"), ConfigError);
}

TEST(Config, CommentsBlankLinesAndOverrides) {
  const ExperimentConfig c = parse_config("# comment\n\nloss.alpha = 0.5\nloss.alpha=0.7\n");
  EXPECT_EQ(c.loss.alpha, 0.7);
  EXPECT_TRUE(c.is_explicit("loss.alpha"));
  EXPECT_FALSE(c.is_explicit("loss.beta"));
}

TEST(Config, PresetSetsLayerCounts) {
  ExperimentConfig c;
  c.set("model.preset", "6x1");
  EXPECT_EQ(c.model.encoder_layers, 6u);
  EXPECT_EQ(c.model.decoder_layers, 1u);
  c.set("model.preset", "12x2");
  EXPECT_EQ(c.model.encoder_layers, 12u);
  EXPECT_EQ(c.model.decoder_layers, 2u);
  EXPECT_THROW(c.set("model.preset", "huge"), ConfigError);
}

TEST(Config, ResolveForDatasetFillsDefaults) {
  ExperimentConfig c;
  c.resolve_for_dataset(16, 32);
  EXPECT_EQ(c.model.max_frames, 16u);
  EXPECT_EQ(c.model.feature_dim, 32u);
  EXPECT_EQ(c.sampler.drop_count, 8u);
  ExperimentConfig odd;
  odd.resolve_for_dataset(7, 3);
  EXPECT_EQ(odd.sampler.drop_count, 4u);
  ExperimentConfig bad;
  bad.set("model.feature_dim", "16");
  EXPECT_THROW(bad.resolve_for_dataset(16, 32), ConfigError);
  ExperimentConfig drop;
  drop.set("sampler.drop_count", "16");
  EXPECT_THROW(drop.resolve_for_dataset(16, 32), ConfigError);
}

TEST(Config, ValidateChecksTrainAndCenters) {
  ExperimentConfig c = testing::tiny_config();
  EXPECT_NO_THROW(c.validate(18));
  c.set("train.batch_size", "1");
  EXPECT_THROW(c.validate(18), ConfigError);
  c = testing::tiny_config();
  c.set("centers.granularities", "30");
  EXPECT_THROW(c.validate(18), ConfigError);
  // Centers are never built when the run stays in warm-up.
  c.set("train.warmup_epochs", "5");
  c.set("train.epochs", "5");
  EXPECT_NO_THROW(c.validate(18));
  c = testing::tiny_config();
  c.set("loss.tau2", "0");
  EXPECT_THROW(c.validate(18), ConfigError);
}

TEST(Config, LoadMissingFileIsIoError) {
  testing::TempDir dir;
  EXPECT_THROW(load_config(dir / "nope.txt"), IoError);
  std::ofstream(dir / "c.txt") << "train.epochs=3\n";
  EXPECT_EQ(load_config(dir / "c.txt").train.epochs, 3u);
}

}  // namespace
}  // namespace ssvh
