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

#include "ssvh/feature_store.hpp"

#include <gtest/gtest.h>

#include <Eigen/QR>
#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "ssvh/bytes.hpp"
#include "test_support.hpp"

namespace ssvh {
namespace {

using testing::TempDir;

VideoFeatureSet random_set(std::uint32_t n, std::uint32_t m0, std::uint32_t d, Rng& rng) {
  std::normal_distribution<float> dist(0.0f, 1.0f);
  std::vector<float> data(static_cast<std::size_t>(n) * m0 * d);
  for (float& v : data) v = dist(rng);
  return VideoFeatureSet(n, m0, d, std::move(data));
}

TEST(Container, SingleZeroRoundTrip) {
  TempDir dir;
  VideoFeatureSet set(1, 1, 1, {0.0f});
  write_container(set, dir / "one.asvh");
  EXPECT_EQ(read_container(dir / "one.asvh"), set);
}

TEST(Container, RoundTripRandomShapes) {
  Rng rng(11);
  std::uniform_int_distribution<std::uint32_t> dim(1, 9);
  for (int trial = 0; trial < 25; ++trial) {
    VideoFeatureSet set = random_set(dim(rng), dim(rng), dim(rng), rng);
    const auto bytes = encode_container(set);
    ASSERT_EQ(bytes.size(), 20 + 4 * set.data().size());
    VideoFeatureSet back = decode_container(bytes);
    EXPECT_EQ(back, set);
    EXPECT_EQ(encode_container(back), bytes);
  }
}

TEST(Container, HeaderLayout) {
  VideoFeatureSet set(2, 3, 4, std::vector<float>(24, 1.5f));
  const auto b = encode_container(set);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "ASVH");
  EXPECT_EQ(b[4], 1);  // version, little-endian
  EXPECT_EQ(b[5], 0);
  EXPECT_EQ(b[6], 0);  // dtype f32
  EXPECT_EQ(b[7], 0);
  EXPECT_EQ(b[8], 2);
  EXPECT_EQ(b[12], 3);
  EXPECT_EQ(b[16], 4);
}

TEST(Container, BadMagicIsFormatError) {
  auto b = encode_container(VideoFeatureSet(1, 1, 1, {0.0f}));
  b[1] = 'X';
  try {
    decode_container(b);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 1u);
  }
}

TEST(Container, TruncatedAndTrailingBytesAreFormatErrors) {
  auto b = encode_container(VideoFeatureSet(2, 2, 2, std::vector<float>(8, 1.0f)));
  auto cut = b;
  cut.pop_back();
  EXPECT_THROW(decode_container(cut), FormatError);
  auto header_only = std::vector<std::uint8_t>(b.begin(), b.begin() + 10);
  EXPECT_THROW(decode_container(header_only), FormatError);
  auto extra = b;
  extra.push_back(0);
  EXPECT_THROW(decode_container(extra), FormatError);
  auto bad_version = b;
  bad_version[4] = 2;
  EXPECT_THROW(decode_container(bad_version), FormatError);
  auto zero_dim = b;
  zero_dim[8] = 0;
  EXPECT_THROW(decode_container(zero_dim), FormatError);
}

TEST(Container, DimensionOverflowIsFormatError) {
  bytes::Writer w;
  w.raw("ASVH", 4);
  w.u16(1);
  w.u8(0);
  w.u8(0);
  w.u32(0xffffffffu);
  w.u32(0xffffffffu);
  w.u32(0xffffffffu);
  EXPECT_THROW(decode_container(w.buffer()), FormatError);
}

TEST(Container, MissingFileIsIoError) {
  TempDir dir;
  EXPECT_THROW(read_container(dir / "absent.asvh"), IoError);
}

TEST(Labels, RoundTripAndValidation) {
  TempDir dir;
  std::vector<std::uint32_t> labels{0, 2, 1, 2};
  write_labels(labels, 3, dir / "l.asvl");
  LabelFile back = read_labels(dir / "l.asvl");
  EXPECT_EQ(back.labels, labels);
  EXPECT_EQ(back.num_classes, 3u);
  // A label outside [0, num_classes) is rejected on read.
  auto raw = bytes::read_file(dir / "l.asvl");
  raw[raw.size() - 4] = 7;
  bytes::write_file(dir / "bad.asvl", raw);
  EXPECT_THROW(read_labels(dir / "bad.asvl"), FormatError);
}

TEST(Split, RoundTripAndValidation) {
  TempDir dir;
  SplitSpec split{{0, 1, 2}, {5, 6}, {0, 1, 2, 3}};
  write_split(split, dir / "split.txt");
  EXPECT_EQ(read_split(dir / "split.txt"), split);
  EXPECT_NO_THROW(split.validate(7));
  EXPECT_THROW(split.validate(6), ConfigError);
  SplitSpec overlap{{0}, {1}, {1, 2}};
  EXPECT_THROW(overlap.validate(3), ConfigError);
  std::ofstream(dir / "broken.txt") << "train:0,1\nquery:x\ngallery:2\n";
  EXPECT_THROW(read_split(dir / "broken.txt"), FormatError);
}

TEST(Synthetic, ZeroNoiseFramesEqualClassPrototype) {
  SyntheticSpec s;
  s.num_classes = 3;
  s.videos_per_class = 4;
  s.frames_per_video = 5;
  s.feature_dim = 6;
  s.hard_frame_count = 0;
  s.base_noise_scale = 0.0;
  s.temporal_drift_scale = 0.0;
  SyntheticData d = generate_synthetic(s);
  for (std::uint32_t v = 0; v < d.set.count(); ++v) {
    const Mat frames = d.set.video(v);
    const Mat reference = d.set.video((v / s.videos_per_class) * s.videos_per_class);
    for (Index t = 0; t < frames.rows(); ++t) {
      EXPECT_EQ(frames.row(t), reference.row(0)) << "video " << v << " frame " << t;
    }
  }
  // Distinct classes have distinct prototypes.
  EXPECT_NE(d.set.video(0).row(0), d.set.video(s.videos_per_class).row(0));
}

TEST(Synthetic, DeterministicUnderSeedAndSensitiveToIt) {
  SyntheticSpec s = testing::tiny_spec(5);
  SyntheticData a = generate_synthetic(s);
  SyntheticData b = generate_synthetic(s);
  EXPECT_EQ(a.set, b.set);
  EXPECT_EQ(a.hard_frames, b.hard_frames);
  s.seed = 6;
  EXPECT_NE(generate_synthetic(s).set, a.set);
}

TEST(Synthetic, LabelsAndHardFrameSets) {
  SyntheticData d = generate_synthetic(testing::tiny_spec());
  ASSERT_TRUE(d.set.has_labels());
  for (std::uint32_t v = 0; v < d.set.count(); ++v) {
    EXPECT_EQ(d.set.labels()[v], v / 6);
    const auto& hard = d.hard_frames[v];
    ASSERT_EQ(hard.size(), 2u);
    EXPECT_TRUE(std::is_sorted(hard.begin(), hard.end()));
    EXPECT_EQ(std::set<std::uint32_t>(hard.begin(), hard.end()).size(), hard.size());
    EXPECT_LT(hard.back(), 8u);
  }
}

TEST(Synthetic, HardFramesHaveLargerVariance) {
  SyntheticSpec s;
  s.num_classes = 10;
  s.videos_per_class = 50;
  s.frames_per_video = 16;
  s.feature_dim = 32;
  s.hard_frame_count = 4;
  s.hard_noise_scale = 5.0;
  s.base_noise_scale = 0.5;
  SyntheticData d = generate_synthetic(s);
  int wins = 0;
  for (std::uint32_t v = 0; v < d.set.count(); ++v) {
    const Mat f = d.set.video(v);
    std::vector<char> hard(16, 0);
    for (auto t : d.hard_frames[v]) hard[t] = 1;
    // Per-frame variance across feature coordinates, averaged per group.
    double hv = 0, ev = 0;
    for (Index t = 0; t < 16; ++t) {
      const double mean = f.row(t).mean();
      const double var = (f.row(t).array() - mean).square().mean();
      (hard[t] ? hv : ev) += var;
    }
    wins += (hv / 4.0 > ev / 12.0);
  }
  EXPECT_GE(wins, static_cast<int>(0.99 * d.set.count()));
}

TEST(Synthetic, HardFramesHaveLargerLeastSquaresResidual) {
  // Affine-in-time predictor fitted on easy frames only, per video.
  SyntheticSpec s = testing::tiny_spec(3);
  s.videos_per_class = 20;
  s.frames_per_video = 16;
  s.feature_dim = 16;
  s.hard_frame_count = 4;
  SyntheticData d = generate_synthetic(s);
  int wins = 0;
  for (std::uint32_t v = 0; v < d.set.count(); ++v) {
    const Mat f = d.set.video(v);
    std::vector<char> hard(16, 0);
    for (auto t : d.hard_frames[v]) hard[t] = 1;
    Mat design(12, 2), target(12, f.cols());
    Index r = 0;
    for (Index t = 0; t < 16; ++t) {
      if (hard[t]) continue;
      design(r, 0) = 1.0;
      design(r, 1) = static_cast<double>(t) / 15.0;
      target.row(r++) = f.row(t);
    }
    const Mat coef = design.colPivHouseholderQr().solve(target);
    double hr = 0, er = 0;
    for (Index t = 0; t < 16; ++t) {
      Eigen::RowVector2d x(1.0, static_cast<double>(t) / 15.0);
      const double res = (f.row(t) - x * coef).squaredNorm();
      (hard[t] ? hr : er) += res;
    }
    wins += (hr / 4.0 > er / 12.0);
  }
  EXPECT_GE(wins, static_cast<int>(0.95 * d.set.count()));
}

TEST(Synthetic, LargeRoundTripIsByteIdentical) {
  SyntheticSpec s;
  s.num_classes = 10;
  s.videos_per_class = 50;
  SyntheticData d = generate_synthetic(s);
  TempDir dir;
  write_container(d.set, dir / "f.asvh");
  write_labels(d.set.labels(), d.set.num_classes(), dir / "f.asvl");
  VideoFeatureSet back = read_container(dir / "f.asvh");
  LabelFile labels = read_labels(dir / "f.asvl");
  back.set_labels(labels.labels, labels.num_classes);
  EXPECT_EQ(back, d.set);
  EXPECT_EQ(bytes::read_file(dir / "f.asvh"), encode_container(d.set));
}

TEST(Synthetic, InvalidSpecIsConfigError) {
  SyntheticSpec s = testing::tiny_spec();
  s.hard_frame_count = 8;
  EXPECT_THROW(generate_synthetic(s), ConfigError);
  s = testing::tiny_spec();
  s.hard_noise_scale = 0.5;
  EXPECT_THROW(generate_synthetic(s), ConfigError);
  s = testing::tiny_spec();
  s.feature_dim = 0;
  EXPECT_THROW(generate_synthetic(s), ConfigError);
}

TEST(ClassSplit, DisjointQueriesAndGalleryContainsTrain) {
  SyntheticSpec s = testing::tiny_spec();
  SyntheticData d = generate_synthetic(s);
  SplitSpec split = make_class_split(d.set, 3, 1, 2, 4);
  EXPECT_NO_THROW(split.validate(d.set.count()));
  EXPECT_EQ(split.train.size(), 9u);
  EXPECT_EQ(split.gallery.size(), 12u);
  EXPECT_EQ(split.query.size(), 6u);
  std::set<std::uint32_t> gallery(split.gallery.begin(), split.gallery.end());
  for (auto t : split.train) EXPECT_TRUE(gallery.contains(t));
  for (auto q : split.query) EXPECT_FALSE(gallery.contains(q));
  EXPECT_THROW(make_class_split(d.set, 5, 1, 1, 4), ConfigError);
}

TEST(FeatureSet, ValidateRejectsNonFinite) {
  VideoFeatureSet set(1, 1, 2, {0.0f, std::numeric_limits<float>::quiet_NaN()});
  EXPECT_THROW(set.validate(), ConfigError);
  EXPECT_THROW(VideoFeatureSet(1, 1, 2, {0.0f}), ShapeError);
}

}  // namespace
}  // namespace ssvh
