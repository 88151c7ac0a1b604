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

// Video feature datasets: in-memory representation, the .asvh/.asvl binary
// containers, split files and a synthetic generator with planted hard frames.

#ifndef SSVH_FEATURE_STORE_HPP_
#define SSVH_FEATURE_STORE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ssvh/tensor.hpp"

namespace ssvh {

// N videos x M0 frames x D features, stored as f32 in video-major,
// frame-major order (the container payload layout).
class VideoFeatureSet {
 public:
  VideoFeatureSet() = default;
  VideoFeatureSet(std::uint32_t count, std::uint32_t frames, std::uint32_t dim,
                  std::vector<float> data);

  std::uint32_t count() const { return count_; }
  std::uint32_t frames_per_video() const { return frames_; }
  std::uint32_t feature_dim() const { return dim_; }

  std::span<const float> data() const { return data_; }
  std::span<float> mutable_data() { return data_; }

  // M0 x D frames of one video, widened to double.
  Mat video(std::uint32_t i) const;
  // Rows of several videos stacked: (|ids| * M0) x D.
  Mat stacked(std::span<const std::uint32_t> ids) const;

  bool has_labels() const { return labels_.has_value(); }
  const std::vector<std::uint32_t>& labels() const;
  std::uint32_t num_classes() const { return num_classes_; }
  void set_labels(std::vector<std::uint32_t> labels, std::uint32_t num_classes);
  void clear_labels() { labels_.reset(); num_classes_ = 0; }

  // Throws ConfigError on NaN/Inf features or out-of-range labels.
  void validate() const;

  friend bool operator==(const VideoFeatureSet&, const VideoFeatureSet&) = default;

 private:
  std::uint32_t count_ = 0;
  std::uint32_t frames_ = 0;
  std::uint32_t dim_ = 0;
  std::vector<float> data_;
  std::optional<std::vector<std::uint32_t>> labels_;
  std::uint32_t num_classes_ = 0;
};

struct SplitSpec {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> query;
  std::vector<std::uint32_t> gallery;

  // Indices in range and query disjoint from gallery.
  void validate(std::uint32_t count) const;
  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

struct SyntheticSpec {
  std::uint32_t num_classes = 10;
  std::uint32_t videos_per_class = 60;
  std::uint32_t frames_per_video = 16;
  std::uint32_t feature_dim = 32;
  std::uint32_t hard_frame_count = 4;
  double hard_noise_scale = 3.0;
  double base_noise_scale = 0.5;
  double temporal_drift_scale = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  VideoFeatureSet set;
  // Planted hard-frame indices per video, ascending.
  std::vector<std::vector<std::uint32_t>> hard_frames;
};

// Video i belongs to class i / videos_per_class. Each frame is
// prototype + drift(t) + noise, with `hard_frame_count` frames per video
// drawing noise at hard_noise_scale instead of base_noise_scale.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

// Per class: `train_per_class` train videos, `gallery_extra_per_class` more
// gallery-only videos and `query_per_class` queries. Gallery = train + extra.
SplitSpec make_class_split(const VideoFeatureSet& set, std::uint32_t train_per_class,
                           std::uint32_t gallery_extra_per_class,
                           std::uint32_t query_per_class, std::uint64_t seed);

// ---- files ----
void write_container(const VideoFeatureSet& set, const std::filesystem::path& path);
// Labels are not part of the container; see read_labels.
VideoFeatureSet read_container(const std::filesystem::path& path);

void write_labels(std::span<const std::uint32_t> labels, std::uint32_t num_classes,
                  const std::filesystem::path& path);
struct LabelFile {
  std::vector<std::uint32_t> labels;
  std::uint32_t num_classes = 0;
};
LabelFile read_labels(const std::filesystem::path& path);

void write_split(const SplitSpec& split, const std::filesystem::path& path);
SplitSpec read_split(const std::filesystem::path& path);

// Serialization to memory, used by the file functions.
std::vector<std::uint8_t> encode_container(const VideoFeatureSet& set);
VideoFeatureSet decode_container(std::span<const std::uint8_t> bytes);

}  // namespace ssvh

#endif  // SSVH_FEATURE_STORE_HPP_
