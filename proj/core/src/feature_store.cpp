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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <unordered_set>

#include "ssvh/bytes.hpp"
#include "ssvh/rng.hpp"

namespace ssvh {

namespace {

constexpr std::uint16_t kContainerVersion = 1;
constexpr std::uint16_t kLabelVersion = 1;
constexpr std::size_t kContainerHeader = 20;

}  // namespace

VideoFeatureSet::VideoFeatureSet(std::uint32_t count, std::uint32_t frames,
                                 std::uint32_t dim, std::vector<float> data)
    : count_(count), frames_(frames), dim_(dim), data_(std::move(data)) {
  if (count == 0 || frames == 0 || dim == 0) {
    throw ConfigError("VideoFeatureSet: N, M0 and D must be positive");
  }
  const std::uint64_t expected = std::uint64_t{count} * frames * dim;
  if (data_.size() != expected) {
    throw ShapeError("VideoFeatureSet: payload has " + std::to_string(data_.size()) +
                     " values, expected " + std::to_string(expected));
  }
}

Mat VideoFeatureSet::video(std::uint32_t i) const {
  if (i >= count_) throw ContractViolation("VideoFeatureSet::video: index out of range");
  Mat m(frames_, dim_);
  const float* src = data_.data() + std::size_t{i} * frames_ * dim_;
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = src[k];
  return m;
}

Mat VideoFeatureSet::stacked(std::span<const std::uint32_t> ids) const {
  Mat m(static_cast<Index>(ids.size()) * frames_, dim_);
  const std::size_t stride = std::size_t{frames_} * dim_;
  for (std::size_t v = 0; v < ids.size(); ++v) {
    if (ids[v] >= count_) throw ContractViolation("VideoFeatureSet::stacked: index out of range");
    const float* src = data_.data() + std::size_t{ids[v]} * stride;
    double* dst = m.data() + v * stride;
    for (std::size_t k = 0; k < stride; ++k) dst[k] = src[k];
  }
  return m;
}

const std::vector<std::uint32_t>& VideoFeatureSet::labels() const {
  if (!labels_) throw ContractViolation("VideoFeatureSet: no labels attached");
  return *labels_;
}

void VideoFeatureSet::set_labels(std::vector<std::uint32_t> labels,
                                 std::uint32_t num_classes) {
  if (labels.size() != count_) {
    throw ShapeError("VideoFeatureSet: label count differs from video count");
  }
  labels_ = std::move(labels);
  num_classes_ = num_classes;
}

void VideoFeatureSet::validate() const {
  for (std::size_t k = 0; k < data_.size(); ++k) {
    if (!std::isfinite(data_[k])) {
      throw ConfigError("VideoFeatureSet: non-finite feature at flat index " + std::to_string(k));
    }
  }
  if (labels_) {
    for (std::size_t i = 0; i < labels_->size(); ++i) {
      if ((*labels_)[i] >= num_classes_) {
        throw ConfigError("VideoFeatureSet: label of video " + std::to_string(i) +
                          " outside [0, num_classes)");
      }
    }
  }
}

void SplitSpec::validate(std::uint32_t count) const {
  auto check = [count](const std::vector<std::uint32_t>& v, const char* name) {
    for (std::uint32_t i : v) {
      if (i >= count) {
        throw ConfigError(std::string("split: ") + name + " index " + std::to_string(i) +
                          " out of range");
      }
    }
  };
  check(train, "train");
  check(query, "query");
  check(gallery, "gallery");
  std::unordered_set<std::uint32_t> g(gallery.begin(), gallery.end());
  for (std::uint32_t q : query) {
    if (g.contains(q)) {
      throw ConfigError("split: video " + std::to_string(q) + " is both query and gallery");
    }
  }
}

void SyntheticSpec::validate() const {
  if (num_classes == 0 || videos_per_class == 0 || frames_per_video == 0 || feature_dim == 0) {
    throw ConfigError("synthetic: class count, videos per class, M0 and D must be positive");
  }
  if (hard_frame_count >= frames_per_video) {
    throw ConfigError("synthetic: hard_frame_count must be < frames_per_video");
  }
  if (!(hard_noise_scale >= 0) || !(base_noise_scale >= 0) || !(temporal_drift_scale >= 0)) {
    throw ConfigError("synthetic: noise and drift scales must be >= 0");
  }
  if (hard_frame_count > 0 && !(hard_noise_scale > 1.0)) {
    throw ConfigError("synthetic: hard_noise_scale must exceed 1 when hard frames are planted");
  }
  const std::uint64_t total = std::uint64_t{num_classes} * videos_per_class *
                              frames_per_video * feature_dim;
  if (std::uint64_t{num_classes} * videos_per_class > UINT32_MAX || total > (1ULL << 34)) {
    throw ConfigError("synthetic: dataset too large");
  }
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::uint32_t n = spec.num_classes * spec.videos_per_class;
  const std::uint32_t m0 = spec.frames_per_video;
  const std::uint32_t d = spec.feature_dim;
  Rng rng = make_stream(spec.seed, {stream::kSynthetic});
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);

  Mat prototypes(spec.num_classes, d);
  for (Index k = 0; k < prototypes.size(); ++k) prototypes.data()[k] = gauss(rng);

  SyntheticData out;
  std::vector<float> data(std::size_t{n} * m0 * d);
  std::vector<std::uint32_t> labels(n);
  out.hard_frames.resize(n);
  std::vector<double> amplitude(d), phase(d);
  std::vector<std::uint32_t> order(m0);
  std::vector<char> is_hard(m0);

  for (std::uint32_t v = 0; v < n; ++v) {
    const std::uint32_t c = v / spec.videos_per_class;
    labels[v] = c;
    for (std::uint32_t j = 0; j < d; ++j) {
      amplitude[j] = spec.temporal_drift_scale * gauss(rng);
      phase[j] = phase_dist(rng);
    }
    for (std::uint32_t t = 0; t < m0; ++t) order[t] = t;
    std::shuffle(order.begin(), order.end(), rng);
    std::fill(is_hard.begin(), is_hard.end(), 0);
    auto& hard = out.hard_frames[v];
    hard.assign(order.begin(), order.begin() + spec.hard_frame_count);
    std::sort(hard.begin(), hard.end());
    for (std::uint32_t t : hard) is_hard[t] = 1;

    for (std::uint32_t t = 0; t < m0; ++t) {
      const double noise = is_hard[t] ? spec.hard_noise_scale : spec.base_noise_scale;
      const double angle = 2.0 * std::numbers::pi * t / m0;
      float* row = data.data() + (std::size_t{v} * m0 + t) * d;
      for (std::uint32_t j = 0; j < d; ++j) {
        const double drift = amplitude[j] * std::sin(angle + phase[j]);
        row[j] = static_cast<float>(prototypes(c, j) + drift + noise * gauss(rng));
      }
    }
  }
  out.set = VideoFeatureSet(n, m0, d, std::move(data));
  out.set.set_labels(std::move(labels), spec.num_classes);
  return out;
}

SplitSpec make_class_split(const VideoFeatureSet& set, std::uint32_t train_per_class,
                           std::uint32_t gallery_extra_per_class,
                           std::uint32_t query_per_class, std::uint64_t seed) {
  const auto& labels = set.labels();
  std::vector<std::vector<std::uint32_t>> by_class(set.num_classes());
  for (std::uint32_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng = make_stream(seed, {stream::kSplit});
  SplitSpec split;
  const std::uint32_t need = train_per_class + gallery_extra_per_class + query_per_class;
  for (auto& members : by_class) {
    if (members.size() < need) {
      throw ConfigError("split: a class has fewer than " + std::to_string(need) + " videos");
    }
    std::shuffle(members.begin(), members.end(), rng);
    auto it = members.begin();
    split.train.insert(split.train.end(), it, it + train_per_class);
    split.gallery.insert(split.gallery.end(), it, it + train_per_class + gallery_extra_per_class);
    it += train_per_class + gallery_extra_per_class;
    split.query.insert(split.query.end(), it, it + query_per_class);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.gallery.begin(), split.gallery.end());
  std::sort(split.query.begin(), split.query.end());
  return split;
}

std::vector<std::uint8_t> encode_container(const VideoFeatureSet& set) {
  bytes::Writer w;
  w.raw("ASVH", 4);
  w.u16(kContainerVersion);
  w.u8(0);  // dtype f32
  w.u8(0);  // reserved
  w.u32(set.count());
  w.u32(set.frames_per_video());
  w.u32(set.feature_dim());
  for (float f : set.data()) w.f32(f);
  return std::move(w.buffer());
}

VideoFeatureSet decode_container(std::span<const std::uint8_t> bytes) {
  bytes::Reader r(bytes);
  r.magic("ASVH");
  const std::size_t version_at = r.offset();
  if (r.u16("version") != kContainerVersion) {
    throw FormatError("unsupported container version", version_at);
  }
  const std::size_t dtype_at = r.offset();
  if (r.u8("dtype") != 0) throw FormatError("unsupported dtype (only f32)", dtype_at);
  r.u8("reserved");
  const std::size_t dims_at = r.offset();
  const std::uint32_t n = r.u32("N");
  const std::uint32_t m0 = r.u32("M0");
  const std::uint32_t d = r.u32("D");
  if (n == 0 || m0 == 0 || d == 0) throw FormatError("zero dimension", dims_at);
  const std::uint64_t values = std::uint64_t{n} * m0;
  if (values > UINT64_MAX / d || values * d > (UINT64_MAX - kContainerHeader) / 4) {
    throw FormatError("dimension overflow", dims_at);
  }
  const std::uint64_t count = values * d;
  if (count * 4 != r.remaining()) {
    if (count * 4 > r.remaining()) {
      throw FormatError("truncated payload: expected " + std::to_string(count * 4) +
                            " bytes, found " + std::to_string(r.remaining()),
                        r.offset() + r.remaining());
    }
    throw FormatError("trailing bytes after payload", r.offset() + count * 4);
  }
  std::vector<float> data(count);
  for (auto& f : data) f = r.f32("payload");
  return VideoFeatureSet(n, m0, d, std::move(data));
}

void write_container(const VideoFeatureSet& set, const std::filesystem::path& path) {
  bytes::write_file(path, encode_container(set));
}

VideoFeatureSet read_container(const std::filesystem::path& path) {
  return decode_container(bytes::read_file(path));
}

void write_labels(std::span<const std::uint32_t> labels, std::uint32_t num_classes,
                  const std::filesystem::path& path) {
  bytes::Writer w;
  w.raw("ASVL", 4);
  w.u16(kLabelVersion);
  w.u32(static_cast<std::uint32_t>(labels.size()));
  w.u32(num_classes);
  for (std::uint32_t l : labels) w.u32(l);
  bytes::write_file(path, w.buffer());
}

LabelFile read_labels(const std::filesystem::path& path) {
  const auto data = bytes::read_file(path);
  bytes::Reader r(data);
  r.magic("ASVL");
  const std::size_t version_at = r.offset();
  if (r.u16("version") != kLabelVersion) throw FormatError("unsupported label version", version_at);
  const std::uint32_t n = r.u32("N");
  LabelFile out;
  out.num_classes = r.u32("num_classes");
  if (std::uint64_t{n} * 4 != r.remaining()) {
    throw FormatError("label payload size mismatch", r.offset());
  }
  out.labels.resize(n);
  for (auto& l : out.labels) {
    const std::size_t at = r.offset();
    l = r.u32("label");
    if (l >= out.num_classes) throw FormatError("label outside [0, num_classes)", at);
  }
  return out;
}

namespace {

void write_list(std::ostream& os, const char* name, const std::vector<std::uint32_t>& v) {
  os << name << ':';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << '\n';
}

std::vector<std::uint32_t> parse_list(const std::string& body, std::size_t line) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t\r");
    const std::string tok = item.substr(b, e - b + 1);
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || v > UINT32_MAX) {
      throw FormatError("split: bad index \"" + tok + "\" on line " + std::to_string(line), 0);
    }
    out.push_back(static_cast<std::uint32_t>(v));
  }
  return out;
}

}  // namespace

void write_split(const SplitSpec& split, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_list(os, "train", split.train);
  write_list(os, "query", split.query);
  write_list(os, "gallery", split.gallery);
  if (!os) throw IoError("short write: " + path.string());
}

SplitSpec read_split(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string() + " for reading");
  SplitSpec split;
  const char* names[] = {"train", "query", "gallery"};
  std::vector<std::uint32_t>* slots[] = {&split.train, &split.query, &split.gallery};
  std::string line;
  std::size_t offset = 0;
  for (int k = 0; k < 3; ++k) {
    if (!std::getline(is, line)) {
      throw FormatError(std::string("split: missing \"") + names[k] + ":\" line", offset);
    }
    const std::string prefix = std::string(names[k]) + ":";
    if (line.rfind(prefix, 0) != 0) {
      throw FormatError("split: expected line starting with \"" + prefix + "\"", offset);
    }
    *slots[k] = parse_list(line.substr(prefix.size()), static_cast<std::size_t>(k + 1));
    offset += line.size() + 1;
  }
  return split;
}

}  // namespace ssvh
