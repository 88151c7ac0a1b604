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

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace ssvh {

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("train.batch_size must be >= 2 (contrastive negatives)");
  if (!(optimizer.learning_rate >= 0.0)) throw ConfigError("train.learning_rate must be >= 0");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0) ||
      !(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0) || !(optimizer.eps > 0.0)) {
    throw ConfigError("train.adam_* out of range");
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_uint(const std::string& key, const std::string& v) {
  unsigned long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() ||
      out > static_cast<unsigned long long>(std::numeric_limits<T>::max())) {
    throw ConfigError(key + ": expected a non-negative integer, got \"" + v + "\"");
  }
  return static_cast<T>(out);
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a real number, got \"" + v + "\"");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true/false, got \"" + v + "\"");
}

std::vector<std::uint32_t> parse_uint_list(const std::string& key, const std::string& v) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_uint<std::uint32_t>(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": expected a comma-separated list");
  return out;
}

// Shortest text that parses back to the same double.
std::string fmt_real(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

struct Field {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define SSVH_UINT_FIELD(KEY, MEMBER, TYPE)                                                  \
  {KEY, Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {           \
                c.MEMBER = parse_uint<TYPE>(k, v);                                           \
              },                                                                             \
              [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); }}}
#define SSVH_REAL_FIELD(KEY, MEMBER)                                                        \
  {KEY, Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {           \
                c.MEMBER = parse_real(k, v);                                                 \
              },                                                                             \
              [](const ExperimentConfig& c) { return fmt_real(c.MEMBER); }}}
#define SSVH_BOOL_FIELD(KEY, MEMBER)                                                        \
  {KEY, Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {           \
                c.MEMBER = parse_bool(k, v);                                                 \
              },                                                                             \
              [](const ExperimentConfig& c) { return fmt_bool(c.MEMBER); }}}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"model.preset",
       Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
               // Layer-count presets; explicit layer keys after this line win.
               if (v == "desk") {
                 c.model.encoder_layers = 2;
                 c.model.decoder_layers = 1;
               } else if (v == "6x1") {
                 c.model.encoder_layers = 6;
                 c.model.decoder_layers = 1;
               } else if (v == "12x2") {
                 c.model.encoder_layers = 12;
                 c.model.decoder_layers = 2;
               } else {
                 throw ConfigError(k + ": expected desk, 6x1 or 12x2");
               }
             },
             [](const ExperimentConfig&) { return std::string(); }}},
      SSVH_UINT_FIELD("model.code_bits", model.code_bits, std::uint32_t),
      SSVH_UINT_FIELD("model.width", model.width, std::uint32_t),
      SSVH_UINT_FIELD("model.encoder_layers", model.encoder_layers, std::uint32_t),
      SSVH_UINT_FIELD("model.decoder_layers", model.decoder_layers, std::uint32_t),
      SSVH_UINT_FIELD("model.heads", model.heads, std::uint32_t),
      SSVH_UINT_FIELD("model.mlp_ratio", model.mlp_ratio, std::uint32_t),
      SSVH_UINT_FIELD("model.max_frames", model.max_frames, std::uint32_t),
      SSVH_UINT_FIELD("model.feature_dim", model.feature_dim, std::uint32_t),
      SSVH_UINT_FIELD("sampler.drop_count", sampler.drop_count, std::uint32_t),
      SSVH_REAL_FIELD("sampler.delta", sampler.delta),
      SSVH_REAL_FIELD("sampler.epsilon", sampler.epsilon),
      SSVH_REAL_FIELD("loss.alpha", loss.alpha),
      SSVH_REAL_FIELD("loss.beta", loss.beta),
      SSVH_REAL_FIELD("loss.tau1", loss.tau1),
      SSVH_REAL_FIELD("loss.tau2", loss.tau2),
      SSVH_BOOL_FIELD("loss.use_soft_codes", loss.use_soft_codes),
      SSVH_BOOL_FIELD("loss.include_positive_in_denominator", loss.include_positive_in_denominator),
      SSVH_BOOL_FIELD("loss.vc_outer_negation", loss.vc_outer_negation),
      {"centers.granularities",
       Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
               c.centers.granularities = parse_uint_list(k, v);
             },
             [](const ExperimentConfig& c) {
               std::string s;
               for (std::size_t i = 0; i < c.centers.granularities.size(); ++i) {
                 s += (i ? "," : "") + std::to_string(c.centers.granularities[i]);
               }
               return s;
             }}},
      SSVH_UINT_FIELD("centers.kmeans_max_iters", centers.kmeans_max_iters, std::uint32_t),
      SSVH_REAL_FIELD("centers.kmeans_tolerance", centers.kmeans_tolerance),
      SSVH_UINT_FIELD("centers.refresh_every_epochs", centers.refresh_every_epochs, std::uint32_t),
      {"centers.embedding_stage",
       Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
               if (v == "soft_hash") {
                 c.centers.embedding_stage = EmbeddingStage::kSoftHash;
               } else if (v == "encoder_output") {
                 c.centers.embedding_stage = EmbeddingStage::kEncoderOutput;
               } else {
                 throw ConfigError(k + ": expected soft_hash or encoder_output");
               }
             },
             [](const ExperimentConfig& c) {
               return std::string(c.centers.embedding_stage == EmbeddingStage::kSoftHash
                                      ? "soft_hash"
                                      : "encoder_output");
             }}},
      SSVH_UINT_FIELD("train.epochs", train.epochs, std::uint32_t),
      SSVH_UINT_FIELD("train.warmup_epochs", train.warmup_epochs, std::uint32_t),
      SSVH_UINT_FIELD("train.batch_size", train.batch_size, std::uint32_t),
      SSVH_REAL_FIELD("train.learning_rate", train.optimizer.learning_rate),
      {"train.optimizer",
       Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
               if (v == "adam") {
                 c.train.optimizer.kind = OptimizerKind::kAdam;
               } else if (v == "sgd") {
                 c.train.optimizer.kind = OptimizerKind::kSgd;
               } else {
                 throw ConfigError(k + ": expected adam or sgd");
               }
             },
             [](const ExperimentConfig& c) {
               return std::string(c.train.optimizer.kind == OptimizerKind::kAdam ? "adam" : "sgd");
             }}},
      SSVH_REAL_FIELD("train.adam_beta1", train.optimizer.beta1),
      SSVH_REAL_FIELD("train.adam_beta2", train.optimizer.beta2),
      SSVH_REAL_FIELD("train.adam_eps", train.optimizer.eps),
      SSVH_UINT_FIELD("train.seed", train.seed, std::uint64_t),
      SSVH_UINT_FIELD("train.checkpoint_cadence", train.checkpoint_cadence, std::uint32_t),
      SSVH_BOOL_FIELD("train.disable_grl", train.disable_grl),
      SSVH_BOOL_FIELD("train.random_sampler", train.random_sampler),
      SSVH_BOOL_FIELD("train.disable_fr", train.disable_fr),
      SSVH_BOOL_FIELD("train.disable_vc", train.disable_vc),
      SSVH_BOOL_FIELD("train.disable_p2set", train.disable_p2set),
  };
  return table;
}

#undef SSVH_UINT_FIELD
#undef SSVH_REAL_FIELD
#undef SSVH_BOOL_FIELD

}  // namespace

const std::vector<std::string>& ExperimentConfig::known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, f] : fields()) out.push_back(k);
    return out;
  }();
  return keys;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& [k, f] : fields()) {
    if (k == key) {
      f.set(*this, key, trim(value));
      explicit_keys_.insert(key);
      if (key == "model.preset") {
        explicit_keys_.insert("model.encoder_layers");
        explicit_keys_.insert("model.decoder_layers");
      }
      return;
    }
  }
  throw ConfigError("unknown config key \"" + key + "\"");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::to_pairs() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [k, f] : fields()) {
    if (k == "model.preset") continue;
    out.emplace_back(k, f.get(*this));
  }
  return out;
}

std::string ExperimentConfig::to_text() const {
  std::string s;
  for (const auto& [k, v] : to_pairs()) s += k + "=" + v + "\n";
  return s;
}

void ExperimentConfig::resolve_for_dataset(std::uint32_t frames_per_video,
                                           std::uint32_t feature_dim) {
  if (is_explicit("model.feature_dim") && model.feature_dim != feature_dim) {
    throw ConfigError("model.feature_dim=" + std::to_string(model.feature_dim) +
                      " but the features have D=" + std::to_string(feature_dim));
  }
  model.feature_dim = feature_dim;
  if (!is_explicit("model.max_frames")) model.max_frames = frames_per_video;
  if (model.max_frames < frames_per_video) {
    throw ConfigError("model.max_frames is smaller than the frames per video");
  }
  if (!is_explicit("sampler.drop_count")) sampler.drop_count = (frames_per_video + 1) / 2;
  sampler.validate(frames_per_video);
  model.validate();
}

void ExperimentConfig::validate(std::size_t train_size) const {
  model.validate();
  sampler.validate(model.max_frames);
  loss.validate();
  train.validate();
  if (!train.disable_p2set && train.warmup_epochs < train.epochs) centers.validate(train_size);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    cfg.set(trim(t.substr(0, eq)), t.substr(eq + 1));
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace ssvh
