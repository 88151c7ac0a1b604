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

#include "ssvh/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ssvh/bytes.hpp"

namespace ssvh {

namespace {

constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kHasMoments = 1;

void write_mat(bytes::Writer& w, const Mat& m) {
  for (Index i = 0; i < m.size(); ++i) w.f64(m.data()[i]);
}

void read_mat(bytes::Reader& r, Mat& m, const char* what) {
  r.need(static_cast<std::size_t>(m.size()) * 8, what);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = r.f64(what);
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  Model model = state.model;
  Optimizer opt = state.optimizer;
  const nn::ParamList params = model.all_params();
  const bool moments = opt.first_moments().size() == params.size() &&
                       opt.config().kind == OptimizerKind::kAdam;

  bytes::Writer w;
  w.raw("SVCK", 4);
  w.u16(kVersion);
  w.u16(moments ? kHasMoments : 0);
  w.u32(state.epoch);
  w.u64(opt.steps());
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ad::Param& p = *params[i];
    w.u16(static_cast<std::uint16_t>(p.name.size()));
    w.raw(p.name.data(), p.name.size());
    w.u32(static_cast<std::uint32_t>(p.value.rows()));
    w.u32(static_cast<std::uint32_t>(p.value.cols()));
    write_mat(w, p.value);
    if (moments) {
      write_mat(w, opt.first_moments()[i]);
      write_mat(w, opt.second_moments()[i]);
    }
  }
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  bytes::write_file(path, w.buffer());

  nlohmann::ordered_json side;
  side["format"] = "ssvh-checkpoint";
  side["version"] = kVersion;
  side["params_file"] = path.filename().string();
  side["epoch"] = state.epoch;
  side["seed"] = state.config.train.seed;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : state.config.to_pairs()) cfg[k] = v;
  side["config"] = cfg;
  std::ofstream out(sidecar_path(path));
  if (!out) throw IoError("cannot write " + sidecar_path(path).string());
  out << side.dump(2) << "\n";
  if (!out) throw IoError("short write to " + sidecar_path(path).string());
}

ExperimentConfig load_sidecar_config(const std::filesystem::path& path) {
  std::ifstream in(sidecar_path(path));
  if (!in) throw IoError("cannot open " + sidecar_path(path).string());
  nlohmann::json side;
  try {
    in >> side;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint sidecar is not valid JSON: ") + e.what(), 0);
  }
  if (side.value("format", "") != "ssvh-checkpoint" || !side.contains("config") ||
      !side["config"].is_object()) {
    throw FormatError("not a checkpoint sidecar", 0);
  }
  ExperimentConfig cfg;
  for (const auto& [k, v] : side["config"].items()) {
    if (!v.is_string()) throw FormatError("sidecar config value for " + k + " is not a string", 0);
    cfg.set(k, v.get<std::string>());
  }
  return cfg;
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  TrainState state = make_initial_state(load_sidecar_config(path));
  const std::vector<std::uint8_t> data = bytes::read_file(path);
  bytes::Reader r(data);
  r.magic("SVCK");
  const std::size_t vpos = r.offset();
  if (r.u16("version") != kVersion) throw FormatError("unsupported checkpoint version", vpos);
  const std::uint16_t flags = r.u16("flags");
  state.epoch = r.u32("epoch");
  const std::uint64_t steps = r.u64("steps");
  const std::size_t cpos = r.offset();
  const std::uint32_t count = r.u32("param count");
  nn::ParamList params = state.model.all_params();
  if (count != params.size()) {
    throw FormatError("checkpoint holds " + std::to_string(count) + " tensors, model has " +
                          std::to_string(params.size()),
                      cpos);
  }
  const bool moments = (flags & kHasMoments) != 0;
  std::vector<Mat>& m1 = state.optimizer.first_moments();
  std::vector<Mat>& m2 = state.optimizer.second_moments();
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Param& p = *params[i];
    const std::size_t npos = r.offset();
    const std::uint16_t len = r.u16("name length");
    r.need(len, "name");
    std::string name(len, '\0');
    for (auto& c : name) c = static_cast<char>(r.u8("name"));
    if (name != p.name) throw FormatError("expected tensor " + p.name + ", found " + name, npos);
    const std::size_t spos = r.offset();
    const std::uint32_t rows = r.u32("rows");
    const std::uint32_t cols = r.u32("cols");
    if (rows != p.value.rows() || cols != p.value.cols()) {
      throw FormatError("shape mismatch for " + p.name, spos);
    }
    read_mat(r, p.value, "values");
    if (moments) {
      if (m1.size() == params.size()) {
        read_mat(r, m1[i], "first moments");
        read_mat(r, m2[i], "second moments");
      } else {
        Mat skip(rows, cols);
        read_mat(r, skip, "first moments");
        read_mat(r, skip, "second moments");
      }
    }
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint", r.offset());
  state.optimizer.set_steps(steps);
  return state;
}

}  // namespace ssvh
