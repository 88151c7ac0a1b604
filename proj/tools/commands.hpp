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

// Command implementations behind the `ssvh` executable.

#ifndef SSVH_TOOLS_COMMANDS_HPP_
#define SSVH_TOOLS_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ssvh/config.hpp"
#include "ssvh/feature_store.hpp"

namespace ssvh::cli {

struct GlobalOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;  // key=value
  bool json = false;
};

// Config file, then --set overrides, then --seed.
ExperimentConfig effective_config(const GlobalOptions& g);

struct GenOptions {
  std::filesystem::path out_dir;
  SyntheticSpec spec;
  std::uint32_t train_per_class = 40;
  std::uint32_t extra_per_class = 10;
  std::uint32_t query_per_class = 10;
};
int cmd_gen(const GlobalOptions& g, GenOptions o, std::ostream& out);

struct TrainOptions {
  std::filesystem::path features;
  std::filesystem::path split;
  std::filesystem::path out_dir;
};
int cmd_train(const GlobalOptions& g, const TrainOptions& o, std::ostream& out);

struct EncodeOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path features;
  std::optional<std::filesystem::path> split;
  std::string subset = "all";  // all, train, query, gallery
  std::filesystem::path out;
};
int cmd_encode(const GlobalOptions& g, const EncodeOptions& o, std::ostream& out);

struct EvalOptions {
  std::filesystem::path queries;
  std::filesystem::path gallery;
  std::filesystem::path labels;
  bool exclude_self = true;
  std::string denominator = "min";  // min or hits
  std::optional<std::filesystem::path> report;
  std::optional<std::filesystem::path> per_query_csv;
};
int cmd_eval(const GlobalOptions& g, const EvalOptions& o, std::ostream& out);

struct VerifyOptions {
  std::string suite = "all";
  std::uint32_t instances = 100;
};
int cmd_verify(const GlobalOptions& g, const VerifyOptions& o, std::ostream& out);

struct PlotOptions {
  std::filesystem::path report;
  std::filesystem::path out_dir;
  bool svg = false;
};
int cmd_plot(const GlobalOptions& g, const PlotOptions& o, std::ostream& out);

// Entry point shared by main() and the tests; never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ssvh::cli

#endif  // SSVH_TOOLS_COMMANDS_HPP_
