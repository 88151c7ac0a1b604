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

// Hamming-space retrieval and the evaluation metrics.

#ifndef SSVH_RETRIEVAL_HPP_
#define SSVH_RETRIEVAL_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ssvh/feature_store.hpp"
#include "ssvh/hashnet.hpp"

namespace ssvh {

// K-bit codes packed into 64-bit words; bit i of a code is set when
// component i is +1.
class CodeTable {
 public:
  CodeTable() = default;
  CodeTable(std::uint32_t bits, std::vector<std::uint32_t> ids, std::vector<std::uint64_t> words);

  // codes: N x K with entries +-1 (anything >= 0 counts as +1).
  static CodeTable pack(const Mat& codes, std::vector<std::uint32_t> ids);
  Mat unpack() const;

  std::uint32_t bits() const { return bits_; }
  std::size_t size() const { return ids_.size(); }
  std::size_t words_per_code() const { return words_per_code_; }
  const std::vector<std::uint32_t>& ids() const { return ids_; }
  const std::vector<std::uint64_t>& words() const { return words_; }
  std::span<const std::uint64_t> code(std::size_t row) const {
    return {words_.data() + row * words_per_code_, words_per_code_};
  }

  friend bool operator==(const CodeTable&, const CodeTable&) = default;

 private:
  std::uint32_t bits_ = 0;
  std::size_t words_per_code_ = 0;
  std::vector<std::uint32_t> ids_;
  std::vector<std::uint64_t> words_;
};

int hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

// Full-view encoding (no frames dropped) of `ids`.
CodeTable encode_split(HashNet& net, const VideoFeatureSet& set,
                       std::span<const std::uint32_t> ids);

// Gallery rows sorted by ascending Hamming distance to `query`; equal
// distances keep ascending row order.
std::vector<std::uint32_t> rank_gallery(std::span<const std::uint64_t> query,
                                        const CodeTable& gallery);

enum class ApDenominator {
  kMinNRelevant,  // min(N, relevant items in the gallery)
  kHitsAtN,       // relevant items within the top N
};

struct RankedQuery {
  std::vector<std::uint8_t> relevance;  // 1 if the item at that rank is relevant
  std::size_t total_relevant = 0;
};

double average_precision_at(const RankedQuery& q, std::uint32_t n,
                            ApDenominator denom = ApDenominator::kMinNRelevant);

double map_at_n(std::span<const RankedQuery> queries, std::uint32_t n,
                ApDenominator denom = ApDenominator::kMinNRelevant);

inline const std::vector<std::uint32_t>& gmap_cutoffs() {
  static const std::vector<std::uint32_t> cutoffs{5, 20, 40, 60, 80, 100};
  return cutoffs;
}

// sqrt(sum of squared mAP@N) over the six standard cutoffs.
double gmap(const std::map<std::uint32_t, double>& map_at);

struct PrPoint {
  std::uint32_t radius = 0;
  double precision = 0.0;  // 1.0 when nothing lies within the radius
  double recall = 0.0;
};

// Micro-averaged precision/recall at every radius 0..K. `labels` is indexed
// by video id.
std::vector<PrPoint> pr_curve(const CodeTable& queries, const CodeTable& gallery,
                              std::span<const std::uint32_t> labels, bool exclude_self = true);

struct EvalOptions {
  bool exclude_self = true;
  ApDenominator denominator = ApDenominator::kMinNRelevant;
  bool per_query = false;
};

struct RetrievalReport {
  std::uint32_t bits = 0;
  std::map<std::uint32_t, double> map_at;
  double gmap = 0.0;
  std::vector<PrPoint> pr;
  // query id, then AP at each cutoff in gmap_cutoffs() order.
  std::vector<std::pair<std::uint32_t, std::vector<double>>> per_query_ap;

  std::string to_json() const;
  std::string per_query_csv() const;
};

RetrievalReport evaluate(const CodeTable& queries, const CodeTable& gallery,
                         std::span<const std::uint32_t> labels, const EvalOptions& options = {});

// Code file (.asvc): "ASVC" | u16 version=1 | u16 reserved=0 | u32 N | u32 K |
// N x u32 ids | N x ceil(K/64) u64 words.
std::vector<std::uint8_t> encode_code_file(const CodeTable& table);
CodeTable decode_code_file(std::span<const std::uint8_t> bytes);
void write_codes(const CodeTable& table, const std::filesystem::path& path);
CodeTable read_codes(const std::filesystem::path& path);

}  // namespace ssvh

#endif  // SSVH_RETRIEVAL_HPP_
