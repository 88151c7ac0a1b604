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

#include "ssvh/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "ssvh/bytes.hpp"
#include "ssvh/semantic_centers.hpp"

namespace ssvh {

namespace {

std::size_t words_for(std::uint32_t bits) { return (bits + 63) / 64; }

}  // namespace

CodeTable::CodeTable(std::uint32_t bits, std::vector<std::uint32_t> ids,
                     std::vector<std::uint64_t> words)
    : bits_(bits), words_per_code_(words_for(bits)), ids_(std::move(ids)), words_(std::move(words)) {
  if (bits_ == 0) throw ShapeError("CodeTable: zero bits per code");
  if (words_.size() != ids_.size() * words_per_code_) {
    throw ShapeError("CodeTable: word count does not match N * ceil(K/64)");
  }
  if (bits_ % 64 != 0) {
    const std::uint64_t mask = ~((std::uint64_t{1} << (bits_ % 64)) - 1);
    for (std::size_t r = 0; r < ids_.size(); ++r) {
      if (words_[r * words_per_code_ + words_per_code_ - 1] & mask) {
        throw ShapeError("CodeTable: padding bits beyond K are set");
      }
    }
  }
}

CodeTable CodeTable::pack(const Mat& codes, std::vector<std::uint32_t> ids) {
  if (static_cast<std::size_t>(codes.rows()) != ids.size()) {
    throw ShapeError("CodeTable::pack: one id per code row required");
  }
  const auto bits = static_cast<std::uint32_t>(codes.cols());
  const std::size_t w = words_for(bits);
  std::vector<std::uint64_t> words(ids.size() * w, 0);
  for (Index r = 0; r < codes.rows(); ++r) {
    for (Index k = 0; k < codes.cols(); ++k) {
      if (codes(r, k) >= 0.0) {
        words[static_cast<std::size_t>(r) * w + static_cast<std::size_t>(k) / 64] |=
            std::uint64_t{1} << (k % 64);
      }
    }
  }
  return CodeTable(bits, std::move(ids), std::move(words));
}

Mat CodeTable::unpack() const {
  Mat out(static_cast<Index>(size()), bits_);
  for (std::size_t r = 0; r < size(); ++r) {
    for (std::uint32_t k = 0; k < bits_; ++k) {
      const bool on = (words_[r * words_per_code_ + k / 64] >> (k % 64)) & 1U;
      out(static_cast<Index>(r), k) = on ? 1.0 : -1.0;
    }
  }
  return out;
}

int hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  if (a.size() != b.size()) throw ShapeError("hamming: code lengths differ");
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::popcount(a[i] ^ b[i]);
  return d;
}

CodeTable encode_split(HashNet& net, const VideoFeatureSet& set,
                       std::span<const std::uint32_t> ids) {
  if (set.feature_dim() != net.config().feature_dim) {
    throw ConfigError("encode_split: checkpoint expects D=" +
                      std::to_string(net.config().feature_dim) + " but features have D=" +
                      std::to_string(set.feature_dim()));
  }
  if (set.frames_per_video() > net.config().max_frames) {
    throw ConfigError("encode_split: videos are longer than the model's max_frames");
  }
  for (std::uint32_t id : ids) {
    if (id >= set.count()) throw ContractViolation("encode_split: id beyond the feature set");
  }
  const FullViewEmbedding emb = embed_full_view(net, set, ids);
  return CodeTable::pack(emb.pooled_soft, std::vector<std::uint32_t>(ids.begin(), ids.end()));
}

std::vector<std::uint32_t> rank_gallery(std::span<const std::uint64_t> query,
                                        const CodeTable& gallery) {
  if (query.size() != gallery.words_per_code()) {
    throw ShapeError("rank_gallery: query and gallery code lengths differ");
  }
  // Counting sort by distance keeps equal distances in row order.
  const std::size_t n = gallery.size();
  std::vector<int> dist(n);
  std::vector<std::size_t> count(gallery.bits() + 2, 0);
  for (std::size_t r = 0; r < n; ++r) {
    dist[r] = hamming(query, gallery.code(r));
    ++count[static_cast<std::size_t>(dist[r]) + 1];
  }
  for (std::size_t d = 1; d < count.size(); ++d) count[d] += count[d - 1];
  std::vector<std::uint32_t> order(n);
  for (std::size_t r = 0; r < n; ++r) {
    order[count[static_cast<std::size_t>(dist[r])]++] = static_cast<std::uint32_t>(r);
  }
  return order;
}

double average_precision_at(const RankedQuery& q, std::uint32_t n, ApDenominator denom) {
  if (n == 0) throw ContractViolation("average_precision_at: N must be >= 1");
  const std::size_t depth = std::min<std::size_t>(n, q.relevance.size());
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < depth; ++k) {
    if (q.relevance[k]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  const std::size_t d = denom == ApDenominator::kMinNRelevant
                            ? std::min<std::size_t>(n, q.total_relevant)
                            : hits;
  return d == 0 ? 0.0 : sum / static_cast<double>(d);
}

double map_at_n(std::span<const RankedQuery> queries, std::uint32_t n, ApDenominator denom) {
  if (queries.empty()) return 0.0;
  double s = 0.0;
  for (const auto& q : queries) s += average_precision_at(q, n, denom);
  return s / static_cast<double>(queries.size());
}

double gmap(const std::map<std::uint32_t, double>& map_at) {
  double s = 0.0;
  for (std::uint32_t n : gmap_cutoffs()) {
    auto it = map_at.find(n);
    if (it == map_at.end()) {
      throw ContractViolation("gmap: missing mAP@" + std::to_string(n));
    }
    s += it->second * it->second;
  }
  return std::sqrt(s);
}

namespace {

std::uint32_t label_of(std::span<const std::uint32_t> labels, std::uint32_t id) {
  if (id >= labels.size()) throw ContractViolation("evaluation: video id without a label");
  return labels[id];
}

void check_compatible(const CodeTable& queries, const CodeTable& gallery) {
  if (queries.bits() != gallery.bits()) {
    throw ShapeError("evaluation: query and gallery codes have different K");
  }
}

}  // namespace

std::vector<PrPoint> pr_curve(const CodeTable& queries, const CodeTable& gallery,
                              std::span<const std::uint32_t> labels, bool exclude_self) {
  check_compatible(queries, gallery);
  const std::uint32_t k = gallery.bits();
  // Histograms of distance for retrieved and relevant items, summed over queries.
  std::vector<double> all(k + 1, 0.0), rel(k + 1, 0.0);
  double total_rel = 0.0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const std::uint32_t qid = queries.ids()[q];
    const std::uint32_t ql = label_of(labels, qid);
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      const std::uint32_t gid = gallery.ids()[g];
      if (exclude_self && gid == qid) continue;
      const int d = hamming(queries.code(q), gallery.code(g));
      all[static_cast<std::size_t>(d)] += 1.0;
      if (label_of(labels, gid) == ql) {
        rel[static_cast<std::size_t>(d)] += 1.0;
        total_rel += 1.0;
      }
    }
  }
  std::vector<PrPoint> out;
  double cum_all = 0.0, cum_rel = 0.0;
  for (std::uint32_t r = 0; r <= k; ++r) {
    cum_all += all[r];
    cum_rel += rel[r];
    PrPoint p;
    p.radius = r;
    p.precision = cum_all == 0.0 ? 1.0 : cum_rel / cum_all;
    p.recall = total_rel == 0.0 ? 1.0 : cum_rel / total_rel;
    out.push_back(p);
  }
  return out;
}

RetrievalReport evaluate(const CodeTable& queries, const CodeTable& gallery,
                         std::span<const std::uint32_t> labels, const EvalOptions& options) {
  check_compatible(queries, gallery);
  const auto& cutoffs = gmap_cutoffs();
  std::vector<RankedQuery> ranked(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const std::uint32_t qid = queries.ids()[q];
    const std::uint32_t ql = label_of(labels, qid);
    RankedQuery& rq = ranked[q];
    for (std::uint32_t g : rank_gallery(queries.code(q), gallery)) {
      const std::uint32_t gid = gallery.ids()[g];
      if (options.exclude_self && gid == qid) continue;
      const bool hit = label_of(labels, gid) == ql;
      rq.relevance.push_back(hit ? 1 : 0);
      rq.total_relevant += hit ? 1 : 0;
    }
  }
  RetrievalReport report;
  report.bits = gallery.bits();
  for (std::uint32_t n : cutoffs) report.map_at[n] = map_at_n(ranked, n, options.denominator);
  report.gmap = gmap(report.map_at);
  report.pr = pr_curve(queries, gallery, labels, options.exclude_self);
  if (options.per_query) {
    for (std::size_t q = 0; q < queries.size(); ++q) {
      std::vector<double> ap;
      for (std::uint32_t n : cutoffs) ap.push_back(average_precision_at(ranked[q], n, options.denominator));
      report.per_query_ap.emplace_back(queries.ids()[q], std::move(ap));
    }
  }
  return report;
}

std::string RetrievalReport::to_json() const {
  nlohmann::ordered_json j;
  j["bits"] = bits;
  nlohmann::ordered_json m = nlohmann::ordered_json::object();
  for (const auto& [n, v] : map_at) m[std::to_string(n)] = v;
  j["map_at"] = m;
  j["gmap"] = gmap;
  nlohmann::ordered_json pts = nlohmann::ordered_json::array();
  for (const auto& p : pr) pts.push_back({p.radius, p.precision, p.recall});
  j["pr"] = pts;
  return j.dump();
}

std::string RetrievalReport::per_query_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "query";
  for (std::uint32_t n : gmap_cutoffs()) os << ",ap@" << n;
  os << "\n";
  for (const auto& [id, ap] : per_query_ap) {
    os << id;
    for (double v : ap) os << "," << v;
    os << "\n";
  }
  return os.str();
}

namespace {
constexpr std::uint16_t kCodeVersion = 1;
}

std::vector<std::uint8_t> encode_code_file(const CodeTable& table) {
  bytes::Writer w;
  w.raw("ASVC", 4);
  w.u16(kCodeVersion);
  w.u16(0);
  w.u32(static_cast<std::uint32_t>(table.size()));
  w.u32(table.bits());
  for (std::uint32_t id : table.ids()) w.u32(id);
  for (std::uint64_t word : table.words()) w.u64(word);
  return std::move(w.buffer());
}

CodeTable decode_code_file(std::span<const std::uint8_t> data) {
  bytes::Reader r(data);
  r.magic("ASVC");
  const std::size_t vpos = r.offset();
  if (r.u16("version") != kCodeVersion) throw FormatError("unsupported code file version", vpos);
  r.u16("reserved");
  const std::uint32_t n = r.u32("count");
  const std::size_t kpos = r.offset();
  const std::uint32_t k = r.u32("bits");
  if (k == 0) throw FormatError("code file declares zero bits", kpos);
  const std::uint64_t need = static_cast<std::uint64_t>(n) * (4 + 8 * words_for(k));
  if (need > r.remaining()) throw FormatError("truncated code payload", r.offset());
  std::vector<std::uint32_t> ids(n);
  for (auto& id : ids) id = r.u32("id");
  std::vector<std::uint64_t> words(static_cast<std::size_t>(n) * words_for(k));
  for (auto& word : words) word = r.u64("code word");
  if (r.remaining() != 0) throw FormatError("trailing bytes after code payload", r.offset());
  try {
    return CodeTable(k, std::move(ids), std::move(words));
  } catch (const ShapeError& e) {
    throw FormatError(e.what(), 16);
  }
}

void write_codes(const CodeTable& table, const std::filesystem::path& path) {
  bytes::write_file(path, encode_code_file(table));
}

CodeTable read_codes(const std::filesystem::path& path) {
  return decode_code_file(bytes::read_file(path));
}

}  // namespace ssvh
