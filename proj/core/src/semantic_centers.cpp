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

#include "ssvh/semantic_centers.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include "ssvh/rng.hpp"

namespace ssvh {

void ClusterConfig::validate(std::size_t train_size) const {
  if (granularities.empty()) throw ConfigError("centers.granularities must not be empty");
  for (std::uint32_t g : granularities) {
    if (g == 0 || g > train_size) {
      throw ConfigError("centers.granularities: cluster count " + std::to_string(g) +
                        " outside [1, training-set size " + std::to_string(train_size) + "]");
    }
  }
  if (kmeans_max_iters == 0) throw ConfigError("centers.kmeans_max_iters must be >= 1");
  if (!(kmeans_tolerance >= 0.0)) throw ConfigError("centers.kmeans_tolerance must be >= 0");
  if (refresh_every_epochs == 0) throw ConfigError("centers.refresh_every_epochs must be >= 1");
}

namespace {

std::size_t count_distinct(const Mat& points) {
  std::set<std::vector<double>> seen;
  for (Index i = 0; i < points.rows(); ++i) {
    seen.emplace(points.row(i).data(), points.row(i).data() + points.cols());
  }
  return seen.size();
}

// Ties go to the lowest cluster index.
double assign(const Mat& points, const Mat& centroids, std::vector<std::uint32_t>& out,
              std::vector<double>& dist) {
  double inertia = 0.0;
  for (Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (Index c = 0; c < centroids.rows(); ++c) {
      const double d = (points.row(i) - centroids.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<std::uint32_t>(c);
      }
    }
    out[static_cast<std::size_t>(i)] = arg;
    dist[static_cast<std::size_t>(i)] = best;
    inertia += best;
  }
  return inertia;
}

}  // namespace

double kmeans_inertia(const Mat& points, const Mat& centroids,
                      std::span<const std::uint32_t> assignments) {
  double total = 0.0;
  for (Index i = 0; i < points.rows(); ++i) {
    total += (points.row(i) - centroids.row(assignments[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return total;
}

KMeansResult kmeans(const Mat& points, std::uint32_t num_clusters, std::uint32_t max_iters,
                    double tolerance, std::uint64_t seed) {
  const Index n = points.rows();
  if (num_clusters == 0 || num_clusters > n) {
    throw ConfigError("kmeans: cluster count must lie in [1, number of points]");
  }
  KMeansResult res;
  res.degenerate = count_distinct(points) < num_clusters;
  Rng rng = make_stream(seed, {stream::kKMeans, num_clusters});

  // k-means++ seeding.
  Mat centroids(num_clusters, points.cols());
  std::uniform_int_distribution<Index> pick(0, n - 1);
  centroids.row(0) = points.row(pick(rng));
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (std::uint32_t c = 1; c < num_clusters; ++c) {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (points.row(i) - centroids.row(c - 1)).squaredNorm());
      total += d2[i];
    }
    Index chosen = 0;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      chosen = n - 1;
      for (Index i = 0; i < n; ++i) {
        r -= d2[i];
        if (r < 0.0 && d2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
      while (d2[chosen] == 0.0 && chosen > 0) --chosen;
    } else {
      chosen = pick(rng);
    }
    centroids.row(c) = points.row(chosen);
  }

  res.assignments.assign(static_cast<std::size_t>(n), 0);
  std::vector<double> dist(static_cast<std::size_t>(n));
  std::vector<Index> counts(num_clusters);
  for (std::uint32_t it = 0; it < max_iters; ++it) {
    res.inertia_history.push_back(assign(points, centroids, res.assignments, dist));
    res.iterations = it + 1;

    Mat next = Mat::Zero(num_clusters, points.cols());
    std::fill(counts.begin(), counts.end(), 0);
    for (Index i = 0; i < n; ++i) {
      next.row(res.assignments[i]) += points.row(i);
      ++counts[res.assignments[i]];
    }
    std::vector<char> taken(static_cast<std::size_t>(n), 0);
    for (std::uint32_t c = 0; c < num_clusters; ++c) {
      if (counts[c] > 0) {
        next.row(c) /= static_cast<double>(counts[c]);
        continue;
      }
      // Reseed to the farthest point not already used for a reseed.
      Index far = -1;
      for (Index i = 0; i < n; ++i) {
        if (taken[i] || counts[res.assignments[i]] <= 1) continue;
        if (far < 0 || dist[i] > dist[far]) far = i;
      }
      if (far < 0) {
        next.row(c) = centroids.row(c);
        continue;
      }
      taken[far] = 1;
      --counts[res.assignments[far]];
      next.row(c) = points.row(far);
    }
    const double shift = (next - centroids).rowwise().norm().maxCoeff();
    centroids = std::move(next);
    if (shift <= tolerance) break;
  }
  res.inertia = assign(points, centroids, res.assignments, dist);
  res.centroids = std::move(centroids);
  return res;
}

Mat component_vote(const Mat& codes) {
  if (codes.rows() == 0) throw ContractViolation("component_vote: empty code set");
  Mat center(1, codes.cols());
  for (Index j = 0; j < codes.cols(); ++j) {
    Index plus = 0;
    for (Index i = 0; i < codes.rows(); ++i) plus += codes(i, j) > 0.0 ? 1 : 0;
    center(0, j) = plus >= codes.rows() - plus ? 1.0 : -1.0;
  }
  return center;
}

int hamming_distance(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                     const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  if (a.size() != b.size()) throw ShapeError("hamming_distance: code lengths differ");
  int d = 0;
  for (Index j = 0; j < a.size(); ++j) d += (a(j) > 0.0) != (b(j) > 0.0) ? 1 : 0;
  return d;
}

double p2set_distance(const Eigen::Ref<const Eigen::RowVectorXd>& query, const Mat& codes) {
  if (codes.rows() == 0) throw ContractViolation("p2set_distance: empty code set");
  if (codes.cols() != query.size()) throw ShapeError("p2set_distance: code lengths differ");
  double total = 0.0;
  for (Index i = 0; i < codes.rows(); ++i) total += hamming_distance(query, codes.row(i));
  return total / static_cast<double>(codes.rows());
}

CenterCertificate certify_center(const Mat& codes) {
  const Index k = codes.cols();
  if (k > static_cast<Index>(kMaxCertifyBits)) {
    throw UnsupportedSize("certify_center: K = " + std::to_string(k) +
                          " exceeds the exhaustive bound of " + std::to_string(kMaxCertifyBits));
  }
  CenterCertificate cert;
  cert.center = component_vote(codes);
  std::vector<std::uint32_t> packed(static_cast<std::size_t>(codes.rows()), 0);
  for (Index i = 0; i < codes.rows(); ++i) {
    for (Index j = 0; j < k; ++j) {
      if (codes(i, j) > 0.0) packed[i] |= 1u << j;
    }
  }
  auto aggregate = [&](std::uint32_t cand) {
    std::int64_t total = 0;
    for (std::uint32_t p : packed) total += std::popcount(p ^ cand);
    return total;
  };
  std::uint32_t center_bits = 0;
  for (Index j = 0; j < k; ++j) {
    if (cert.center(0, j) > 0.0) center_bits |= 1u << j;
  }
  cert.center_value = aggregate(center_bits);
  cert.optimal_value = std::numeric_limits<std::int64_t>::max();
  const std::uint64_t candidates = std::uint64_t{1} << k;
  for (std::uint64_t c = 0; c < candidates; ++c) {
    cert.optimal_value = std::min(cert.optimal_value, aggregate(static_cast<std::uint32_t>(c)));
  }
  cert.is_optimal = cert.center_value == cert.optimal_value;
  return cert;
}

ClusterModel::ClusterModel(std::vector<std::uint32_t> train_ids, std::vector<ClusterLevel> levels)
    : train_ids_(std::move(train_ids)), levels_(std::move(levels)) {
  for (std::size_t i = 0; i < train_ids_.size(); ++i) position_.emplace(train_ids_[i], i);
}

std::vector<AnchorSet> ClusterModel::anchor_sets(std::span<const std::uint32_t> videos) const {
  std::vector<AnchorSet> out(levels_.size());
  for (std::size_t g = 0; g < levels_.size(); ++g) {
    out[g].anchors = levels_[g].anchors;
    out[g].assigned.reserve(videos.size());
  }
  for (std::uint32_t v : videos) {
    auto it = position_.find(v);
    if (it == position_.end()) {
      throw ContractViolation("ClusterModel: video " + std::to_string(v) +
                              " has no cluster assignment; refresh centers first");
    }
    for (std::size_t g = 0; g < levels_.size(); ++g) {
      out[g].assigned.push_back(levels_[g].assignments[it->second]);
    }
  }
  return out;
}

ClusterModel build_cluster_model(const Mat& embeddings, const Mat& codes,
                                 std::vector<std::uint32_t> train_ids,
                                 const ClusterConfig& config) {
  if (embeddings.rows() != codes.rows() ||
      static_cast<std::size_t>(codes.rows()) != train_ids.size()) {
    throw ShapeError("build_cluster_model: embeddings, codes and ids must align");
  }
  config.validate(train_ids.size());
  std::vector<ClusterLevel> levels;
  for (std::uint32_t g : config.granularities) {
    KMeansResult km = kmeans(embeddings, g, config.kmeans_max_iters, config.kmeans_tolerance,
                             config.seed);
    ClusterLevel level;
    level.degenerate = km.degenerate;
    level.assignments = std::move(km.assignments);
    level.centroids = std::move(km.centroids);
    level.anchors.resize(g, codes.cols());
    std::vector<std::vector<Index>> members(g);
    for (std::size_t i = 0; i < level.assignments.size(); ++i) {
      members[level.assignments[i]].push_back(static_cast<Index>(i));
    }
    const Mat everyone = component_vote(codes);
    for (std::uint32_t c = 0; c < g; ++c) {
      if (members[c].empty()) {
        // Only reachable for degenerate data.
        level.anchors.row(c) = everyone;
        continue;
      }
      Mat member_codes(static_cast<Index>(members[c].size()), codes.cols());
      for (std::size_t m = 0; m < members[c].size(); ++m) {
        member_codes.row(static_cast<Index>(m)) = codes.row(members[c][m]);
      }
      level.anchors.row(c) = component_vote(member_codes);
    }
    levels.push_back(std::move(level));
  }
  return ClusterModel(std::move(train_ids), std::move(levels));
}

FullViewEmbedding embed_full_view(HashNet& net, const VideoFeatureSet& set,
                                  std::span<const std::uint32_t> ids, std::size_t chunk) {
  const Index m0 = set.frames_per_video();
  FullViewEmbedding out;
  out.pooled_soft.resize(static_cast<Index>(ids.size()), net.config().code_bits);
  out.pooled_memory.resize(static_cast<Index>(ids.size()), net.config().width);
  for (std::size_t start = 0; start < ids.size(); start += chunk) {
    const std::size_t len = std::min(chunk, ids.size() - start);
    auto part = ids.subspan(start, len);
    ad::Tape tape;
    std::vector<Index> pos(len * static_cast<std::size_t>(m0));
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<Index>(i) % m0;
    HashNet::Encoded enc = net.encode(tape, tape.constant(set.stacked(part)), pos, m0);
    HashVars hv = hash(enc.z, m0);
    out.pooled_soft.middleRows(static_cast<Index>(start), static_cast<Index>(len)) = hv.pooled.value();
    out.pooled_memory.middleRows(static_cast<Index>(start), static_cast<Index>(len)) =
        ad::block_mean(enc.memory, m0).value();
  }
  return out;
}

ClusterModel refresh_centers(HashNet& net, const VideoFeatureSet& set,
                             std::span<const std::uint32_t> train_ids,
                             const ClusterConfig& config) {
  FullViewEmbedding emb = embed_full_view(net, set, train_ids);
  Mat codes = emb.pooled_soft.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
  const Mat& points =
      config.embedding_stage == EmbeddingStage::kSoftHash ? emb.pooled_soft : emb.pooled_memory;
  return build_cluster_model(points, codes,
                             std::vector<std::uint32_t>(train_ids.begin(), train_ids.end()),
                             config);
}

}  // namespace ssvh
