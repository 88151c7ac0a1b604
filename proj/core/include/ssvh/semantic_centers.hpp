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

// Cluster anchors for point-to-set learning: k-means pseudo-labels over
// encoded training videos and per-cluster hash centers by component voting.

#ifndef SSVH_SEMANTIC_CENTERS_HPP_
#define SSVH_SEMANTIC_CENTERS_HPP_

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "ssvh/feature_store.hpp"
#include "ssvh/hashnet.hpp"
#include "ssvh/objectives.hpp"

namespace ssvh {

enum class EmbeddingStage { kSoftHash, kEncoderOutput };

struct ClusterConfig {
  std::vector<std::uint32_t> granularities{10, 20, 40};
  std::uint32_t kmeans_max_iters = 50;
  double kmeans_tolerance = 1e-6;
  std::uint32_t refresh_every_epochs = 1;
  EmbeddingStage embedding_stage = EmbeddingStage::kSoftHash;
  std::uint64_t seed = 0;

  void validate(std::size_t train_size) const;
};

struct KMeansResult {
  std::vector<std::uint32_t> assignments;
  Mat centroids;
  // Inertia after each assignment step; non-increasing.
  std::vector<double> inertia_history;
  double inertia = 0.0;
  std::uint32_t iterations = 0;
  // Fewer distinct points than clusters.
  bool degenerate = false;
};

// Lloyd's algorithm with k-means++ seeding. Empty clusters are reseeded to
// the point farthest from its current centroid.
KMeansResult kmeans(const Mat& points, std::uint32_t num_clusters,
                    std::uint32_t max_iters, double tolerance, std::uint64_t seed);

// Sum of squared distances from each point to its assigned centroid.
double kmeans_inertia(const Mat& points, const Mat& centroids,
                      std::span<const std::uint32_t> assignments);

// Per bit: +1 iff count(+1) >= count(-1). codes are rows of +-1.
Mat component_vote(const Mat& codes);

int hamming_distance(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                     const Eigen::Ref<const Eigen::RowVectorXd>& b);

// Mean Hamming distance from query to every row of `codes`.
double p2set_distance(const Eigen::Ref<const Eigen::RowVectorXd>& query, const Mat& codes);

struct CenterCertificate {
  Mat center;                   // component_vote output
  std::int64_t center_value = 0;   // aggregate Hamming distance of center
  std::int64_t optimal_value = 0;  // exhaustive minimum over {-1,+1}^K
  bool is_optimal = false;
};

inline constexpr std::uint32_t kMaxCertifyBits = 20;

// Exhaustive check that the voted center minimizes aggregate Hamming
// distance. Throws UnsupportedSize for K > kMaxCertifyBits.
CenterCertificate certify_center(const Mat& codes);

struct ClusterLevel {
  std::vector<std::uint32_t> assignments;  // per training video
  Mat centroids;
  Mat anchors;  // clusters x K, +-1
  bool degenerate = false;
};

class ClusterModel {
 public:
  ClusterModel() = default;
  ClusterModel(std::vector<std::uint32_t> train_ids, std::vector<ClusterLevel> levels);

  const std::vector<std::uint32_t>& train_ids() const { return train_ids_; }
  const std::vector<ClusterLevel>& levels() const { return levels_; }

  // Anchor sets for loss evaluation; `videos` gives the dataset id of each
  // code row. Throws ContractViolation for a video without assignment.
  std::vector<AnchorSet> anchor_sets(std::span<const std::uint32_t> videos) const;

 private:
  std::vector<std::uint32_t> train_ids_;
  std::vector<ClusterLevel> levels_;
  std::unordered_map<std::uint32_t, std::size_t> position_;
};

// Clusters `embeddings` (one row per training video) at every granularity
// and votes anchors from `codes` (+-1 rows, same order).
ClusterModel build_cluster_model(const Mat& embeddings, const Mat& codes,
                                 std::vector<std::uint32_t> train_ids,
                                 const ClusterConfig& config);

// Full-view embeddings of videos: mean-pooled soft hash (B x K) and
// mean-pooled encoder output (B x d_model).
struct FullViewEmbedding {
  Mat pooled_soft;
  Mat pooled_memory;
};
FullViewEmbedding embed_full_view(HashNet& net, const VideoFeatureSet& set,
                                  std::span<const std::uint32_t> ids,
                                  std::size_t chunk = 128);

// Encodes every training video with all frames, clusters and votes anchors.
ClusterModel refresh_centers(HashNet& net, const VideoFeatureSet& set,
                             std::span<const std::uint32_t> train_ids,
                             const ClusterConfig& config);

}  // namespace ssvh

#endif  // SSVH_SEMANTIC_CENTERS_HPP_
