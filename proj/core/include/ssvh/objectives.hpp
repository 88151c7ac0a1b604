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

// Training objectives. Each contrastive loss returns its value together with
// the exact gradient wrt the input codes so it can be spliced into a tape.

#ifndef SSVH_OBJECTIVES_HPP_
#define SSVH_OBJECTIVES_HPP_

#include <vector>

#include "ssvh/tensor.hpp"

namespace ssvh {

struct LossConfig {
  double alpha = 1.0;
  double beta = 0.2;
  double tau1 = 0.3;
  double tau2 = 0.3;
  bool use_soft_codes = false;
  bool include_positive_in_denominator = false;
  // Negates L_VC as printed (an extra leading minus); maximized by alignment.
  bool vc_outer_negation = false;

  void validate() const;
};

enum class Phase { kWarmup, kFull };

const char* phase_name(Phase phase);

struct LossWithGrad {
  double value = 0.0;
  Mat grad;
};

// Added to vector norms before dividing in the cosine.
inline constexpr double kCosineNormEps = 1e-12;

// Mean over rows of ||orig_r - recon_r||^2. Rows are the stacked N*M
// dropped frames, so this is (1 / NM) * sum_i sum_m ||v - v_hat||^2.
double frame_reconstruction_loss(const Mat& originals, const Mat& reconstructions);
LossWithGrad frame_reconstruction_loss_grad(const Mat& originals, const Mat& reconstructions);

// NT-Xent over 2N codes where rows (2i, 2i+1) are the two views of video i.
// By default the denominator holds the positive plus every code other than
// the anchor and its positive; include_positive_in_denominator switches to
// the literal sum over all 2N codes added to the positive term.
LossWithGrad view_contrastive_loss(const Mat& codes, double tau,
                                   bool include_positive_in_denominator = false);

// Anchors of one clustering granularity and the anchor assigned to every
// code row.
struct AnchorSet {
  Mat anchors;                       // N_a x K, entries +-1
  std::vector<Index> assigned;       // one per code row
};

// Softmax cross-entropy over each granularity's anchors with the assigned
// anchor as the target, averaged over rows and granularities.
LossWithGrad p2set_loss(const Mat& codes, const std::vector<AnchorSet>& levels, double tau);

// warmup: fr + alpha * vc; full: fr + alpha * vc + beta * p2set.
double aggregate_loss(double l_fr, double l_vc, double l_p2set,
                      const LossConfig& config, Phase phase);

// Cosine similarity with kCosineNormEps added to each norm.
double cosine(const Eigen::Ref<const Eigen::RowVectorXd>& a,
              const Eigen::Ref<const Eigen::RowVectorXd>& b);

}  // namespace ssvh

#endif  // SSVH_OBJECTIVES_HPP_
