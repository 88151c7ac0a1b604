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

#include "ssvh/objectives.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

namespace ssvh {
namespace {

using testing::random_mat;
using testing::random_signs;

double cos_oracle(const Mat& a, Index i, const Mat& b, Index j) {
  double dot = 0, na = 0, nb = 0;
  for (Index k = 0; k < a.cols(); ++k) {
    dot += a(i, k) * b(j, k);
    na += a(i, k) * a(i, k);
    nb += b(j, k) * b(j, k);
  }
  return dot / ((std::sqrt(na) + 1e-12) * (std::sqrt(nb) + 1e-12));
}

// Direct summation, both orders of each positive pair.
double vc_oracle(const Mat& codes, double tau) {
  const Index n2 = codes.rows();
  double total = 0.0;
  for (Index a = 0; a < n2; ++a) {
    const Index pos = (a % 2 == 0) ? a + 1 : a - 1;
    const double num = std::exp(cos_oracle(codes, a, codes, pos) / tau);
    double den = num;
    for (Index k = 0; k < n2; ++k) {
      if (k == a || k == pos) continue;
      den += std::exp(cos_oracle(codes, a, codes, k) / tau);
    }
    total += -std::log(num / den);
  }
  return total / static_cast<double>(n2);
}

double p2set_oracle(const Mat& codes, const std::vector<AnchorSet>& levels, double tau) {
  double total = 0.0;
  for (const auto& level : levels) {
    for (Index i = 0; i < codes.rows(); ++i) {
      double den = 0.0;
      for (Index m = 0; m < level.anchors.rows(); ++m) {
        den += std::exp(cos_oracle(codes, i, level.anchors, m) / tau);
      }
      const double num = std::exp(cos_oracle(codes, i, level.anchors, level.assigned[i]) / tau);
      total += -std::log(num / den);
    }
  }
  return total / (static_cast<double>(codes.rows()) * static_cast<double>(levels.size()));
}

TEST(FrameReconstruction, ZeroForPerfectReconstruction) {
  Rng rng(1);
  const Mat x = random_mat(4, 3, rng);
  EXPECT_EQ(frame_reconstruction_loss(x, x), 0.0);
}

TEST(FrameReconstruction, UnitExample) {
  Mat v(1, 2), r(1, 2);
  v << 1, 0;
  r << 0, 0;
  EXPECT_DOUBLE_EQ(frame_reconstruction_loss(v, r), 1.0);
}

TEST(FrameReconstruction, MatchesLoopOracle) {
  Rng rng(2);
  const Mat v = random_mat(6, 5, rng);  // N=3, M=2 stacked
  const Mat r = random_mat(6, 5, rng);
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int m = 0; m < 2; ++m) {
      for (int d = 0; d < 5; ++d) {
        const double e = v(i * 2 + m, d) - r(i * 2 + m, d);
        total += e * e;
      }
    }
  }
  EXPECT_NEAR(frame_reconstruction_loss(v, r), total / 6.0, 1e-12);
  EXPECT_THROW(frame_reconstruction_loss(v, Mat(r.leftCols(4))), ShapeError);
}

TEST(FrameReconstruction, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  const Mat v = random_mat(4, 3, rng);
  const Mat r = random_mat(4, 3, rng);
  const Mat numeric = testing::numeric_gradient(
      [&](const Mat& x) { return frame_reconstruction_loss(v, x); }, r);
  EXPECT_LT(testing::relative_error(frame_reconstruction_loss_grad(v, r).grad, numeric), 1e-8);
}

TEST(ViewContrastive, SinglePairHasZeroLoss) {
  Rng rng(4);
  EXPECT_NEAR(view_contrastive_loss(random_mat(2, 5, rng), 0.3).value, 0.0, 1e-15);
}

TEST(ViewContrastive, AlignedPositivesLowerTheLoss) {
  Mat aligned(4, 4), orthogonal(4, 4);
  aligned << 1, 0, 0, 0,
             1, 0, 0, 0,
             0, 0, 1, 0,
             0, 0, 1, 0;
  orthogonal << 1, 0, 0, 0,
                0, 1, 0, 0,
                0, 0, 1, 0,
                0, 0, 0, 1;
  EXPECT_LT(view_contrastive_loss(aligned, 1.0).value, view_contrastive_loss(orthogonal, 1.0).value);
}

TEST(ViewContrastive, MatchesDirectSummation) {
  Mat codes(4, 4);
  codes << 1, 1, -1, 1,
           1, -1, -1, 1,
           -1, 1, 1, 1,
           -1, -1, 1, -1;
  EXPECT_NEAR(view_contrastive_loss(codes, 0.5).value, vc_oracle(codes, 0.5), 1e-12);
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const Mat c = random_mat(2 * (2 + t % 5), 6, rng);
    EXPECT_NEAR(view_contrastive_loss(c, 0.3).value, vc_oracle(c, 0.3), 1e-12);
  }
}

TEST(ViewContrastive, LiteralDenominatorCountsPositiveTwice) {
  Rng rng(6);
  const Mat c = random_mat(6, 4, rng);
  double total = 0.0;
  for (Index a = 0; a < 6; ++a) {
    const Index pos = a ^ 1;
    const double num = std::exp(cos_oracle(c, a, c, pos) / 0.4);
    double den = num;
    for (Index k = 0; k < 6; ++k) den += std::exp(cos_oracle(c, a, c, k) / 0.4);
    total += -std::log(num / den);
  }
  EXPECT_NEAR(view_contrastive_loss(c, 0.4, true).value, total / 6.0, 1e-12);
}

TEST(ViewContrastive, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Mat c = random_mat(6, 5, rng);
    for (bool literal : {false, true}) {
      const Mat numeric = testing::numeric_gradient(
          [&](const Mat& x) { return view_contrastive_loss(x, 0.3, literal).value; }, c);
      EXPECT_LT(testing::relative_error(view_contrastive_loss(c, 0.3, literal).grad, numeric), 1e-6);
    }
  }
}

TEST(ViewContrastive, OddCountIsContractViolation) {
  EXPECT_THROW(view_contrastive_loss(Mat::Ones(3, 2), 0.3), ContractViolation);
  EXPECT_THROW(view_contrastive_loss(Mat::Ones(2, 2), 0.0), ConfigError);
}

TEST(ViewContrastive, ZeroCodeStaysFinite) {
  Mat c = Mat::Zero(4, 3);
  c(2, 0) = 1.0;
  const auto l = view_contrastive_loss(c, 0.3);
  EXPECT_TRUE(std::isfinite(l.value));
  EXPECT_TRUE(l.grad.allFinite());
}

std::vector<AnchorSet> random_levels(Index rows, Index bits, Rng& rng) {
  std::vector<AnchorSet> levels(2);
  for (auto& level : levels) {
    level.anchors = random_signs(3, bits, rng);
    for (Index i = 0; i < rows; ++i) level.assigned.push_back(static_cast<Index>(rng() % 3));
  }
  return levels;
}

TEST(P2Set, SingleAnchorGivesZero) {
  Rng rng(7);
  AnchorSet level{random_signs(1, 4, rng), {0, 0, 0}};
  EXPECT_NEAR(p2set_loss(random_mat(3, 4, rng), {level}, 0.3).value, 0.0, 1e-15);
}

TEST(P2Set, LowTemperatureLimit) {
  Mat anchors(2, 4);
  anchors << 1, 1, 1, 1,
             -1, -1, -1, -1;
  Mat codes = anchors.topRows(1);
  AnchorSet level{anchors, {0}};
  EXPECT_LT(p2set_loss(codes, {level}, 0.01).value, 1e-50);
}

TEST(P2Set, MatchesDirectSummation) {
  Rng rng(8);
  const Mat codes = random_signs(4, 8, rng);
  const auto levels = random_levels(4, 8, rng);
  EXPECT_NEAR(p2set_loss(codes, levels, 1.0).value, p2set_oracle(codes, levels, 1.0), 1e-12);
  for (int t = 0; t < 20; ++t) {
    const Mat c = random_mat(6, 8, rng);
    const auto lv = random_levels(6, 8, rng);
    EXPECT_NEAR(p2set_loss(c, lv, 0.3).value, p2set_oracle(c, lv, 0.3), 1e-12);
  }
}

TEST(P2Set, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Mat c = random_mat(4, 6, rng);
    const auto levels = random_levels(4, 6, rng);
    const Mat numeric = testing::numeric_gradient(
        [&](const Mat& x) { return p2set_loss(x, levels, 0.3).value; }, c);
    EXPECT_LT(testing::relative_error(p2set_loss(c, levels, 0.3).grad, numeric), 1e-6);
  }
}

TEST(P2Set, MissingAssignmentIsContractViolation) {
  AnchorSet level{Mat::Ones(2, 3), {0}};
  EXPECT_THROW(p2set_loss(Mat::Ones(2, 3), {level}, 0.3), ContractViolation);
  EXPECT_THROW(p2set_loss(Mat::Ones(2, 3), {}, 0.3), ContractViolation);
}

TEST(Aggregate, Schedule) {
  LossConfig cfg;
  cfg.alpha = 0.0;
  cfg.beta = 0.0;
  EXPECT_EQ(aggregate_loss(2.5, 7.0, 9.0, cfg, Phase::kFull), 2.5);
  cfg.alpha = 0.2;
  cfg.beta = 0.01;
  EXPECT_DOUBLE_EQ(aggregate_loss(1.0, 1.0, 1.0, cfg, Phase::kFull), 1.21);
  EXPECT_DOUBLE_EQ(aggregate_loss(1.0, 1.0, 1.0, cfg, Phase::kWarmup), 1.2);
}

TEST(LossProperties, PermutationInvariantOverVideos) {
  Rng rng(9);
  const Mat codes = random_mat(8, 6, rng);
  auto levels = random_levels(8, 6, rng);
  // Swap videos 0 and 2 (rows 0,1 <-> 4,5).
  const std::vector<Index> perm{4, 5, 2, 3, 0, 1, 6, 7};
  Mat pc(8, 6);
  auto plev = levels;
  for (Index i = 0; i < 8; ++i) {
    pc.row(i) = codes.row(perm[i]);
    for (std::size_t l = 0; l < levels.size(); ++l) plev[l].assigned[i] = levels[l].assigned[perm[i]];
  }
  EXPECT_NEAR(view_contrastive_loss(codes, 0.3).value, view_contrastive_loss(pc, 0.3).value, 1e-12);
  EXPECT_NEAR(p2set_loss(codes, levels, 0.3).value, p2set_loss(pc, plev, 0.3).value, 1e-12);
  const Mat r = random_mat(8, 6, rng);
  Mat pr(8, 6);
  for (Index i = 0; i < 8; ++i) pr.row(i) = r.row(perm[i]);
  EXPECT_NEAR(frame_reconstruction_loss(codes, r), frame_reconstruction_loss(pc, pr), 1e-12);
}

TEST(LossProperties, NonNegativeAndScaleInvariant) {
  Rng rng(10);
  for (int t = 0; t < 20; ++t) {
    const Mat codes = random_signs(6, 8, rng);
    const auto levels = random_levels(6, 8, rng);
    const double vc = view_contrastive_loss(codes, 0.3).value;
    const double ps = p2set_loss(codes, levels, 0.3).value;
    EXPECT_GE(vc, 0.0);
    EXPECT_GE(ps, 0.0);
    const Mat scaled = codes * 3.5;
    // Exact up to the norm guard in the cosine.
    EXPECT_NEAR(view_contrastive_loss(scaled, 0.3).value, vc, 1e-10);
    EXPECT_NEAR(p2set_loss(scaled, levels, 0.3).value, ps, 1e-10);
  }
}

}  // namespace
}  // namespace ssvh
