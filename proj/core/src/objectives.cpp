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

#include <cmath>
#include <string>

namespace ssvh {

void LossConfig::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("loss.alpha must be >= 0");
  if (!(beta >= 0.0)) throw ConfigError("loss.beta must be >= 0");
  if (!(tau1 > 0.0) || !(tau2 > 0.0)) throw ConfigError("loss temperatures must be > 0");
}

const char* phase_name(Phase phase) { return phase == Phase::kWarmup ? "warmup" : "full"; }

double frame_reconstruction_loss(const Mat& originals, const Mat& reconstructions) {
  require_same_shape(originals, reconstructions, "frame_reconstruction_loss");
  if (originals.rows() == 0) return 0.0;
  return (originals - reconstructions).squaredNorm() / static_cast<double>(originals.rows());
}

LossWithGrad frame_reconstruction_loss_grad(const Mat& originals, const Mat& reconstructions) {
  LossWithGrad out;
  out.value = frame_reconstruction_loss(originals, reconstructions);
  out.grad = originals.rows() == 0
                 ? Mat(reconstructions)
                 : Mat(2.0 * (reconstructions - originals) / static_cast<double>(originals.rows()));
  return out;
}

double cosine(const Eigen::Ref<const Eigen::RowVectorXd>& a,
              const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  return a.dot(b) / ((a.norm() + kCosineNormEps) * (b.norm() + kCosineNormEps));
}

namespace {

// Pairwise cosine table shared by both contrastive losses, with the pieces
// needed to push dL/dcos back onto the rows.
struct CosineRows {
  explicit CosineRows(const Mat& x) : x(x), norm(x.rows()), padded(x.rows()) {
    for (Index i = 0; i < x.rows(); ++i) {
      norm(i) = x.row(i).norm();
      padded(i) = norm(i) + kCosineNormEps;
    }
  }

  double cos(Index a, const Eigen::Ref<const Eigen::RowVectorXd>& other, double other_padded) const {
    return x.row(a).dot(other) / (padded(a) * other_padded);
  }

  // d cos(x_a, y) / d x_a for a fixed y with padded norm y_padded.
  Eigen::RowVectorXd dcos(Index a, const Eigen::Ref<const Eigen::RowVectorXd>& y,
                          double y_padded, double c) const {
    Eigen::RowVectorXd g = y / (padded(a) * y_padded);
    if (norm(a) > 0.0) g -= (c / (padded(a) * norm(a))) * x.row(a);
    return g;
  }

  const Mat& x;
  Eigen::VectorXd norm;
  Eigen::VectorXd padded;
};

}  // namespace

LossWithGrad view_contrastive_loss(const Mat& codes, double tau,
                                   bool include_positive_in_denominator) {
  const Index n2 = codes.rows();
  if (n2 < 2 || n2 % 2 != 0) {
    throw ContractViolation("view_contrastive_loss: need an even number (>= 2) of view codes");
  }
  if (!(tau > 0.0)) throw ConfigError("view_contrastive_loss: tau must be > 0");
  LossWithGrad out;
  out.grad = Mat::Zero(n2, codes.cols());
  CosineRows rows(codes);
  Mat sim(n2, n2);
  for (Index a = 0; a < n2; ++a) {
    for (Index b = 0; b < n2; ++b) sim(a, b) = rows.cos(a, codes.row(b), rows.padded(b));
  }
  // dL/dsim, accumulated row by row.
  Mat dsim = Mat::Zero(n2, n2);
  Eigen::VectorXd weight(n2);
  double total = 0.0;
  for (Index a = 0; a < n2; ++a) {
    const Index pos = a ^ 1;
    // Multiplicity of each exp(sim(a, k) / tau) in the denominator.
    for (Index k = 0; k < n2; ++k) {
      if (include_positive_in_denominator) {
        weight(k) = k == pos ? 2.0 : 1.0;
      } else {
        weight(k) = (k == pos) ? 1.0 : (k == a ? 0.0 : 1.0);
      }
    }
    double mx = -INFINITY;
    for (Index k = 0; k < n2; ++k) {
      if (weight(k) > 0.0) mx = std::max(mx, sim(a, k) / tau);
    }
    double z = 0.0;
    for (Index k = 0; k < n2; ++k) {
      if (weight(k) > 0.0) z += weight(k) * std::exp(sim(a, k) / tau - mx);
    }
    total += -(sim(a, pos) / tau) + mx + std::log(z);
    for (Index k = 0; k < n2; ++k) {
      if (weight(k) > 0.0) dsim(a, k) += weight(k) * std::exp(sim(a, k) / tau - mx) / (z * tau);
    }
    dsim(a, pos) -= 1.0 / tau;
  }
  const double norm = 1.0 / static_cast<double>(n2);
  out.value = total * norm;
  // sim(a, b) depends on both rows, so push each entry to both ends.
  for (Index a = 0; a < n2; ++a) {
    for (Index b = 0; b < n2; ++b) {
      const double c = dsim(a, b) * norm;
      if (c == 0.0) continue;
      out.grad.row(a) += c * rows.dcos(a, codes.row(b), rows.padded(b), sim(a, b));
      out.grad.row(b) += c * rows.dcos(b, codes.row(a), rows.padded(a), sim(a, b));
    }
  }
  return out;
}

LossWithGrad p2set_loss(const Mat& codes, const std::vector<AnchorSet>& levels, double tau) {
  if (levels.empty()) throw ContractViolation("p2set_loss: no clustering granularities");
  if (!(tau > 0.0)) throw ConfigError("p2set_loss: tau must be > 0");
  const Index n = codes.rows();
  LossWithGrad out;
  out.grad = Mat::Zero(n, codes.cols());
  if (n == 0) return out;
  CosineRows rows(codes);
  const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(levels.size()));
  double total = 0.0;
  for (const AnchorSet& level : levels) {
    const Mat& anchors = level.anchors;
    if (anchors.rows() == 0 || anchors.cols() != codes.cols()) {
      throw ShapeError("p2set_loss: anchors must be non-empty K-vectors");
    }
    if (static_cast<Index>(level.assigned.size()) != n) {
      throw ContractViolation("p2set_loss: every code needs an assigned cluster (refresh centers first)");
    }
    Eigen::VectorXd padded(anchors.rows());
    for (Index m = 0; m < anchors.rows(); ++m) padded(m) = anchors.row(m).norm() + kCosineNormEps;
    Eigen::VectorXd s(anchors.rows());
    for (Index i = 0; i < n; ++i) {
      const Index c = level.assigned[static_cast<std::size_t>(i)];
      if (c < 0 || c >= anchors.rows()) {
        throw ContractViolation("p2set_loss: assigned anchor index out of range");
      }
      for (Index m = 0; m < anchors.rows(); ++m) s(m) = rows.cos(i, anchors.row(m), padded(m)) / tau;
      const double mx = s.maxCoeff();
      Eigen::VectorXd e = (s.array() - mx).exp();
      const double z = e.sum();
      total += -(s(c) - mx - std::log(z));
      for (Index m = 0; m < anchors.rows(); ++m) {
        const double coeff = (e(m) / z - (m == c ? 1.0 : 0.0)) / tau * norm;
        if (coeff == 0.0) continue;
        out.grad.row(i) += coeff * rows.dcos(i, anchors.row(m), padded(m), s(m) * tau);
      }
    }
  }
  out.value = total * norm;
  return out;
}

double aggregate_loss(double l_fr, double l_vc, double l_p2set, const LossConfig& config,
                      Phase phase) {
  double total = l_fr + config.alpha * l_vc;
  if (phase == Phase::kFull) total += config.beta * l_p2set;
  return total;
}

}  // namespace ssvh
