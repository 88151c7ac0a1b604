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

// Minimal reverse-mode automatic differentiation over dense matrices.
//
// A Tape records every operation of one forward pass. backward() replays the
// tape in reverse, accumulating gradients into intermediate nodes and finally
// into the Param objects that were bound as leaves. A Tape is single-use:
// build it, run backward once, discard it.

#ifndef SSVH_AUTODIFF_HPP_
#define SSVH_AUTODIFF_HPP_

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "ssvh/tensor.hpp"

namespace ssvh::ad {

// A trainable tensor. `grad` accumulates across backward passes until
// zero_grad() is called.
struct Param {
  Param() = default;
  Param(std::string n, Mat v)
      : name(std::move(n)), value(std::move(v)),
        grad(Mat::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }

  std::string name;
  Mat value;
  Mat grad;
};

class Tape;

// Handle to a node on a Tape. Cheap to copy.
class Var {
 public:
  Var() = default;

  const Mat& value() const;
  // Gradient accumulated by the last backward(); zeros if none reached it.
  Mat grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  // (tape, output value, output gradient) -> accumulates into parents.
  using Backward = std::function<void(Tape&, const Mat&, const Mat&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Mat value);
  // Leaf bound to a parameter; backward() adds into p.grad.
  Var param(Param& p);
  // Leaf that records its gradient without a bound Param (used for
  // gradient checks against inputs).
  Var input(Mat value);

  Var record(Mat value, const std::vector<Var>& parents, Backward backward,
             const char* op);

  // Seeds d(root)/d(root) = 1 for a 1x1 root and propagates.
  void backward(const Var& root);

  void accumulate(const Var& v, const Mat& g);
  bool requires_grad(const Var& v) const { return nodes_[v.id_].requires_grad; }
  const Mat& value(const Var& v) const { return nodes_[v.id_].value; }
  Mat grad(const Var& v) const;

  // Op name and index of the first node holding NaN/Inf, or "" if none.
  std::string first_non_finite() const;
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool has_grad = false;
    bool requires_grad = false;
    Param* param = nullptr;
    Backward backward;
    const char* op = "";
  };
  std::deque<Node> nodes_;
};

inline const Mat& Var::value() const { return tape_->value(*this); }
inline Mat Var::grad() const { return tape_->grad(*this); }

// ---- elementwise / linear algebra ----
Var matmul(const Var& a, const Var& b);
// x * w + b, with b a 1 x out row broadcast over rows.
Var linear(const Var& x, const Var& w, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& a, double s);
// Adds a 1 x d row to every row of a.
Var add_rows(const Var& a, const Var& row);
// 1 - a.
Var one_minus(const Var& a);
Var sum(const Var& a);
// Multiplies row i of x by w(i, 0).
Var scale_rows(const Var& x, const Var& w);

// ---- activations ----
Var gelu(const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);

// Row-wise layer normalization with 1 x d gain and shift.
Var layer_norm(const Var& x, const Var& gain, const Var& shift, double eps);

// Softmax of an n x 1 column computed independently within each
// contiguous run of `block` rows.
Var block_softmax(const Var& logits, Index block);

// Scaled dot-product self-attention. q, k, v are (B*T) x d with sequences
// stacked in blocks of T rows; attention never crosses a block boundary.
Var attention(const Var& q, const Var& k, const Var& v, int heads, Index block);

// ---- row plumbing ----
Var gather_rows(const Var& x, const std::vector<Index>& rows);
// out.row(a_rows[i]) = a.row(i), out.row(b_rows[j]) = b.row(j). Every output
// row must be written exactly once.
Var merge_rows(const Var& a, const std::vector<Index>& a_rows, const Var& b,
               const std::vector<Index>& b_rows);
Var tile_rows(const Var& row, Index n);
// Mean over each contiguous block of rows: (B*T) x d -> B x d.
Var block_mean(const Var& x, Index block);

// ---- straight-through and reversal ----
// Forward sign (sign(0) = +1), backward identity.
Var sign_ste(const Var& x);
// Forward identity, backward negation.
Var gradient_reversal(const Var& x);
// Forward value `hard`, gradient routed to `soft` unchanged.
Var straight_through(const Mat& hard, const Var& soft);

// ---- losses ----
// Scalar node with a precomputed value and gradient wrt x.
Var fused_scalar(const Var& x, double value, Mat grad_x, const char* op);
// sum_i w_i * ||pred_i - target_i||^2 / norm.
Var weighted_row_sq_error(const Var& pred, const Mat& target, const Var& w,
                          double norm);

}  // namespace ssvh::ad

#endif  // SSVH_AUTODIFF_HPP_
