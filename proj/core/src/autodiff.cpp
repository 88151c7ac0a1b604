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

#include "ssvh/autodiff.hpp"

#include <cmath>
#include <memory>
#include <numbers>

namespace ssvh::ad {

Var Tape::constant(Mat value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, nullptr, {}, "constant"});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Param& p) {
  nodes_.push_back(Node{p.value, {}, false, true, &p, {}, "param"});
  return Var(this, nodes_.size() - 1);
}

Var Tape::input(Mat value) {
  nodes_.push_back(Node{std::move(value), {}, false, true, nullptr, {}, "input"});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Mat value, const std::vector<Var>& parents, Backward backward,
                 const char* op) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape_ != this) throw ContractViolation("ad: mixing vars of different tapes");
    needs = needs || nodes_[p.id_].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, false, needs, nullptr,
                        needs ? std::move(backward) : Backward{}, op});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(const Var& v, const Mat& g) {
  Node& n = nodes_[v.id_];
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

Mat Tape::grad(const Var& v) const {
  const Node& n = nodes_[v.id_];
  if (!n.has_grad) return Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(const Var& root) {
  const Node& r = nodes_[root.id_];
  if (r.value.rows() != 1 || r.value.cols() != 1) {
    throw ShapeError("ad: backward root must be a scalar");
  }
  accumulate(root, Mat::Ones(1, 1));
  for (std::size_t i = root.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.requires_grad) continue;
    if (n.param != nullptr) n.param->grad += n.grad;
    if (n.backward) n.backward(*this, n.value, n.grad);
  }
}

std::string Tape::first_non_finite() const {
  // Leaves are reported by name; the first computed node is what the user
  // usually needs to locate the failure.
  std::string leaf;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.value.allFinite()) continue;
    if (n.backward == nullptr && (n.param != nullptr || std::string(n.op) == "constant")) {
      if (leaf.empty()) leaf = n.param != nullptr ? "param " + n.param->name : std::string("constant #") + std::to_string(i);
      continue;
    }
    std::string out = std::string(n.op) + " #" + std::to_string(i);
    if (!leaf.empty()) out += " (input " + leaf + " is non-finite)";
    return out;
  }
  return leaf;
}

namespace {

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw ContractViolation("ad: use of an empty Var");
  return *a.tape();
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) throw ShapeError("ad::matmul: inner dimensions differ");
  Mat out = a.value() * b.value();
  return tape_of(a).record(
      std::move(out), {a, b},
      [a, b](Tape& t, const Mat&, const Mat& g) {
        if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
        if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
      },
      "matmul");
}

Var linear(const Var& x, const Var& w, const Var& b) {
  if (x.cols() != w.rows() || b.rows() != 1 || b.cols() != w.cols()) {
    throw ShapeError("ad::linear: shapes do not match");
  }
  Mat out = x.value() * w.value();
  out.rowwise() += b.value().row(0);
  return tape_of(x).record(
      std::move(out), {x, w, b},
      [x, w, b](Tape& t, const Mat&, const Mat& g) {
        if (t.requires_grad(x)) t.accumulate(x, g * w.value().transpose());
        if (t.requires_grad(w)) t.accumulate(w, x.value().transpose() * g);
        if (t.requires_grad(b)) t.accumulate(b, g.colwise().sum());
      },
      "linear");
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "ad::add");
  return tape_of(a).record(
      a.value() + b.value(), {a, b},
      [a, b](Tape& t, const Mat&, const Mat& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
      },
      "add");
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "ad::sub");
  return tape_of(a).record(
      a.value() - b.value(), {a, b},
      [a, b](Tape& t, const Mat&, const Mat& g) {
        t.accumulate(a, g);
        if (t.requires_grad(b)) t.accumulate(b, -g);
      },
      "sub");
}

Var hadamard(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "ad::hadamard");
  return tape_of(a).record(
      a.value().cwiseProduct(b.value()), {a, b},
      [a, b](Tape& t, const Mat&, const Mat& g) {
        if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
        if (t.requires_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
      },
      "hadamard");
}

Var scale(const Var& a, double s) {
  return tape_of(a).record(
      a.value() * s, {a},
      [a, s](Tape& t, const Mat&, const Mat& g) { t.accumulate(a, g * s); },
      "scale");
}

Var add_rows(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("ad::add_rows: row width differs");
  }
  Mat out = a.value();
  out.rowwise() += row.value().row(0);
  return tape_of(a).record(
      std::move(out), {a, row},
      [a, row](Tape& t, const Mat&, const Mat& g) {
        t.accumulate(a, g);
        if (t.requires_grad(row)) t.accumulate(row, g.colwise().sum());
      },
      "add_rows");
}

Var one_minus(const Var& a) {
  Mat out = (1.0 - a.value().array()).matrix();
  return tape_of(a).record(
      std::move(out), {a},
      [a](Tape& t, const Mat&, const Mat& g) { t.accumulate(a, -g); },
      "one_minus");
}

Var sum(const Var& a) {
  Mat out(1, 1);
  out(0, 0) = a.value().sum();
  return tape_of(a).record(
      std::move(out), {a},
      [a](Tape& t, const Mat&, const Mat& g) {
        t.accumulate(a, Mat::Constant(a.rows(), a.cols(), g(0, 0)));
      },
      "sum");
}

Var scale_rows(const Var& x, const Var& w) {
  if (w.cols() != 1 || w.rows() != x.rows()) {
    throw ShapeError("ad::scale_rows: weight column length differs");
  }
  Mat out = x.value();
  for (Index i = 0; i < out.rows(); ++i) out.row(i) *= w.value()(i, 0);
  return tape_of(x).record(
      std::move(out), {x, w},
      [x, w](Tape& t, const Mat&, const Mat& g) {
        if (t.requires_grad(x)) {
          Mat gx = g;
          for (Index i = 0; i < gx.rows(); ++i) gx.row(i) *= w.value()(i, 0);
          t.accumulate(x, gx);
        }
        if (t.requires_grad(w)) {
          Mat gw = g.cwiseProduct(x.value()).rowwise().sum();
          t.accumulate(w, gw);
        }
      },
      "scale_rows");
}

constexpr double kInvSqrt2 = 0.70710678118654752440;

Var gelu(const Var& a) {
  // The normal CDF is kept for the backward pass; erf dominates the cost.
  auto cdf = std::make_shared<Mat>(a.value().unaryExpr(
      [](double x) { return 0.5 * (1.0 + std::erf(x * kInvSqrt2)); }));
  Mat out = a.value().cwiseProduct(*cdf);
  return tape_of(a).record(
      std::move(out), {a},
      [a, cdf](Tape& t, const Mat&, const Mat& g) {
        const double inv_sqrt_2pi = std::numbers::inv_sqrtpi * kInvSqrt2;
        const auto x = a.value().array();
        Mat d = (x * inv_sqrt_2pi * (-0.5 * x.square()).exp()).matrix();
        d += *cdf;
        t.accumulate(a, g.cwiseProduct(d));
      },
      "gelu");
}

Var sigmoid(const Var& a) {
  Mat out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return tape_of(a).record(
      std::move(out), {a},
      [a](Tape& t, const Mat& y, const Mat& g) {
        t.accumulate(a, (g.array() * y.array() * (1.0 - y.array())).matrix());
      },
      "sigmoid");
}

Var tanh(const Var& a) {
  Mat out = a.value().array().tanh().matrix();
  return tape_of(a).record(
      std::move(out), {a},
      [a](Tape& t, const Mat& y, const Mat& g) {
        t.accumulate(a, (g.array() * (1.0 - y.array().square())).matrix());
      },
      "tanh");
}

Var layer_norm(const Var& x, const Var& gain, const Var& shift, double eps) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (gain.rows() != 1 || gain.cols() != d || shift.rows() != 1 || shift.cols() != d) {
    throw ShapeError("ad::layer_norm: gain/shift width differs");
  }
  auto xhat = std::make_shared<Mat>(n, d);
  auto inv_std = std::make_shared<Eigen::VectorXd>(n);
  const Mat& xv = x.value();
  for (Index i = 0; i < n; ++i) {
    const double mean = xv.row(i).mean();
    const double var = (xv.row(i).array() - mean).square().mean();
    (*inv_std)(i) = 1.0 / std::sqrt(var + eps);
    xhat->row(i) = (xv.row(i).array() - mean) * (*inv_std)(i);
  }
  Mat out = xhat->array().rowwise() * gain.value().row(0).array();
  out.rowwise() += shift.value().row(0);
  return tape_of(x).record(
      std::move(out), {x, gain, shift},
      [x, gain, shift, xhat, inv_std](Tape& t, const Mat&, const Mat& g) {
        if (t.requires_grad(gain)) t.accumulate(gain, g.cwiseProduct(*xhat).colwise().sum());
        if (t.requires_grad(shift)) t.accumulate(shift, g.colwise().sum());
        if (t.requires_grad(x)) {
          Mat dxhat = g.array().rowwise() * gain.value().row(0).array();
          Mat dx(dxhat.rows(), dxhat.cols());
          for (Index i = 0; i < dxhat.rows(); ++i) {
            const double m1 = dxhat.row(i).mean();
            const double m2 = dxhat.row(i).dot(xhat->row(i)) / static_cast<double>(dxhat.cols());
            dx.row(i) = (*inv_std)(i) *
                        (dxhat.row(i).array() - m1 - xhat->row(i).array() * m2);
          }
          t.accumulate(x, dx);
        }
      },
      "layer_norm");
}

Var block_softmax(const Var& logits, Index block) {
  const Mat& z = logits.value();
  if (z.cols() != 1 || block <= 0 || z.rows() % block != 0) {
    throw ShapeError("ad::block_softmax: expected an n x 1 column of whole blocks");
  }
  Mat out(z.rows(), 1);
  for (Index s = 0; s < z.rows(); s += block) {
    auto seg = z.block(s, 0, block, 1).array();
    const double mx = seg.maxCoeff();
    auto e = (seg - mx).exp();
    out.block(s, 0, block, 1) = (e / e.sum()).matrix();
  }
  return tape_of(logits).record(
      std::move(out), {logits},
      [logits, block](Tape& t, const Mat& p, const Mat& g) {
        Mat gz(p.rows(), 1);
        for (Index s = 0; s < p.rows(); s += block) {
          auto ps = p.block(s, 0, block, 1).array();
          auto gs = g.block(s, 0, block, 1).array();
          const double dot = (ps * gs).sum();
          gz.block(s, 0, block, 1) = (ps * (gs - dot)).matrix();
        }
        t.accumulate(logits, gz);
      },
      "block_softmax");
}

Var attention(const Var& q, const Var& k, const Var& v, int heads, Index block) {
  const Index n = q.rows();
  const Index d = q.cols();
  if (heads <= 0 || d % heads != 0 || block <= 0 || n % block != 0) {
    throw ShapeError("ad::attention: width/heads or rows/block mismatch");
  }
  require_same_shape(q.value(), k.value(), "ad::attention k");
  require_same_shape(q.value(), v.value(), "ad::attention v");
  const Index dh = d / heads;
  const Index nblocks = n / block;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  auto probs = std::make_shared<std::vector<Mat>>(static_cast<std::size_t>(nblocks * heads));
  Mat out(n, d);
  const Mat& qv = q.value();
  const Mat& kv = k.value();
  const Mat& vv = v.value();
  for (Index b = 0; b < nblocks; ++b) {
    for (int h = 0; h < heads; ++h) {
      auto qb = qv.block(b * block, h * dh, block, dh);
      auto kb = kv.block(b * block, h * dh, block, dh);
      auto vb = vv.block(b * block, h * dh, block, dh);
      Mat s = (qb * kb.transpose()) * inv_scale;
      for (Index r = 0; r < block; ++r) {
        const double mx = s.row(r).maxCoeff();
        s.row(r) = (s.row(r).array() - mx).exp().matrix();
        s.row(r) /= s.row(r).sum();
      }
      out.block(b * block, h * dh, block, dh).noalias() = s * vb;
      (*probs)[static_cast<std::size_t>(b * heads + h)] = std::move(s);
    }
  }
  return tape_of(q).record(
      std::move(out), {q, k, v},
      [q, k, v, heads, block, dh, nblocks, inv_scale, probs](Tape& t, const Mat&,
                                                             const Mat& g) {
        const Mat& qv = q.value();
        const Mat& kv = k.value();
        const Mat& vv = v.value();
        Mat gq = Mat::Zero(qv.rows(), qv.cols());
        Mat gk = Mat::Zero(qv.rows(), qv.cols());
        Mat gv = Mat::Zero(qv.rows(), qv.cols());
        for (Index b = 0; b < nblocks; ++b) {
          for (int h = 0; h < heads; ++h) {
            const Mat& p = (*probs)[static_cast<std::size_t>(b * heads + h)];
            auto go = g.block(b * block, h * dh, block, dh);
            auto qb = qv.block(b * block, h * dh, block, dh);
            auto kb = kv.block(b * block, h * dh, block, dh);
            auto vb = vv.block(b * block, h * dh, block, dh);
            gv.block(b * block, h * dh, block, dh).noalias() = p.transpose() * go;
            Mat dp = go * vb.transpose();
            Mat ds = p.cwiseProduct(dp);
            Eigen::VectorXd rs = ds.rowwise().sum();
            ds -= p.cwiseProduct(rs.replicate(1, block));
            ds *= inv_scale;
            gq.block(b * block, h * dh, block, dh).noalias() = ds * kb;
            gk.block(b * block, h * dh, block, dh).noalias() = ds.transpose() * qb;
          }
        }
        t.accumulate(q, gq);
        t.accumulate(k, gk);
        t.accumulate(v, gv);
      },
      "attention");
}

Var gather_rows(const Var& x, const std::vector<Index>& rows) {
  const Mat& xv = x.value();
  Mat out(static_cast<Index>(rows.size()), xv.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= xv.rows()) throw ShapeError("ad::gather_rows: index out of range");
    out.row(static_cast<Index>(i)) = xv.row(rows[i]);
  }
  return tape_of(x).record(
      std::move(out), {x},
      [x, rows](Tape& t, const Mat&, const Mat& g) {
        Mat gx = Mat::Zero(x.rows(), x.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) gx.row(rows[i]) += g.row(static_cast<Index>(i));
        t.accumulate(x, gx);
      },
      "gather_rows");
}

Var merge_rows(const Var& a, const std::vector<Index>& a_rows, const Var& b,
               const std::vector<Index>& b_rows) {
  if (a.cols() != b.cols() || static_cast<Index>(a_rows.size()) != a.rows() ||
      static_cast<Index>(b_rows.size()) != b.rows()) {
    throw ShapeError("ad::merge_rows: index lists do not match inputs");
  }
  const Index n = a.rows() + b.rows();
  Mat out(n, a.cols());
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  auto place = [&](const Mat& src, const std::vector<Index>& idx) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] < 0 || idx[i] >= n || seen[static_cast<std::size_t>(idx[i])]) {
        throw ContractViolation("ad::merge_rows: rows must form a partition");
      }
      seen[static_cast<std::size_t>(idx[i])] = 1;
      out.row(idx[i]) = src.row(static_cast<Index>(i));
    }
  };
  place(a.value(), a_rows);
  place(b.value(), b_rows);
  return tape_of(a).record(
      std::move(out), {a, b},
      [a, b, a_rows, b_rows](Tape& t, const Mat&, const Mat& g) {
        if (t.requires_grad(a)) {
          Mat ga(a.rows(), a.cols());
          for (std::size_t i = 0; i < a_rows.size(); ++i) ga.row(static_cast<Index>(i)) = g.row(a_rows[i]);
          t.accumulate(a, ga);
        }
        if (t.requires_grad(b)) {
          Mat gb(b.rows(), b.cols());
          for (std::size_t i = 0; i < b_rows.size(); ++i) gb.row(static_cast<Index>(i)) = g.row(b_rows[i]);
          t.accumulate(b, gb);
        }
      },
      "merge_rows");
}

Var tile_rows(const Var& row, Index n) {
  if (row.rows() != 1) throw ShapeError("ad::tile_rows: expected a single row");
  Mat out = row.value().replicate(n, 1);
  return tape_of(row).record(
      std::move(out), {row},
      [row](Tape& t, const Mat&, const Mat& g) { t.accumulate(row, g.colwise().sum()); },
      "tile_rows");
}

Var block_mean(const Var& x, Index block) {
  const Mat& xv = x.value();
  if (block <= 0 || xv.rows() % block != 0) {
    throw ShapeError("ad::block_mean: rows are not a whole number of blocks");
  }
  const Index nb = xv.rows() / block;
  Mat out(nb, xv.cols());
  for (Index b = 0; b < nb; ++b) {
    out.row(b) = xv.block(b * block, 0, block, xv.cols()).colwise().sum() /
                 static_cast<double>(block);
  }
  return tape_of(x).record(
      std::move(out), {x},
      [x, block, nb](Tape& t, const Mat&, const Mat& g) {
        Mat gx(x.rows(), x.cols());
        for (Index b = 0; b < nb; ++b) {
          gx.block(b * block, 0, block, gx.cols()) =
              (g.row(b) / static_cast<double>(block)).replicate(block, 1);
        }
        t.accumulate(x, gx);
      },
      "block_mean");
}

Var sign_ste(const Var& x) {
  Mat out = x.value().unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
  return tape_of(x).record(
      std::move(out), {x},
      [x](Tape& t, const Mat&, const Mat& g) { t.accumulate(x, g); }, "sign_ste");
}

Var gradient_reversal(const Var& x) {
  return tape_of(x).record(
      x.value(), {x},
      [x](Tape& t, const Mat&, const Mat& g) { t.accumulate(x, -g); },
      "gradient_reversal");
}

Var straight_through(const Mat& hard, const Var& soft) {
  require_same_shape(soft.value(), hard, "ad::straight_through");
  return tape_of(soft).record(
      hard, {soft},
      [soft](Tape& t, const Mat&, const Mat& g) { t.accumulate(soft, g); },
      "straight_through");
}

Var fused_scalar(const Var& x, double value, Mat grad_x, const char* op) {
  require_same_shape(x.value(), grad_x, "ad::fused_scalar");
  Mat out(1, 1);
  out(0, 0) = value;
  return tape_of(x).record(
      std::move(out), {x},
      [x, gx = std::move(grad_x)](Tape& t, const Mat&, const Mat& g) {
        t.accumulate(x, gx * g(0, 0));
      },
      op);
}

Var weighted_row_sq_error(const Var& pred, const Mat& target, const Var& w,
                          double norm) {
  require_same_shape(pred.value(), target, "ad::weighted_row_sq_error");
  if (w.cols() != 1 || w.rows() != target.rows()) {
    throw ShapeError("ad::weighted_row_sq_error: weight column length differs");
  }
  Mat diff = pred.value() - target;
  Eigen::VectorXd row_err = diff.rowwise().squaredNorm();
  Mat out(1, 1);
  out(0, 0) = w.value().col(0).dot(row_err) / norm;
  auto saved = std::make_shared<Mat>(std::move(diff));
  return tape_of(pred).record(
      std::move(out), {pred, w},
      [pred, w, norm, saved, row_err](Tape& t, const Mat&, const Mat& g) {
        const double s = g(0, 0) / norm;
        if (t.requires_grad(pred)) {
          Mat gp = *saved;
          for (Index i = 0; i < gp.rows(); ++i) gp.row(i) *= 2.0 * s * w.value()(i, 0);
          t.accumulate(pred, gp);
        }
        if (t.requires_grad(w)) t.accumulate(w, Mat(row_err * s));
      },
      "weighted_row_sq_error");
}

}  // namespace ssvh::ad
