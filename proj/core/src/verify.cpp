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

#include "ssvh/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "json.hpp"
#include "ssvh/autodiff.hpp"
#include "ssvh/objectives.hpp"
#include "ssvh/retrieval.hpp"
#include "ssvh/sampler.hpp"
#include "ssvh/semantic_centers.hpp"
#include "ssvh/trainer.hpp"

namespace ssvh::verify {

namespace {

constexpr std::size_t kMaxReportedFailures = 5;

void record(SuiteResult& r, bool pass, double err, const std::string& what) {
  ++r.instances;
  r.worst = std::max(r.worst, err);
  if (pass) {
    ++r.passed;
  } else if (r.failures.size() < kMaxReportedFailures) {
    r.failures.push_back(what);
  }
}

std::uint32_t uniform_int(Rng& rng, std::uint32_t lo, std::uint32_t hi) {
  return std::uniform_int_distribution<std::uint32_t>(lo, hi)(rng);
}

Mat random_signs(Index rows, Index cols, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  Mat m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = coin(rng) ? 1.0 : -1.0;
  return m;
}

Mat random_normal(Index rows, Index cols, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Mat m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Central differences of a scalar function of a matrix.
Mat numeric_grad(const std::function<double(const Mat&)>& f, const Mat& x, double h = 1e-5) {
  Mat g(x.rows(), x.cols());
  Mat probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + h;
    const double up = f(probe);
    probe.data()[i] = orig - h;
    const double down = f(probe);
    probe.data()[i] = orig;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double relative_error(const Mat& analytic, const Mat& numeric) {
  const double scale = analytic.norm() + numeric.norm();
  if (scale < 1e-10) return 0.0;
  return (analytic - numeric).norm() / scale;
}

// Gradient of sum(c .* out(x)) with respect to x via the tape.
Mat tape_grad(const Mat& x, const Mat& c,
              const std::function<ad::Var(ad::Tape&, const ad::Var&)>& build) {
  ad::Tape tape;
  ad::Var in = tape.input(x);
  ad::Var out = build(tape, in);
  tape.backward(ad::sum(ad::hadamard(out, tape.constant(c))));
  return in.grad();
}

}  // namespace

std::string SuiteResult::to_json() const {
  nlohmann::ordered_json j;
  j["suite"] = suite;
  j["instances"] = instances;
  j["passed"] = passed;
  j["ok"] = ok();
  j["worst"] = worst;
  j["tolerance"] = tolerance;
  j["failures"] = failures;
  return j.dump();
}

SuiteResult voting(std::uint32_t instances, std::uint64_t seed, std::uint32_t max_bits,
                   std::uint32_t max_set) {
  if (max_bits == 0 || max_bits > kMaxCertifyBits || max_set == 0) {
    throw ConfigError("verify voting: need 1 <= max_bits <= 20 and max_set >= 1");
  }
  SuiteResult r;
  r.suite = "voting";
  for (std::uint32_t i = 0; i < instances; ++i) {
    Rng rng = make_stream(seed, {0x766f7465, i});
    const Index k = uniform_int(rng, 1, max_bits);
    const Index n = uniform_int(rng, 1, max_set);
    const CenterCertificate cert = certify_center(random_signs(n, k, rng));
    record(r, cert.is_optimal, static_cast<double>(cert.center_value - cert.optimal_value),
           "instance " + std::to_string(i) + ": vote " + std::to_string(cert.center_value) +
               " vs optimum " + std::to_string(cert.optimal_value));
  }
  return r;
}

SuiteResult grl(std::uint32_t instances, std::uint64_t seed) {
  SuiteResult r;
  r.suite = "grl";
  r.tolerance = kGrlTolerance;
  for (std::uint32_t i = 0; i < instances; ++i) {
    const std::uint64_t s = stream_seed(seed, {0x67726c, i});
    SyntheticSpec spec;
    spec.num_classes = 3;
    spec.videos_per_class = 4;
    spec.frames_per_video = 8;
    spec.feature_dim = 8;
    spec.hard_frame_count = 2;
    spec.seed = s;
    const SyntheticData data = generate_synthetic(spec);

    ExperimentConfig cfg;
    cfg.model.code_bits = 8;
    cfg.model.width = 16;
    cfg.model.heads = 2;
    cfg.model.encoder_layers = 1;
    cfg.model.decoder_layers = 1;
    cfg.centers.granularities = {2, 3};
    cfg.train.optimizer.kind = OptimizerKind::kSgd;
    cfg.train.optimizer.learning_rate = 0.05;
    cfg.train.seed = s;
    cfg.resolve_for_dataset(spec.frames_per_video, spec.feature_dim);

    std::vector<std::uint32_t> ids(data.set.count());
    for (std::uint32_t v = 0; v < data.set.count(); ++v) ids[v] = v;
    const Phase phase = i % 2 == 0 ? Phase::kWarmup : Phase::kFull;

    auto step_deltas = [&](bool disable_grl) {
      ExperimentConfig c = cfg;
      c.train.disable_grl = disable_grl;
      TrainState st = make_initial_state(c);
      if (phase == Phase::kFull) st.clusters = refresh_centers(st.model.net, data.set, ids, c.centers);
      std::vector<Mat> before;
      for (ad::Param* p : st.model.all_params()) before.push_back(p->value);
      train_step(st, data.set, ids, phase);
      std::vector<Mat> delta;
      std::size_t j = 0;
      for (ad::Param* p : st.model.all_params()) delta.push_back(p->value - before[j++]);
      return std::make_pair(delta, st.model.sampler_params().size());
    };
    const auto [with_grl, n_sampler] = step_deltas(false);
    const auto [without, unused] = step_deltas(true);
    (void)unused;

    double sampler_err = 0.0, hash_err = 0.0, sampler_norm = 0.0;
    for (std::size_t j = 0; j < with_grl.size(); ++j) {
      if (j < n_sampler) {
        sampler_err = std::max(sampler_err, (with_grl[j] + without[j]).cwiseAbs().maxCoeff());
        sampler_norm += with_grl[j].squaredNorm();
      } else {
        hash_err = std::max(hash_err, (with_grl[j] - without[j]).cwiseAbs().maxCoeff());
      }
    }
    const double err = std::max(sampler_err, hash_err);
    const bool pass = err <= kGrlTolerance && sampler_norm > 0.0;
    record(r, pass, err,
           "instance " + std::to_string(i) + ": sampler |d+ + d-| = " +
               std::to_string(sampler_err) + ", hashnet |d+ - d-| = " + std::to_string(hash_err) +
               (sampler_norm > 0.0 ? "" : ", sampler did not move"));
  }
  return r;
}

std::vector<SuiteResult> gradients(std::uint32_t instances, std::uint64_t seed) {
  SuiteResult fr, vc, p2, ste;
  fr.suite = "gradients.fr";
  vc.suite = "gradients.vc";
  p2.suite = "gradients.p2set";
  ste.suite = "gradients.ste";
  for (SuiteResult* s : {&fr, &vc, &p2, &ste}) s->tolerance = kGradientTolerance;

  for (std::uint32_t i = 0; i < instances; ++i) {
    Rng rng = make_stream(seed, {0x6772616420, i});
    const std::string tag = "instance " + std::to_string(i);

    {  // Frame reconstruction: closed form and the weighted tape op.
      const Index m = uniform_int(rng, 1, 8);
      const Index d = uniform_int(rng, 1, 10);
      const Mat orig = random_normal(m, d, rng);
      const Mat recon = random_normal(m, d, rng);
      const Mat w = random_normal(m, 1, rng).cwiseAbs();
      const LossWithGrad lg = frame_reconstruction_loss_grad(orig, recon);
      double err = relative_error(
          lg.grad, numeric_grad([&](const Mat& x) { return frame_reconstruction_loss(orig, x); },
                                recon));
      const double norm = static_cast<double>(m);
      auto weighted = [&](const Mat& pred, const Mat& wt) {
        double s = 0.0;
        for (Index r = 0; r < pred.rows(); ++r) s += wt(r, 0) * (pred.row(r) - orig.row(r)).squaredNorm();
        return s / norm;
      };
      ad::Tape tape;
      ad::Var pv = tape.input(recon);
      ad::Var wv = tape.input(w);
      tape.backward(ad::weighted_row_sq_error(pv, orig, wv, norm));
      err = std::max(err, relative_error(pv.grad(), numeric_grad([&](const Mat& x) { return weighted(x, w); }, recon)));
      err = std::max(err, relative_error(wv.grad(), numeric_grad([&](const Mat& x) { return weighted(recon, x); }, w)));
      record(fr, err <= kGradientTolerance, err, tag + ": rel err " + std::to_string(err));
    }

    {  // View contrastive, both denominator forms.
      const Index pairs = uniform_int(rng, 2, 6);
      const Index k = uniform_int(rng, 2, 16);
      const double tau = std::uniform_real_distribution<double>(0.2, 1.0)(rng);
      const bool include_pos = i % 2 == 1;
      const Mat codes = random_normal(2 * pairs, k, rng);
      const LossWithGrad lg = view_contrastive_loss(codes, tau, include_pos);
      const Mat num = numeric_grad(
          [&](const Mat& x) { return view_contrastive_loss(x, tau, include_pos).value; }, codes);
      const double err = relative_error(lg.grad, num);
      record(vc, err <= kGradientTolerance, err, tag + ": rel err " + std::to_string(err));
    }

    {  // Point-to-set contrastive over 1..3 granularities.
      const Index n = uniform_int(rng, 2, 12);
      const Index k = uniform_int(rng, 2, 16);
      const double tau = std::uniform_real_distribution<double>(0.2, 1.0)(rng);
      std::vector<AnchorSet> levels(uniform_int(rng, 1, 3));
      for (AnchorSet& lv : levels) {
        const Index a = uniform_int(rng, 2, 6);
        lv.anchors = random_signs(a, k, rng);
        for (Index r = 0; r < n; ++r) lv.assigned.push_back(uniform_int(rng, 0, static_cast<std::uint32_t>(a - 1)));
      }
      const Mat codes = random_normal(n, k, rng);
      const LossWithGrad lg = p2set_loss(codes, levels, tau);
      const Mat num =
          numeric_grad([&](const Mat& x) { return p2set_loss(x, levels, tau).value; }, codes);
      const double err = relative_error(lg.grad, num);
      record(p2, err <= kGradientTolerance, err, tag + ": rel err " + std::to_string(err));
    }

    {  // Straight-through soft paths: hard TopK selection (with and without
       // reversal) and the sign of pooled tanh codes.
      const Index videos = uniform_int(rng, 1, 3);
      const Index frames = uniform_int(rng, 3, 8);
      SamplerConfig sc;
      sc.drop_count = uniform_int(rng, 1, static_cast<std::uint32_t>(frames - 1));
      sc.delta = std::uniform_real_distribution<double>(0.1, 1.0)(rng);
      const Mat scores = random_normal(videos * frames, 1, rng);
      Mat gumbel(videos * frames, 1);
      const auto g = gumbel_noise(static_cast<std::size_t>(gumbel.size()), sc.epsilon, rng);
      std::copy(g.begin(), g.end(), gumbel.data());
      const Mat c = random_normal(videos * frames, 1, rng);
      auto soft = [&](const Mat& s) {
        ad::Tape t;
        const Mat p = ad::block_softmax(t.constant(s + sc.delta * gumbel), frames).value();
        return c.cwiseProduct(p).sum();
      };
      const Mat num = numeric_grad(soft, scores);
      auto select = [&](bool reverse) {
        return tape_grad(scores, c, [&](ad::Tape&, const ad::Var& s) {
          ad::Var y = select_batch(s, gumbel, static_cast<std::uint32_t>(frames), sc).selection;
          return reverse ? ad::gradient_reversal(y) : y;
        });
      };
      double err = relative_error(select(false), num);
      err = std::max(err, relative_error(select(true), -num));

      const Index t = uniform_int(rng, 1, 6);
      const Index k = uniform_int(rng, 2, 12);
      const Mat z = random_normal(videos * t, k, rng);
      const Mat ck = random_normal(videos, k, rng);
      auto pooled = [&](const Mat& x) {
        ad::Tape tp;
        return ck.cwiseProduct(ad::block_mean(ad::tanh(tp.constant(x)), t).value()).sum();
      };
      const Mat hash_grad = tape_grad(z, ck, [&](ad::Tape&, const ad::Var& x) { return hash(x, t).codes; });
      err = std::max(err, relative_error(hash_grad, numeric_grad(pooled, z)));
      record(ste, err <= kGradientTolerance, err, tag + ": rel err " + std::to_string(err));
    }
  }
  return {fr, vc, p2, ste};
}

namespace {

struct NaiveMetrics {
  std::map<std::uint32_t, double> map_at;
  double gmap = 0.0;
  std::vector<PrPoint> pr;
};

// Straightforward re-derivation from unpacked +-1 vectors.
NaiveMetrics naive_metrics(const Mat& q, const std::vector<std::uint32_t>& qids, const Mat& g,
                           const std::vector<std::uint32_t>& gids,
                           const std::vector<std::uint32_t>& labels, bool exclude_self) {
  const double k = static_cast<double>(q.cols());
  NaiveMetrics out;
  std::vector<double> within(q.cols() + 1, 0.0), relevant_within(q.cols() + 1, 0.0);
  double relevant_total = 0.0;
  std::map<std::uint32_t, double> ap_sum;
  for (Index i = 0; i < q.rows(); ++i) {
    std::vector<std::pair<double, Index>> order;
    for (Index j = 0; j < g.rows(); ++j) {
      if (exclude_self && gids[j] == qids[i]) continue;
      order.emplace_back((k - q.row(i).dot(g.row(j))) / 2.0, j);
    }
    std::sort(order.begin(), order.end());
    std::vector<int> rel;
    for (const auto& [d, j] : order) rel.push_back(labels[gids[j]] == labels[qids[i]] ? 1 : 0);
    const double total = std::count(rel.begin(), rel.end(), 1);
    for (std::uint32_t n : gmap_cutoffs()) {
      double hits = 0.0, acc = 0.0;
      for (std::size_t r = 0; r < rel.size() && r < n; ++r) {
        if (rel[r]) {
          hits += 1.0;
          acc += hits / static_cast<double>(r + 1);
        }
      }
      const double denom = std::min<double>(n, total);
      ap_sum[n] += denom > 0.0 ? acc / denom : 0.0;
    }
    for (std::size_t r = 0; r < order.size(); ++r) {
      for (Index radius = 0; radius <= q.cols(); ++radius) {
        if (order[r].first <= static_cast<double>(radius)) {
          within[radius] += 1.0;
          relevant_within[radius] += rel[r];
        }
      }
      relevant_total += rel[r];
    }
  }
  double sq = 0.0;
  for (std::uint32_t n : gmap_cutoffs()) {
    out.map_at[n] = q.rows() > 0 ? ap_sum[n] / static_cast<double>(q.rows()) : 0.0;
    sq += out.map_at[n] * out.map_at[n];
  }
  out.gmap = std::sqrt(sq);
  for (Index radius = 0; radius <= q.cols(); ++radius) {
    PrPoint p;
    p.radius = static_cast<std::uint32_t>(radius);
    p.precision = within[radius] > 0.0 ? relevant_within[radius] / within[radius] : 1.0;
    p.recall = relevant_total > 0.0 ? relevant_within[radius] / relevant_total : 1.0;
    out.pr.push_back(p);
  }
  return out;
}

}  // namespace

SuiteResult metrics(std::uint32_t instances, std::uint64_t seed, std::uint32_t max_gallery) {
  SuiteResult r;
  r.suite = "metrics";
  r.tolerance = kMetricTolerance;
  static const std::uint32_t kBits[] = {3, 4, 8, 16, 33, 64, 70};
  for (std::uint32_t i = 0; i < instances; ++i) {
    Rng rng = make_stream(seed, {0x6d6574, i});
    const std::uint32_t k = kBits[uniform_int(rng, 0, 6)];
    const std::uint32_t ng = uniform_int(rng, 1, max_gallery);
    const std::uint32_t nq = uniform_int(rng, 1, 30);
    const std::uint32_t classes = uniform_int(rng, 1, 8);
    const bool overlap = i % 2 == 0;  // queries drawn from the gallery ids

    std::vector<std::uint32_t> gids(ng), qids(nq);
    for (std::uint32_t j = 0; j < ng; ++j) gids[j] = j;
    for (std::uint32_t j = 0; j < nq; ++j) qids[j] = overlap ? uniform_int(rng, 0, ng - 1) : ng + j;
    std::vector<std::uint32_t> labels(ng + nq);
    for (auto& l : labels) l = uniform_int(rng, 0, classes - 1);
    const Mat g = random_signs(ng, k, rng);
    Mat q = random_signs(nq, k, rng);
    if (overlap) {
      for (std::uint32_t j = 0; j < nq; ++j) q.row(j) = g.row(qids[j]);
    }

    const RetrievalReport rep = evaluate(CodeTable::pack(q, qids), CodeTable::pack(g, gids), labels);
    const NaiveMetrics nv = naive_metrics(q, qids, g, gids, labels, true);
    double err = std::abs(rep.gmap - nv.gmap);
    for (std::uint32_t n : gmap_cutoffs()) err = std::max(err, std::abs(rep.map_at.at(n) - nv.map_at.at(n)));
    if (rep.pr.size() != nv.pr.size()) {
      err = 1.0;
    } else {
      for (std::size_t p = 0; p < nv.pr.size(); ++p) {
        err = std::max({err, std::abs(rep.pr[p].precision - nv.pr[p].precision),
                        std::abs(rep.pr[p].recall - nv.pr[p].recall)});
      }
    }
    bool pass = err <= kMetricTolerance;
    std::string what = "instance " + std::to_string(i) + ": max deviation " + std::to_string(err);
    if (i == 0) {
      std::map<std::uint32_t, double> flat;
      for (std::uint32_t n : gmap_cutoffs()) flat[n] = 0.3;
      const double v = gmap(flat);
      if (std::abs(v - 0.7348) > 1e-4 || std::abs(v - std::sqrt(0.54)) > 1e-12) {
        pass = false;
        what += "; gmap(0.3 x 6) = " + std::to_string(v);
      }
    }
    record(r, pass, err, what);
  }
  return r;
}

std::vector<SuiteResult> run(const std::string& suite, std::uint32_t instances,
                             std::uint64_t seed) {
  std::vector<SuiteResult> out;
  const bool all = suite == "all";
  if (all || suite == "voting") out.push_back(voting(instances, seed));
  if (all || suite == "grl") out.push_back(grl(instances, seed));
  if (all || suite == "ste" || suite == "gradients") {
    for (auto& s : gradients(instances, seed)) out.push_back(std::move(s));
  }
  if (all || suite == "metrics") out.push_back(metrics(instances, seed));
  if (out.empty()) {
    throw ConfigError("unknown verify suite \"" + suite + "\" (voting, grl, ste, metrics, all)");
  }
  return out;
}

}  // namespace ssvh::verify
