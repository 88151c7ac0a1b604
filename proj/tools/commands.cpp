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

#include "commands.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ssvh/checkpoint.hpp"
#include "ssvh/retrieval.hpp"
#include "ssvh/trainer.hpp"
#include "ssvh/verify.hpp"

namespace ssvh::cli {

namespace fs = std::filesystem;

ExperimentConfig effective_config(const GlobalOptions& g) {
  ExperimentConfig cfg = g.config ? load_config(*g.config) : ExperimentConfig{};
  for (const std::string& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got \"" + kv + "\"");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) cfg.set("train.seed", std::to_string(*g.seed));
  return cfg;
}

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("short write to " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string checkpoint_name(std::uint32_t epoch) {
  std::ostringstream os;
  os << "ckpt-epoch-" << std::setw(4) << std::setfill('0') << epoch << ".ckpt";
  return os.str();
}

}  // namespace

int cmd_gen(const GlobalOptions& g, GenOptions o, std::ostream& out) {
  if (g.seed) o.spec.seed = *g.seed;
  const SyntheticData data = generate_synthetic(o.spec);
  const SplitSpec split = make_class_split(data.set, o.train_per_class, o.extra_per_class,
                                           o.query_per_class, o.spec.seed);
  ensure_dir(o.out_dir);
  write_container(data.set, o.out_dir / "features.asvh");
  write_labels(data.set.labels(), data.set.num_classes(), o.out_dir / "labels.asvl");
  write_split(split, o.out_dir / "split.txt");
  std::string hard;
  for (std::size_t v = 0; v < data.hard_frames.size(); ++v) {
    hard += std::to_string(v) + ":";
    for (std::size_t j = 0; j < data.hard_frames[v].size(); ++j) {
      hard += (j ? "," : "") + std::to_string(data.hard_frames[v][j]);
    }
    hard += "\n";
  }
  write_text(o.out_dir / "hard_frames.txt", hard);
  if (g.json) {
    nlohmann::ordered_json j = {{"videos", data.set.count()},
                                {"frames", data.set.frames_per_video()},
                                {"dim", data.set.feature_dim()},
                                {"classes", data.set.num_classes()},
                                {"train", split.train.size()},
                                {"query", split.query.size()},
                                {"gallery", split.gallery.size()},
                                {"out_dir", o.out_dir.string()}};
    out << j.dump() << "\n";
  } else {
    out << "wrote " << data.set.count() << " videos to " << o.out_dir.string() << "\n";
  }
  return kExitOk;
}

int cmd_train(const GlobalOptions& g, const TrainOptions& o, std::ostream& out) {
  ExperimentConfig cfg = effective_config(g);
  const VideoFeatureSet set = read_container(o.features);
  const SplitSpec split = read_split(o.split);
  split.validate(set.count());
  cfg.resolve_for_dataset(set.frames_per_video(), set.feature_dim());
  cfg.validate(split.train.size());
  ensure_dir(o.out_dir);
  write_text(o.out_dir / "config.txt", cfg.to_text());

  std::ofstream log(o.out_dir / "train_log.jsonl");
  if (!log) throw IoError("cannot write " + (o.out_dir / "train_log.jsonl").string());
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& r) {
    log << r.to_json() << "\n";
    log.flush();
    if (g.json) out << r.to_json() << "\n";
  };
  fs::path last;
  hooks.on_checkpoint = [&](const TrainState& s) {
    last = o.out_dir / checkpoint_name(s.epoch);
    save_checkpoint(s, last);
  };
  const TrainResult result = run_training(set, split.train, cfg, hooks);
  save_checkpoint(result.state, o.out_dir / "model.ckpt");
  if (g.json) {
    nlohmann::ordered_json j = {{"epochs", result.state.epoch},
                                {"checkpoint", (o.out_dir / "model.ckpt").string()}};
    out << j.dump() << "\n";
  } else {
    out << "trained " << result.state.epoch << " epochs; checkpoint "
        << (o.out_dir / "model.ckpt").string() << "\n";
  }
  return kExitOk;
}

int cmd_encode(const GlobalOptions& g, const EncodeOptions& o, std::ostream& out) {
  TrainState state = load_checkpoint(o.checkpoint);
  const VideoFeatureSet set = read_container(o.features);
  std::vector<std::uint32_t> ids;
  if (o.subset == "all") {
    ids.resize(set.count());
    for (std::uint32_t i = 0; i < set.count(); ++i) ids[i] = i;
  } else {
    if (!o.split) throw ConfigError("encode --subset " + o.subset + " needs --split");
    const SplitSpec split = read_split(*o.split);
    split.validate(set.count());
    if (o.subset == "train") {
      ids = split.train;
    } else if (o.subset == "query") {
      ids = split.query;
    } else if (o.subset == "gallery") {
      ids = split.gallery;
    } else {
      throw ConfigError("--subset must be all, train, query or gallery");
    }
  }
  const CodeTable table = encode_split(state.model.net, set, ids);
  write_codes(table, o.out);
  if (g.json) {
    nlohmann::ordered_json j = {{"codes", table.size()}, {"bits", table.bits()}, {"out", o.out.string()}};
    out << j.dump() << "\n";
  } else {
    out << "encoded " << table.size() << " videos (" << table.bits() << " bits) to "
        << o.out.string() << "\n";
  }
  return kExitOk;
}

int cmd_eval(const GlobalOptions& g, const EvalOptions& o, std::ostream& out) {
  const CodeTable queries = read_codes(o.queries);
  const CodeTable gallery = read_codes(o.gallery);
  const LabelFile labels = read_labels(o.labels);
  ssvh::EvalOptions opts;
  opts.exclude_self = o.exclude_self;
  if (o.denominator == "min") {
    opts.denominator = ApDenominator::kMinNRelevant;
  } else if (o.denominator == "hits") {
    opts.denominator = ApDenominator::kHitsAtN;
  } else {
    throw ConfigError("--denominator must be min or hits");
  }
  opts.per_query = o.per_query_csv.has_value();
  const RetrievalReport rep = evaluate(queries, gallery, labels.labels, opts);
  if (o.report) write_text(*o.report, rep.to_json() + "\n");
  if (o.per_query_csv) write_text(*o.per_query_csv, rep.per_query_csv());
  if (g.json) {
    out << rep.to_json() << "\n";
  } else {
    for (const auto& [n, v] : rep.map_at) out << "mAP@" << n << " " << v << "\n";
    out << "GMAP " << rep.gmap << "\n";
  }
  return kExitOk;
}

int cmd_verify(const GlobalOptions& g, const VerifyOptions& o, std::ostream& out) {
  const std::uint64_t seed = g.seed.value_or(0);
  const auto results = verify::run(o.suite, o.instances, seed);
  bool ok = true;
  for (const auto& r : results) {
    ok = ok && r.ok();
    if (g.json) {
      out << r.to_json() << "\n";
    } else {
      out << (r.ok() ? "PASS " : "FAIL ") << r.suite << ": " << r.passed << "/" << r.instances
          << " (worst " << r.worst << ")\n";
      for (const auto& f : r.failures) out << "  " << f << "\n";
    }
  }
  return ok ? kExitOk : kExitFailure;
}

namespace {

std::string render_pr_svg(const std::vector<std::array<double, 3>>& pts) {
  const double w = 480, h = 360, pad = 48;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad << "\" y2=\"" << h - pad
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << h - pad
     << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << w / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">recall</text>\n"
     << "<text x=\"14\" y=\"" << h / 2 << "\" transform=\"rotate(-90 14 " << h / 2
     << ")\" text-anchor=\"middle\">precision</text>\n<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (const auto& p : pts) {
    os << pad + p[2] * (w - 2 * pad) << "," << (h - pad) - p[1] * (h - 2 * pad) << " ";
  }
  os << "\"/>\n</svg>\n";
  return os.str();
}

}  // namespace

int cmd_plot(const GlobalOptions& g, const PlotOptions& o, std::ostream& out) {
  nlohmann::json rep;
  try {
    rep = nlohmann::json::parse(read_text(o.report));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report is not valid JSON: ") + e.what(), 0);
  }
  if (!rep.contains("pr") || !rep.contains("map_at")) throw FormatError("report lacks pr or map_at", 0);
  ensure_dir(o.out_dir);
  std::vector<std::array<double, 3>> pts;
  std::ostringstream pr;
  pr << "radius,precision,recall\n";
  for (const auto& p : rep["pr"]) {
    pts.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    pr << p[0].get<int>() << "," << p[1].get<double>() << "," << p[2].get<double>() << "\n";
  }
  std::vector<std::pair<int, double>> maps;
  for (const auto& [k, v] : rep["map_at"].items()) maps.emplace_back(std::stoi(k), v.get<double>());
  std::sort(maps.begin(), maps.end());
  std::ostringstream mp;
  mp << "n,map\n";
  for (const auto& [n, v] : maps) mp << n << "," << v << "\n";
  write_text(o.out_dir / "pr.csv", pr.str());
  write_text(o.out_dir / "map_at.csv", mp.str());
  nlohmann::ordered_json data = {{"pr", rep["pr"]}, {"map_at", rep["map_at"]}};
  write_text(o.out_dir / "plot.json", data.dump() + "\n");
  if (o.svg) write_text(o.out_dir / "pr.svg", render_pr_svg(pts));
  if (g.json) {
    out << nlohmann::ordered_json{{"out_dir", o.out_dir.string()}, {"svg", o.svg}}.dump() << "\n";
  } else {
    out << "wrote plot data to " << o.out_dir.string() << "\n";
  }
  return kExitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"ssvh: self-supervised video hashing"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::string config_path;
  std::uint64_t seed = 0;
  auto* config_opt = app.add_option("--config", config_path, "key=value config file");
  auto* seed_opt = app.add_option("--seed", seed, "Seed for every random stream");
  app.add_option("--set", g.overrides, "Config override key=value (repeatable)");
  app.add_flag("--json", g.json, "Machine-readable output");

  GenOptions gen;
  auto* c_gen = app.add_subcommand("gen", "Write a synthetic feature set, labels and split");
  c_gen->add_option("--out-dir", gen.out_dir)->required();
  c_gen->add_option("--classes", gen.spec.num_classes);
  c_gen->add_option("--videos-per-class", gen.spec.videos_per_class);
  c_gen->add_option("--frames", gen.spec.frames_per_video);
  c_gen->add_option("--dim", gen.spec.feature_dim);
  c_gen->add_option("--hard-frames", gen.spec.hard_frame_count);
  c_gen->add_option("--hard-noise", gen.spec.hard_noise_scale);
  c_gen->add_option("--base-noise", gen.spec.base_noise_scale);
  c_gen->add_option("--drift", gen.spec.temporal_drift_scale);
  c_gen->add_option("--train-per-class", gen.train_per_class);
  c_gen->add_option("--extra-per-class", gen.extra_per_class);
  c_gen->add_option("--query-per-class", gen.query_per_class);

  TrainOptions train;
  auto* c_train = app.add_subcommand("train", "Train Grade-Net and the hashing network");
  c_train->add_option("--features", train.features)->required();
  c_train->add_option("--split", train.split)->required();
  c_train->add_option("--out-dir", train.out_dir)->required();

  EncodeOptions enc;
  std::string split_path;
  auto* c_enc = app.add_subcommand("encode", "Encode videos into packed hash codes");
  c_enc->add_option("--checkpoint", enc.checkpoint)->required();
  c_enc->add_option("--features", enc.features)->required();
  auto* split_opt = c_enc->add_option("--split", split_path);
  c_enc->add_option("--subset", enc.subset)->check(CLI::IsMember({"all", "train", "query", "gallery"}));
  c_enc->add_option("--out", enc.out)->required();

  EvalOptions ev;
  std::string report_path, csv_path;
  bool keep_self = false;
  auto* c_eval = app.add_subcommand("eval", "Retrieval metrics for query vs gallery codes");
  c_eval->add_option("--queries", ev.queries)->required();
  c_eval->add_option("--gallery", ev.gallery)->required();
  c_eval->add_option("--labels", ev.labels)->required();
  c_eval->add_flag("--keep-self", keep_self, "Do not skip a query's own id in the gallery");
  c_eval->add_option("--denominator", ev.denominator)->check(CLI::IsMember({"min", "hits"}));
  auto* report_opt = c_eval->add_option("--report", report_path);
  auto* csv_opt = c_eval->add_option("--per-query-csv", csv_path);

  VerifyOptions ver;
  auto* c_ver = app.add_subcommand("verify", "Run the certification suites");
  c_ver->add_option("--suite", ver.suite)->check(CLI::IsMember({"voting", "grl", "ste", "metrics", "all"}));
  c_ver->add_option("--instances", ver.instances)->check(CLI::PositiveNumber);

  PlotOptions plot;
  auto* c_plot = app.add_subcommand("plot", "PR / mAP tables (CSV, JSON, optional SVG)");
  c_plot->add_option("--report", plot.report)->required();
  c_plot->add_option("--out-dir", plot.out_dir)->required();
  c_plot->add_flag("--svg", plot.svg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (*config_opt) g.config = config_path;
  if (*seed_opt) g.seed = seed;
  if (*split_opt) enc.split = split_path;
  if (*report_opt) ev.report = report_path;
  if (*csv_opt) ev.per_query_csv = csv_path;
  ev.exclude_self = !keep_self;

  try {
    if (*c_gen) return cmd_gen(g, gen, out);
    if (*c_train) return cmd_train(g, train, out);
    if (*c_enc) return cmd_encode(g, enc, out);
    if (*c_eval) return cmd_eval(g, ev, out);
    if (*c_ver) return cmd_verify(g, ver, out);
    if (*c_plot) return cmd_plot(g, plot, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e);
  }
  return kExitUsage;
}

}  // namespace ssvh::cli
