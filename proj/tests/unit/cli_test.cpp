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

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ssvh/bytes.hpp"
#include "ssvh/retrieval.hpp"
#include "test_support.hpp"

namespace ssvh {
namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ssvh");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> gen_args(const testing::TempDir& dir) {
  return {"gen", "--out-dir", dir.path().string(), "--classes", "3", "--videos-per-class", "8",
          "--frames", "6", "--dim", "6", "--hard-frames", "2", "--train-per-class", "4",
          "--extra-per-class", "1", "--query-per-class", "2"};
}

std::vector<std::string> tiny_overrides() {
  return {"--set", "model.width=8", "--set", "model.heads=2", "--set", "model.code_bits=8",
          "--set", "model.encoder_layers=1", "--set", "centers.granularities=2,3",
          "--set", "train.batch_size=4"};
}

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  EXPECT_EQ(run_cli({}).code, kExitUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run_cli({"verify", "--suite", "nope"}).code, kExitUsage);
}

TEST(Cli, VerifyVotingPasses) {
  const Result r = run_cli({"--json", "verify", "--suite", "voting", "--instances", "200"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j.dump().find("\"passed\":200") != std::string::npos) << r.out;
}

TEST(Cli, GenTrainEncodeEvalPipeline) {
  testing::TempDir dir;
  ASSERT_EQ(run_cli(gen_args(dir)).code, 0);
  for (const char* f : {"features.asvh", "labels.asvl", "split.txt", "hard_frames.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::vector<std::string> train = tiny_overrides();
  for (const char* a : {"--set", "train.epochs=2", "--set", "train.warmup_epochs=1", "train",
                        "--features"}) {
    train.emplace_back(a);
  }
  train.push_back((dir / "features.asvh").string());
  train.push_back("--split");
  train.push_back((dir / "split.txt").string());
  train.push_back("--out-dir");
  train.push_back((dir / "run").string());
  const Result tr = run_cli(train);
  ASSERT_EQ(tr.code, 0) << tr.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "model.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "ckpt-epoch-0000.ckpt"));
  std::ifstream log(dir / "run" / "train_log.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["epoch"], ++lines);
  }
  EXPECT_EQ(lines, 2);

  const std::string ckpt = (dir / "run" / "model.ckpt").string();
  for (const char* subset : {"query", "gallery"}) {
    const Result e = run_cli({"encode", "--checkpoint", ckpt, "--features",
                              (dir / "features.asvh").string(), "--split",
                              (dir / "split.txt").string(), "--subset", subset, "--out",
                              (dir / (std::string(subset) + ".asvc")).string()});
    ASSERT_EQ(e.code, 0) << e.err;
  }
  EXPECT_EQ(read_codes(dir / "query.asvc").size(), 6u);
  EXPECT_EQ(read_codes(dir / "gallery.asvc").size(), 15u);

  const Result ev = run_cli({"--json", "eval", "--queries", (dir / "query.asvc").string(),
                             "--gallery", (dir / "gallery.asvc").string(), "--labels",
                             (dir / "labels.asvl").string(), "--report",
                             (dir / "report.json").string()});
  ASSERT_EQ(ev.code, 0) << ev.err;
  const auto rep = nlohmann::json::parse(ev.out);
  EXPECT_TRUE(rep.contains("gmap"));
  EXPECT_EQ(rep["map_at"].size(), 6u);

  const Result pl = run_cli({"plot", "--report", (dir / "report.json").string(), "--out-dir",
                             (dir / "plots").string(), "--svg"});
  ASSERT_EQ(pl.code, 0) << pl.err;
  for (const char* f : {"pr.csv", "map_at.csv", "plot.json", "pr.svg"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "plots" / f)) << f;
  }
}

TEST(Cli, EchoedConfigReproducesTheRun) {
  testing::TempDir dir;
  ASSERT_EQ(run_cli(gen_args(dir)).code, 0);
  auto train = [&](std::vector<std::string> pre, const std::string& out) {
    pre.insert(pre.end(), {"train", "--features", (dir / "features.asvh").string(), "--split",
                           (dir / "split.txt").string(), "--out-dir", (dir / out).string()});
    return run_cli(pre).code;
  };
  std::vector<std::string> first = tiny_overrides();
  first.insert(first.end(), {"--seed", "5", "--set", "train.epochs=2", "--set",
                             "train.warmup_epochs=1"});
  ASSERT_EQ(train(first, "a"), 0);
  ASSERT_EQ(train({"--config", (dir / "a" / "config.txt").string()}, "b"), 0);
  EXPECT_EQ(bytes::read_file(dir / "a" / "model.ckpt"), bytes::read_file(dir / "b" / "model.ckpt"));
}

TEST(Cli, ZeroEpochTrainWritesInitialCheckpoint) {
  testing::TempDir dir;
  ASSERT_EQ(run_cli(gen_args(dir)).code, 0);
  std::vector<std::string> args = tiny_overrides();
  args.insert(args.end(), {"--set", "train.epochs=0", "train", "--features",
                           (dir / "features.asvh").string(), "--split", (dir / "split.txt").string(),
                           "--out-dir", (dir / "run").string()});
  EXPECT_EQ(run_cli(args).code, 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "ckpt-epoch-0000.ckpt"));
}

TEST(Cli, ConfigAndIoErrorsMapToExitCodes) {
  testing::TempDir dir;
  ASSERT_EQ(run_cli(gen_args(dir)).code, 0);
  const std::vector<std::string> tail{"train", "--features", (dir / "features.asvh").string(),
                                      "--split", (dir / "split.txt").string(), "--out-dir",
                                      (dir / "run").string()};
  std::vector<std::string> bad_key{"--set", "loss.gamma=1"};
  bad_key.insert(bad_key.end(), tail.begin(), tail.end());
  EXPECT_EQ(run_cli(bad_key).code, kExitUsage);
  EXPECT_EQ(run_cli({"train", "--features", (dir / "missing.asvh").string(), "--split",
                     (dir / "split.txt").string(), "--out-dir", (dir / "run").string()})
                .code,
            kExitIo);
  bytes::write_file(dir / "junk.asvc", std::vector<std::uint8_t>{1, 2, 3});
  EXPECT_EQ(run_cli({"eval", "--queries", (dir / "junk.asvc").string(), "--gallery",
                     (dir / "junk.asvc").string(), "--labels", (dir / "labels.asvl").string()})
                .code,
            kExitIo);
}

TEST(Cli, SelfRetrievalWithoutExclusionScoresOne) {
  testing::TempDir dir;
  Rng rng(3);
  const Mat protos = testing::random_signs(3, 16, rng);
  Mat codes(18, 16);
  std::vector<std::uint32_t> labels(18), ids(18);
  for (Index i = 0; i < 18; ++i) {
    codes.row(i) = protos.row(i % 3);
    labels[i] = static_cast<std::uint32_t>(i % 3);
    ids[i] = static_cast<std::uint32_t>(i);
  }
  write_codes(CodeTable::pack(codes, ids), dir / "c.asvc");
  write_labels(labels, 3, dir / "l.asvl");
  const Result r = run_cli({"--json", "eval", "--queries", (dir / "c.asvc").string(), "--gallery",
                            (dir / "c.asvc").string(), "--labels", (dir / "l.asvl").string(),
                            "--keep-self"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_DOUBLE_EQ(nlohmann::json::parse(r.out)["map_at"]["5"].get<double>(), 1.0);
}

}  // namespace
}  // namespace ssvh
