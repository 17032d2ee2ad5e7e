// Copyright 2026 The cdg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Runs the cdg executable end to end.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct CliRun {
  int code = -1;
  std::string output;  // stdout and stderr
};

CliRun cdg(const std::string& args) {
  const std::string cmd = std::string("\"") + CDG_CLI_PATH + "\" " + args + " 2>&1";
  CliRun r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.output.append(buf.data(), n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    static int n = 0;
    dir_ = fs::temp_directory_path() / ("cdg_cli_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(dir_ / name, std::ios::binary) << content;
    return path(name);
  }
  fs::path dir_;
};

TEST_F(CliTest, HelpForEverySubcommand) {
  const CliRun top = cdg("--help");
  EXPECT_EQ(top.code, 0);
  EXPECT_NE(top.output.find("CDG_API_KEY"), std::string::npos);
  for (const char* sub : {"ingest", "train", "eval", "perturb", "align", "paraphrase", "cda-run",
                          "ood-run", "report", "synth-absa", "synth-tweets"}) {
    const CliRun r = cdg(std::string(sub) + " --help");
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.output.find("Usage"), std::string::npos) << sub;
  }
  EXPECT_EQ(cdg("--version").code, 0);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(cdg("").code, 1);
  EXPECT_EQ(cdg("frobnicate").code, 1);
  EXPECT_EQ(cdg("train --no-such-flag").code, 1);
  EXPECT_EQ(cdg("eval --data x.tsv").code, 1);  // --model is required
  const CliRun r = cdg("--set train.bogus=1 synth-tweets --n 9 --out-dir " + path("o"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("train.bogus"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("UnknownConfigKey"), std::string::npos) << r.output;
  const std::string cfg = write("bad.ini", "[train]\nlerning_rate = 1\n");
  EXPECT_EQ(cdg("--config " + cfg + " synth-tweets --n 9 --out-dir " + path("o")).code, 1);
}

TEST_F(CliTest, DataErrors) {
  const std::string bad = write("bad.tsv", "fine\tpositive\nmeh words\tmeh\n");
  const CliRun r = cdg("ingest --data " + bad + " --out-dir " + path("o"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("bad.tsv:2"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("meh"), std::string::npos);
  const std::string good = write("good.tsv", "fine\tpositive\n");
  EXPECT_EQ(cdg("eval --model " + path("none.bin") + " --data " + good + " --out-dir " + path("o")).code, 2);
  write("junk.bin", "definitely not a model");
  EXPECT_EQ(cdg("eval --model " + path("junk.bin") + " --data " + good + " --out-dir " + path("o")).code, 2);
}

TEST_F(CliTest, RemoteWithoutKeyExitsThree) {
  ASSERT_EQ(cdg("synth-tweets --n 9 --out-dir " + path("s")).code, 0);
  const CliRun r = cdg("--set llm.endpoint=http://127.0.0.1:9/v1 paraphrase --provider remote --data " +
                    path("s/tweets.tsv") + " --out-dir " + path("p"));
  EXPECT_EQ(r.code, 3) << r.output;
}

TEST_F(CliTest, TrainIsDeterministic) {
  ASSERT_EQ(cdg("synth-tweets --n 60 --seed 2 --out-dir " + path("s")).code, 0);
  // Same arguments twice, so the echoed output dir matches too.
  const std::vector<std::string> files = {"model.bin", "train_report.json", "trace.csv"};
  std::vector<std::string> first;
  for (int run = 0; run < 2; ++run) {
    const CliRun r = cdg("--seed 4 --set train.epochs=3 train --data " + path("s/tweets.tsv") +
                         " --out-dir " + path("a"));
    ASSERT_EQ(r.code, 0) << r.output;
    for (std::size_t i = 0; i < files.size(); ++i) {
      const std::string content = slurp(dir_ / "a" / files[i]);
      if (run == 0) {
        first.push_back(content);
        fs::remove(dir_ / "a" / files[i]);
      } else {
        EXPECT_EQ(first[i], content) << files[i];
      }
    }
  }
  EXPECT_FALSE(first[0].empty());
  const json rep = json::parse(first[1]);
  EXPECT_EQ(rep["config"]["train"]["seed"], "4");
  EXPECT_EQ(rep["config"]["train"]["epochs"], "3");
}

TEST_F(CliTest, AspectPipeline) {
  ASSERT_EQ(cdg("synth-absa --n 120 --seed 1 --out-dir " + path("s")).code, 0);
  const std::string common = "--set train.epochs=2 --set train.hidden=16 --set train.d_rep=8 ";
  CliRun r = cdg(common + "train --ct --data " + path("s/synth_train.jsonl") + " --val " +
              path("s/synth_test.jsonl") + " --out-dir " + path("m"));
  ASSERT_EQ(r.code, 0) << r.output;
  r = cdg(common + "eval --model " + path("m/model.bin") + " --data " + path("s/synth_test.jsonl") +
          " --out-dir " + path("e"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(json::parse(slurp(dir_ / "e" / "eval_report.json"))["result"]["mode"], "tie");
  r = cdg(common + "perturb --lexicon " + path("s/lexicon.json") + " --distractors " +
          path("s/distractors.json") + " --model " + path("m/model.bin") + " --data " +
          path("s/synth_test.jsonl") + " --out-dir " + path("p"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir_ / "p" / "perturb" / "revtgt.jsonl"));
  const json ars = json::parse(slurp(dir_ / "p" / "ars.json"));
  EXPECT_EQ(ars["report"], "ars");
  r = cdg("align --data " + path("s/synth_test.jsonl") + " --out-dir " + path("a"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(slurp(dir_ / "a" / "alignment.csv").substr(0, 19), "id,similarity,exact");
  r = cdg("report --input " + path("m/train_report.json") + " --out-dir " + path("r"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir_ / "r" / "train_report.csv"));
  r = cdg("report --threshold 0.5 --input " + path("m/train_report.json") + " --out-dir " +
          path("r"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir_ / "r" / "convergence.json"));
}

TEST_F(CliTest, CdaRunIsDeterministic) {
  ASSERT_EQ(cdg("synth-tweets --n 90 --out-dir " + path("s")).code, 0);
  std::string json_first, csv_first;
  for (int run = 0; run < 2; ++run) {
    const CliRun r = cdg("--set train.epochs=2 cda-run --seeds 0,1 --synonyms " +
                         path("s/synonyms.json") + " --data " + path("s/tweets.tsv") +
                         " --out-dir " + path("a"));
    ASSERT_EQ(r.code, 0) << r.output;
    const std::string j = slurp(dir_ / "a" / "cda_report.json");
    const std::string c = slurp(dir_ / "a" / "cda_report.csv");
    if (run == 0) {
      json_first = j;
      csv_first = c;
      fs::remove_all(dir_ / "a");
    } else {
      EXPECT_EQ(json_first, j);
      EXPECT_EQ(csv_first, c);
    }
  }
  EXPECT_EQ(json::parse(json_first)["result"]["per_seed"].size(), 2u);
}

}  // namespace
