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

#include <gtest/gtest.h>

#include "cdg/config.hpp"
#include "json.hpp"
#include "test_util.hpp"

namespace cdg {
namespace {

using testing::error_of;

TEST(Config, Defaults) {
  const RunConfig c;
  EXPECT_EQ(get_config_value(c, "train.learning_rate"), "0.01");
  EXPECT_EQ(get_config_value(c, "train.batch_size"), "16");
  EXPECT_EQ(get_config_value(c, "causal.tau"), "0.1");
  EXPECT_EQ(get_config_value(c, "causal.strata_K"), "4");
  EXPECT_EQ(get_config_value(c, "causal.momentum_m"), "0.9");
  EXPECT_EQ(get_config_value(c, "llm.temperature"), "0.7");
  EXPECT_EQ(get_config_value(c, "llm.concurrency"), "4");
  EXPECT_EQ(get_config_value(c, "cda.provider"), "stub");
}

TEST(Config, ParseIni) {
  const RunConfig c = parse_config(
      "[train]\nlearning_rate = 0.05\nepochs=3\noptimizer = sgd\n"
      "[causal]\nbranch_loss_weights = 1,0.5,0.5,2\n"
      "[cda]\nseeds = 1,2,3\n[output]\nformats = json\n");
  EXPECT_EQ(c.train.learning_rate, 0.05);
  EXPECT_EQ(c.train.epochs, 3u);
  EXPECT_EQ(c.train.optimizer, Optimizer::kSgd);
  EXPECT_EQ(c.train.branch_loss_weights, (std::array<double, 4>{1, 0.5, 0.5, 2}));
  EXPECT_EQ(c.cda_seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(c.output_formats, (std::vector<std::string>{"json"}));
}

TEST(Config, UnknownKeyIsNamed) {
  try {
    parse_config("[train]\nlearnin_rate = 0.05\n", "run.ini");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownConfigKey);
    EXPECT_NE(std::string(e.what()).find("train.learnin_rate"), std::string::npos) << e.what();
  }
  RunConfig c;
  EXPECT_EQ(error_of([&] { set_config_value(c, "bogus.key", "1"); }), ErrorCode::kUnknownConfigKey);
  EXPECT_EQ(error_of([&] { parse_config("toplevel = 1\n"); }), ErrorCode::kUnknownConfigKey);
}

TEST(Config, BadValues) {
  RunConfig c;
  EXPECT_EQ(error_of([&] { set_config_value(c, "train.epochs", "ten"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_of([&] { set_config_value(c, "train.optimizer", "adam9"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_of([&] { set_config_value(c, "causal.branch_loss_weights", "1,2"); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_of([] { parse_config("[train\nx=1\n"); }), ErrorCode::kMalformedLine);
  EXPECT_EQ(error_of([] { load_config("/nonexistent/cfg.ini"); }), ErrorCode::kFileNotFound);
}

TEST(Config, LaterValuesOverride) {
  RunConfig c = parse_config("[train]\nseed = 3\n[output]\ndir = a\n");
  // Command-line flags are applied after the file through the same setter.
  set_config_value(c, "train.seed", "11");
  set_config_value(c, "output.dir", "b");
  EXPECT_EQ(c.train.seed, 11u);
  EXPECT_EQ(c.output_dir, "b");
}

TEST(Config, IniRoundTrip) {
  RunConfig c;
  set_config_value(c, "train.learning_rate", "0.003");
  set_config_value(c, "cda.seeds", "4,5");
  set_config_value(c, "data.split", "0.7,0.2,0.1");
  set_config_value(c, "llm.endpoint", "http://localhost:9/v1");
  const RunConfig back = parse_config(config_ini(c));
  for (const auto& key : config_keys()) {
    EXPECT_EQ(get_config_value(back, key), get_config_value(c, key)) << key;
  }
  const auto j = nlohmann::json::parse(config_json(c));
  EXPECT_EQ(j["train"]["learning_rate"], "0.003");
  EXPECT_EQ(j["llm"]["endpoint"], "http://localhost:9/v1");
}

TEST(Config, NoApiKeyKey) {
  for (const auto& key : config_keys()) EXPECT_EQ(key.find("key"), std::string::npos) << key;
}

}  // namespace
}  // namespace cdg
