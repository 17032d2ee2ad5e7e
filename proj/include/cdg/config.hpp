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

// Run configuration: an INI file with sections data, text, train, causal,
// cda, llm and output. Every key is "section.name"; unknown keys are errors.

#ifndef CDG_CONFIG_HPP_
#define CDG_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cdg/augment.hpp"
#include "cdg/corpus.hpp"
#include "cdg/model.hpp"
#include "cdg/text.hpp"

namespace cdg {

struct RunConfig {
  std::string data_train;
  std::string data_val;
  std::string data_test;
  std::string data_format = "auto";  // auto | tweet | absa
  std::string data_lang = "en";
  std::string data_stopwords;
  SplitRatios split;

  EmbedderSpec embedder;
  TrainConfig train;

  Provider cda_provider = Provider::kStub;
  std::vector<std::uint64_t> cda_seeds = {0};
  std::string cda_synonyms;

  EndpointConfig llm;

  std::string output_dir = "out";
  std::vector<std::string> output_formats = {"json", "csv"};
  // Validation accuracy at which train reports record steps-to-threshold.
  double convergence_threshold = 0.9;
};

// In declaration order.
const std::vector<std::string>& config_keys();

// Throws kUnknownConfigKey naming the key, kInvalidArgument on a bad value.
void set_config_value(RunConfig& c, std::string_view key, std::string_view value);
std::string get_config_value(const RunConfig& c, std::string_view key);

RunConfig parse_config(std::string_view ini_text, std::string_view source_name = "config");
RunConfig load_config(const std::filesystem::path& path);

// {"section": {"key": "value"}} of every key.
std::string config_json(const RunConfig& c);
std::string config_ini(const RunConfig& c);

}  // namespace cdg

#endif  // CDG_CONFIG_HPP_
