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

#include "cdg/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "cdg/error.hpp"
#include "cdg/unicode.hpp"
#include "json.hpp"

namespace cdg {

namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Key {
  std::string name;
  Setter set;
  Getter get;
};

[[noreturn]] void bad_value(const std::string& v, const char* expected) {
  throw Error(ErrorCode::kInvalidArgument, "'" + v + "' is not " + expected);
}

double to_double(const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(v, "a number");
  return out;
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(v, "a non-negative integer");
  return out;
}

// Shortest form that reads back to the same double.
std::string fmt(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(v);
  while (std::getline(in, cur, ',')) {
    cur = unicode::trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F f) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += f(xs[i]);
  }
  return out;
}

Key str(std::string name, std::string RunConfig::*field) {
  return {std::move(name), [field](RunConfig& c, const std::string& v) { c.*field = v; },
          [field](const RunConfig& c) { return c.*field; }};
}

template <typename Get>
Key num(std::string name, Get get) {
  return {std::move(name), [get](RunConfig& c, const std::string& v) { get(c) = to_double(v); },
          [get](const RunConfig& c) { return fmt(get(const_cast<RunConfig&>(c))); }};
}

template <typename Get>
Key count(std::string name, Get get) {
  return {std::move(name),
          [get](RunConfig& c, const std::string& v) { get(c) = static_cast<std::decay_t<decltype(get(c))>>(to_u64(v)); },
          [get](const RunConfig& c) { return std::to_string(get(const_cast<RunConfig&>(c))); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> k = [] {
    std::vector<Key> v;
    v.push_back(str("data.train", &RunConfig::data_train));
    v.push_back(str("data.val", &RunConfig::data_val));
    v.push_back(str("data.test", &RunConfig::data_test));
    v.push_back({"data.format",
                 [](RunConfig& c, const std::string& s) {
                   if (s != "auto" && s != "tweet" && s != "absa") bad_value(s, "auto, tweet or absa");
                   c.data_format = s;
                 },
                 [](const RunConfig& c) { return c.data_format; }});
    v.push_back(str("data.lang", &RunConfig::data_lang));
    v.push_back(str("data.stopwords", &RunConfig::data_stopwords));
    v.push_back({"data.split",
                 [](RunConfig& c, const std::string& s) {
                   const auto parts = split_list(s);
                   if (parts.size() != 3) bad_value(s, "three comma-separated ratios");
                   c.split = SplitRatios{to_double(parts[0]), to_double(parts[1]), to_double(parts[2])};
                 },
                 [](const RunConfig& c) {
                   return fmt(c.split.train) + "," + fmt(c.split.val) + "," + fmt(c.split.test);
                 }});
    v.push_back({"text.embedder",
                 [](RunConfig& c, const std::string& s) {
                   if (s == "hashed") {
                     c.embedder.kind = EmbedderKind::kHashedBag;
                   } else if (s == "file") {
                     c.embedder.kind = EmbedderKind::kFileBacked;
                   } else {
                     bad_value(s, "hashed or file");
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.embedder.kind == EmbedderKind::kHashedBag ? "hashed" : "file");
                 }});
    v.push_back(count("text.dim", [](RunConfig& c) -> std::size_t& { return c.embedder.dim; }));
    v.push_back(count("text.hash_buckets",
                      [](RunConfig& c) -> std::uint64_t& { return c.embedder.hash_buckets; }));
    v.push_back({"text.vectors",
                 [](RunConfig& c, const std::string& s) { c.embedder.vectors_path = s; },
                 [](const RunConfig& c) { return c.embedder.vectors_path; }});
    v.push_back(num("train.learning_rate", [](RunConfig& c) -> double& { return c.train.learning_rate; }));
    v.push_back(count("train.batch_size", [](RunConfig& c) -> std::size_t& { return c.train.batch_size; }));
    v.push_back(count("train.epochs", [](RunConfig& c) -> std::size_t& { return c.train.epochs; }));
    v.push_back(num("train.weight_decay", [](RunConfig& c) -> double& { return c.train.weight_decay; }));
    v.push_back(count("train.seed", [](RunConfig& c) -> std::uint64_t& { return c.train.seed; }));
    v.push_back({"train.optimizer",
                 [](RunConfig& c, const std::string& s) {
                   if (s == "sgd") {
                     c.train.optimizer = Optimizer::kSgd;
                   } else if (s == "adamw") {
                     c.train.optimizer = Optimizer::kAdamW;
                   } else {
                     bad_value(s, "sgd or adamw");
                   }
                 },
                 [](const RunConfig& c) { return std::string(optimizer_name(c.train.optimizer)); }});
    v.push_back(count("train.hidden", [](RunConfig& c) -> std::size_t& { return c.train.hidden; }));
    v.push_back(count("train.d_rep", [](RunConfig& c) -> std::size_t& { return c.train.d_rep; }));
    v.push_back(count("train.knowledge_window",
                      [](RunConfig& c) -> std::size_t& { return c.train.knowledge_window; }));
    v.push_back(num("train.counterfactual_weight",
                    [](RunConfig& c) -> double& { return c.train.counterfactual_weight; }));
    v.push_back(num("causal.tau", [](RunConfig& c) -> double& { return c.train.tau; }));
    v.push_back(count("causal.strata_K", [](RunConfig& c) -> std::size_t& { return c.train.strata_K; }));
    v.push_back(num("causal.epsilon", [](RunConfig& c) -> double& { return c.train.epsilon; }));
    v.push_back(num("causal.momentum_m", [](RunConfig& c) -> double& { return c.train.momentum_m; }));
    v.push_back({"causal.branch_loss_weights",
                 [](RunConfig& c, const std::string& s) {
                   const auto parts = split_list(s);
                   if (parts.size() != 4) bad_value(s, "four comma-separated weights");
                   for (std::size_t i = 0; i < 4; ++i) c.train.branch_loss_weights[i] = to_double(parts[i]);
                 },
                 [](const RunConfig& c) {
                   const auto& w = c.train.branch_loss_weights;
                   return fmt(w[0]) + "," + fmt(w[1]) + "," + fmt(w[2]) + "," + fmt(w[3]);
                 }});
    v.push_back({"cda.provider",
                 [](RunConfig& c, const std::string& s) {
                   const auto p = try_parse_provider(s);
                   if (!p) bad_value(s, "remote or stub");
                   c.cda_provider = *p;
                 },
                 [](const RunConfig& c) { return std::string(provider_name(c.cda_provider)); }});
    v.push_back({"cda.seeds",
                 [](RunConfig& c, const std::string& s) {
                   std::vector<std::uint64_t> seeds;
                   for (const auto& p : split_list(s)) seeds.push_back(to_u64(p));
                   if (seeds.empty()) bad_value(s, "a list of seeds");
                   c.cda_seeds = std::move(seeds);
                 },
                 [](const RunConfig& c) {
                   return join(c.cda_seeds, [](std::uint64_t x) { return std::to_string(x); });
                 }});
    v.push_back(str("cda.synonyms", &RunConfig::cda_synonyms));
    v.push_back({"llm.endpoint", [](RunConfig& c, const std::string& s) { c.llm.endpoint = s; },
                 [](const RunConfig& c) { return c.llm.endpoint; }});
    v.push_back({"llm.model", [](RunConfig& c, const std::string& s) { c.llm.model = s; },
                 [](const RunConfig& c) { return c.llm.model; }});
    v.push_back(num("llm.temperature", [](RunConfig& c) -> double& { return c.llm.temperature; }));
    v.push_back(count("llm.concurrency", [](RunConfig& c) -> std::size_t& { return c.llm.concurrency; }));
    v.push_back(count("llm.max_retries", [](RunConfig& c) -> std::size_t& { return c.llm.max_retries; }));
    v.push_back(str("output.dir", &RunConfig::output_dir));
    v.push_back({"output.formats",
                 [](RunConfig& c, const std::string& s) {
                   auto parts = split_list(s);
                   for (const auto& p : parts) {
                     if (p != "json" && p != "csv") bad_value(p, "json or csv");
                   }
                   c.output_formats = std::move(parts);
                 },
                 [](const RunConfig& c) { return join(c.output_formats, [](const std::string& x) { return x; }); }});
    v.push_back(num("output.convergence_threshold",
                    [](RunConfig& c) -> double& { return c.convergence_threshold; }));
    return v;
  }();
  return k;
}

const Key& find_key(std::string_view name) {
  for (const auto& k : keys()) {
    if (k.name == name) return k;
  }
  throw Error(ErrorCode::kUnknownConfigKey, "unknown config key '" + std::string(name) + "'",
              std::nullopt, std::string(name));
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& k : keys()) out.push_back(k.name);
    return out;
  }();
  return names;
}

void set_config_value(RunConfig& c, std::string_view key, std::string_view value) {
  const Key& k = find_key(key);
  try {
    k.set(c, unicode::trim(value));
  } catch (const Error& e) {
    throw Error(e.code(), std::string(key) + ": " + e.what(), std::nullopt, std::string(key));
  }
}

std::string get_config_value(const RunConfig& c, std::string_view key) { return find_key(key).get(c); }

RunConfig parse_config(std::string_view ini_text, std::string_view source_name) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(ini_text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::kMalformedLine,
                std::string(source_name) + ":" + std::to_string(e.line()) + ": " + e.message(),
                e.line());
  }
  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      // A key outside any section.
      throw Error(ErrorCode::kUnknownConfigKey,
                  std::string(source_name) + ": unknown config key '" + section + "'",
                  std::nullopt, section);
    }
    for (const auto& [name, value] : body) {
      set_config_value(c, section + "." + name, value.get_value<std::string>());
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string config_json(const RunConfig& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& k : keys()) {
    const auto dot = k.name.find('.');
    j[k.name.substr(0, dot)][k.name.substr(dot + 1)] = k.get(c);
  }
  return j.dump();
}

std::string config_ini(const RunConfig& c) {
  std::string out;
  std::string section;
  for (const auto& k : keys()) {
    const auto dot = k.name.find('.');
    const std::string s = k.name.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out += '\n';
      out += "[" + s + "]\n";
      section = s;
    }
    out += k.name.substr(dot + 1) + " = " + k.get(c) + "\n";
  }
  return out;
}

}  // namespace cdg
