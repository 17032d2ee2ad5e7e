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

#include "cdg/cdg.h"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cdg/align.hpp"
#include "cdg/augment.hpp"
#include "cdg/config.hpp"
#include "cdg/corpus.hpp"
#include "cdg/error.hpp"
#include "cdg/eval.hpp"
#include "cdg/model.hpp"
#include "cdg/perturb.hpp"
#include "cdg/synthbench.hpp"
#include "cdg/text.hpp"
#include "json.hpp"

using json = nlohmann::json;

struct cdg_config {
  cdg::RunConfig cfg;
};

struct cdg_dataset {
  cdg::Dataset data;
  std::string path;  // empty for in-memory datasets
  std::string sha256;
};

struct cdg_model {
  cdg::AnyModel model;
  std::string sha256;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_error_code = "None";

cdg_status fail(cdg_status status, std::string code, std::string message) {
  g_error = std::move(message);
  g_error_code = std::move(code);
  return status;
}

cdg_status status_of(cdg::ErrorCategory c) {
  switch (c) {
    case cdg::ErrorCategory::kUsage: return CDG_ERR_USAGE;
    case cdg::ErrorCategory::kData: return CDG_ERR_DATA;
    case cdg::ErrorCategory::kProvider: return CDG_ERR_PROVIDER;
    case cdg::ErrorCategory::kRuntime: break;
  }
  return CDG_ERR_RUNTIME;
}

template <typename F>
cdg_status guard(F&& f) {
  try {
    f();
    return CDG_OK;
  } catch (const cdg::Error& e) {
    return fail(status_of(cdg::error_category(e.code())), std::string(cdg::error_code_name(e.code())),
                e.what());
  } catch (const json::exception& e) {
    return fail(CDG_ERR_DATA, "MalformedLine", std::string("invalid JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(CDG_ERR_RUNTIME, "Internal", "out of memory");
  } catch (const std::exception& e) {
    return fail(CDG_ERR_RUNTIME, "Internal", e.what());
  }
}

void require(const void* p, const char* what) {
  if (!p) throw cdg::Error(cdg::ErrorCode::kInvalidArgument, std::string(what) + " must not be null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw cdg::Error(cdg::ErrorCode::kInternal, "SHA-256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cdg::Error(cdg::ErrorCode::kFileNotFound, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string serialize(const cdg::Dataset& d) {
  std::ostringstream out;
  if (d.kind == cdg::DatasetKind::kAbsa) {
    cdg::write_absa(d, out);
  } else {
    cdg::write_tweets(d, out);
  }
  return out.str();
}

cdg_dataset* wrap(cdg::Dataset d) {
  auto* h = new cdg_dataset{std::move(d), {}, {}};
  h->sha256 = sha256_hex(serialize(h->data));
  return h;
}

json input_json(const cdg_dataset* d) {
  return {{"path", d->path}, {"sha256", d->sha256}, {"items", d->data.size()}};
}

json input_json(const cdg_model* m) { return {{"sha256", m->sha256}}; }

std::string envelope(std::string_view kind, const cdg::RunConfig& cfg, json inputs, json result) {
  const json j = {{"tool", "cdg"},
                  {"version", CDG_VERSION},
                  {"report", kind},
                  {"config", json::parse(cdg::config_json(cfg))},
                  {"inputs", std::move(inputs)},
                  {"result", std::move(result)}};
  return j.dump(2) + "\n";
}

cdg::TextSettings text_settings(const cdg::RunConfig& cfg) {
  cdg::TextSettings t;
  if (!cfg.data_stopwords.empty()) {
    const cdg::StopwordSet s = cdg::load_stopwords(cfg.data_stopwords);
    t.stopwords.assign(s.begin(), s.end());
    std::sort(t.stopwords.begin(), t.stopwords.end());
  }
  return t;
}

std::optional<cdg::InferMode> parse_mode(const char* mode) {
  if (!mode || !*mode) return std::nullopt;
  const std::string m = mode;
  if (m == "standard") return cdg::InferMode::kStandard;
  if (m == "tie") return cdg::InferMode::kTie;
  throw cdg::Error(cdg::ErrorCode::kInvalidArgument, "unknown inference mode '" + m + "'");
}

json trace_json(const cdg::TrainTrace& t) {
  json arr = json::array();
  for (const auto& r : t.records) {
    arr.push_back({{"step", r.step}, {"train_loss", r.train_loss}, {"val_accuracy", r.val_accuracy}});
  }
  return arr;
}

cdg::TrainTrace trace_from_json(const json& arr) {
  cdg::TrainTrace t;
  for (const auto& r : arr) {
    t.records.push_back({r.at("step").get<std::size_t>(), r.at("train_loss").get<double>(),
                         r.at("val_accuracy").get<double>()});
  }
  return t;
}

json metrics_json(const cdg::Metrics& m) {
  return {{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}, {"n", m.n}};
}

std::string model_name(const cdg::AnyModel& m) {
  if (std::holds_alternative<cdg::ClassifierParams>(m)) return "classifier";
  return std::get<cdg::AbsaModel>(m).ct ? "ct" : "standard";
}

std::unique_ptr<cdg::RemoteClient> remote_client(const cdg::RunConfig& cfg) {
  cdg::EndpointConfig ec = cfg.llm;
  if (ec.endpoint.empty()) {
    throw cdg::Error(cdg::ErrorCode::kInvalidArgument, "llm.endpoint must be set for the remote provider");
  }
  ec.api_key = cdg::api_key_from_env();
  ec.jitter_seed = cfg.train.seed;
  return std::make_unique<cdg::RemoteClient>(ec, cdg::http_transport());
}

cdg::D2Options d2_options(const cdg::RunConfig& cfg, std::unique_ptr<cdg::RemoteClient>& client) {
  cdg::D2Options o;
  o.provider = cfg.cda_provider;
  o.seed = cfg.train.seed;
  if (!cfg.cda_synonyms.empty()) o.synonyms = cdg::load_synonyms(cfg.cda_synonyms);
  if (o.provider == cdg::Provider::kRemote) {
    client = remote_client(cfg);
    o.client = client.get();
  }
  return o;
}

std::unordered_map<std::string, cdg::Label> load_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cdg::Error(cdg::ErrorCode::kFileNotFound, "cannot open predictions " + path);
  std::unordered_map<std::string, cdg::Label> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      throw cdg::Error(cdg::ErrorCode::kMalformedLine, path + ":" + std::to_string(n) + ": invalid JSON", n);
    }
    if (!j.contains("id") || !j.contains("pred")) {
      throw cdg::Error(cdg::ErrorCode::kMissingField,
                       path + ":" + std::to_string(n) + ": prediction needs id and pred", n,
                       j.contains("id") ? "pred" : "id");
    }
    const auto label = cdg::try_parse_label(j["pred"].get<std::string>());
    if (!label) {
      throw cdg::Error(cdg::ErrorCode::kUnknownLabel,
                       path + ":" + std::to_string(n) + ": unknown label", n, "pred");
    }
    out[j["id"].get<std::string>()] = *label;
  }
  return out;
}

std::string jsonl(const cdg::Dataset& d) {
  std::string out;
  for (const auto& inst : d.absa) out += cdg::absa_to_json_line(inst) + "\n";
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string num(double x) {
  std::ostringstream o;
  o.precision(17);
  o << x;
  return o.str();
}

// Every trace in a report, keyed by a model name.
std::map<std::string, cdg::TrainTrace> report_traces(const json& r) {
  std::map<std::string, cdg::TrainTrace> out;
  const std::string kind = r.at("report").get<std::string>();
  const json& res = r.at("result");
  if (kind == "train" || kind == "ood") {
    const std::string name = kind == "train" ? res.at("model").at("name").get<std::string>()
                                             : std::string(res.at("ct").get<bool>() ? "ct" : "standard");
    out[name] = trace_from_json(res.at("trace"));
  } else if (kind == "cda") {
    for (const auto& s : res.at("per_seed")) {
      const std::string seed = std::to_string(s.at("seed").get<std::uint64_t>());
      for (const auto& [domain, t] : s.at("traces").items()) {
        out[domain + "@" + seed] = trace_from_json(t);
      }
    }
  } else if (kind == "convergence") {
    for (const auto& [name, t] : res.at("traces").items()) out[name] = trace_from_json(t);
  }
  return out;
}

std::string render_csv(const json& r) {
  const std::string kind = r.at("report").get<std::string>();
  const json& res = r.at("result");
  std::string out;
  if (kind == "cda") {
    out = "seed,train,eval,accuracy\n";
    auto rows = [&](const std::string& seed, const json& cell) {
      for (const auto& [t, row] : cell.at("matrix").items()) {
        for (const auto& [e, v] : row.items()) out += seed + "," + t + "," + e + "," + num(v) + "\n";
        out += seed + "," + t + ",test," + num(cell.at("test_row").at(t).get<double>()) + "\n";
      }
    };
    rows("mean", res);
    for (const auto& s : res.at("per_seed")) rows(std::to_string(s.at("seed").get<std::uint64_t>()), s);
  } else if (kind == "ood") {
    out = "lang,role,accuracy,macro_f1,n\n";
    auto row = [&](const std::string& lang, const char* role, const json& m) {
      out += csv_field(lang) + "," + role + "," + num(m.at("accuracy")) + "," + num(m.at("macro_f1")) +
             "," + std::to_string(m.at("n").get<std::size_t>()) + "\n";
    };
    row(res.at("train_lang").get<std::string>(), "in_domain", res.at("in_domain"));
    for (const auto& [lang, m] : res.at("targets").items()) row(lang, "target", m);
  } else if (kind == "eval") {
    const json& m = res.at("metrics");
    out = "metric,value\naccuracy," + num(m.at("accuracy")) + "\nmacro_f1," + num(m.at("macro_f1")) +
          "\nn," + std::to_string(m.at("n").get<std::size_t>()) + "\n";
  } else if (kind == "ars") {
    out = "perturbation,accuracy,macro_f1,n\n";
    out += "original," + num(res.at("original_accuracy")) + ",,\n";
    for (const auto& [p, m] : res.at("by_perturbation").items()) {
      out += p + "," + num(m.at("accuracy")) + "," + num(m.at("macro_f1")) + "," +
             std::to_string(m.at("n").get<std::size_t>()) + "\n";
    }
    out += "ars," + num(res.at("ars")) + ",," + std::to_string(res.at("groups").get<std::size_t>()) + "\n";
  } else if (kind == "perturb") {
    out = "perturbation,variants,skipped\n";
    for (const auto& [p, c] : res.at("variants").items()) {
      out += p + "," + std::to_string(c.get<std::size_t>()) + "," +
             std::to_string(res.at("skipped").at(p).get<std::size_t>()) + "\n";
    }
  } else if (kind == "train" || kind == "convergence") {
    out = "model,steps_to_threshold\n";
    if (kind == "train") {
      const json& s = res.at("convergence").at("steps_to_threshold");
      out += res.at("model").at("name").get<std::string>() + "," +
             (s.is_null() ? std::string() : std::to_string(s.get<std::size_t>())) + "\n";
    } else {
      for (const auto& [name, s] : res.at("steps_to_threshold").items()) {
        out += csv_field(name) + "," + (s.is_null() ? std::string() : std::to_string(s.get<std::size_t>())) + "\n";
      }
    }
  } else if (kind == "align") {
    out = "n_max,items,exact\n" + std::to_string(res.at("n_max").get<std::size_t>()) + "," +
          std::to_string(res.at("items").get<std::size_t>()) + "," +
          std::to_string(res.at("exact").get<std::size_t>()) + "\n";
  } else if (kind == "paraphrase") {
    out = "provider,generated,excluded\n" + res.at("provider").get<std::string>() + "," +
          std::to_string(res.at("generated").get<std::size_t>()) + "," +
          std::to_string(res.at("excluded").size()) + "\n";
  } else {
    throw cdg::Error(cdg::ErrorCode::kInvalidArgument, "no CSV rendering for '" + kind + "' reports");
  }
  return out;
}

}  // namespace

extern "C" {

const char* cdg_version(void) { return CDG_VERSION; }
const char* cdg_last_error(void) { return g_error.c_str(); }
const char* cdg_last_error_code(void) { return g_error_code.c_str(); }
void cdg_string_free(char* s) { std::free(s); }

cdg_status cdg_config_new(cdg_config** out) {
  return guard([&] {
    require(out, "out");
    *out = new cdg_config{};
  });
}

cdg_status cdg_config_load(const char* path, cdg_config** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new cdg_config{cdg::load_config(path)};
  });
}

cdg_status cdg_config_set(cdg_config* cfg, const char* key, const char* value) {
  return guard([&] {
    require(cfg, "cfg");
    require(key, "key");
    require(value, "value");
    cdg::set_config_value(cfg->cfg, key, value);
  });
}

cdg_status cdg_config_get(const cdg_config* cfg, const char* key, char** out) {
  return guard([&] {
    require(cfg, "cfg");
    require(key, "key");
    require(out, "out");
    *out = dup(cdg::get_config_value(cfg->cfg, key));
  });
}

cdg_status cdg_config_keys(char** out) {
  return guard([&] {
    require(out, "out");
    std::string s;
    for (const auto& k : cdg::config_keys()) s += k + "\n";
    *out = dup(s);
  });
}

cdg_status cdg_config_json(const cdg_config* cfg, char** out) {
  return guard([&] {
    require(cfg, "cfg");
    require(out, "out");
    *out = dup(cdg::config_json(cfg->cfg));
  });
}

void cdg_config_free(cdg_config* cfg) { delete cfg; }

cdg_status cdg_dataset_load(const char* path, const char* format, const char* lang,
                            cdg_dataset** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    std::optional<cdg::DatasetKind> kind;
    const std::string f = format ? format : "auto";
    if (f == "tweet") {
      kind = cdg::DatasetKind::kTweet;
    } else if (f == "absa") {
      kind = cdg::DatasetKind::kAbsa;
    } else if (f != "auto") {
      throw cdg::Error(cdg::ErrorCode::kInvalidArgument, "unknown data format '" + f + "'");
    }
    const std::string bytes = read_file(path);
    auto* h = new cdg_dataset{cdg::load_dataset(path, kind, lang ? lang : "en"), path, sha256_hex(bytes)};
    *out = h;
  });
}

cdg_status cdg_dataset_save(const cdg_dataset* d, const char* path) {
  return guard([&] {
    require(d, "d");
    require(path, "path");
    cdg::save_dataset(d->data, path);
  });
}

size_t cdg_dataset_size(const cdg_dataset* d) { return d ? d->data.size() : 0; }

const char* cdg_dataset_kind(const cdg_dataset* d) {
  if (!d) return "";
  return d->data.kind == cdg::DatasetKind::kAbsa ? "absa" : "tweet";
}

cdg_status cdg_dataset_digest(const cdg_dataset* d, char** out) {
  return guard([&] {
    require(d, "d");
    require(out, "out");
    *out = dup(d->sha256);
  });
}

cdg_status cdg_dataset_summary(const cdg_dataset* d, char** out) {
  return guard([&] {
    require(d, "d");
    require(out, "out");
    json labels = {{"positive", 0}, {"negative", 0}, {"neutral", 0}};
    json langs = json::object();
    for (std::size_t i = 0; i < d->data.size(); ++i) {
      labels[std::string(cdg::label_name(d->data.label_at(i)))] =
          labels[std::string(cdg::label_name(d->data.label_at(i)))].get<std::size_t>() + 1;
      const std::string& lang =
          d->data.kind == cdg::DatasetKind::kAbsa ? d->data.absa[i].lang : d->data.tweets[i].lang;
      langs[lang] = langs.value(lang, 0) + 1;
    }
    const json j = {{"path", d->path}, {"sha256", d->sha256},
                    {"kind", cdg_dataset_kind(d)}, {"items", d->data.size()},
                    {"labels", labels}, {"languages", langs}};
    *out = dup(j.dump(2) + "\n");
  });
}

void cdg_dataset_free(cdg_dataset* d) { delete d; }

cdg_status cdg_model_load(const char* path, cdg_model** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    const std::string bytes = read_file(path);
    try {
      *out = new cdg_model{cdg::deserialize_model(bytes), sha256_hex(bytes)};
    } catch (const cdg::Error& e) {
      throw cdg::Error(e.code(), std::string(path) + ": " + e.what());
    }
  });
}

cdg_status cdg_model_save(const cdg_model* m, const char* path) {
  return guard([&] {
    require(m, "m");
    require(path, "path");
    cdg::save_model(m->model, path);
  });
}

const char* cdg_model_kind(const cdg_model* m) {
  if (!m) return "";
  return std::holds_alternative<cdg::ClassifierParams>(m->model) ? "classifier" : "absa";
}

int cdg_model_is_ct(const cdg_model* m) {
  return m && std::holds_alternative<cdg::AbsaModel>(m->model) && std::get<cdg::AbsaModel>(m->model).ct;
}

void cdg_model_free(cdg_model* m) { delete m; }

cdg_status cdg_train(const cdg_config* cfg, const cdg_dataset* train, const cdg_dataset* val,
                     int ct, cdg_model** model_out, char** report_json, char** trace_csv) {
  return guard([&] {
    require(cfg, "cfg");
    require(train, "train");
    const cdg::RunConfig& rc = cfg->cfg;
    const cdg::Embedder embedder = cdg::Embedder::from_spec(rc.embedder);
    const cdg::TextSettings text = text_settings(rc);
    const cdg::Dataset empty = cdg::Dataset{train->data.kind, {}, {}, {}};
    const cdg::Dataset& v = val ? val->data : empty;
    cdg::AnyModel model;
    cdg::TrainTrace trace;
    if (train->data.kind == cdg::DatasetKind::kTweet) {
      if (ct) throw cdg::Error(cdg::ErrorCode::kKindMismatch, "--ct needs absa training data");
      auto [p, t] = cdg::train_classifier(train->data, v, rc.train, embedder, text);
      model = std::move(p);
      trace = std::move(t);
    } else {
      auto [m, t] = cdg::train_absa(train->data, v, rc.train, ct != 0, embedder, text);
      model = std::move(m);
      trace = std::move(t);
    }
    auto h = std::make_unique<cdg_model>(cdg_model{std::move(model), {}});
    h->sha256 = sha256_hex(cdg::serialize_model(h->model));
    const std::string name = model_name(h->model);
    json inputs = {{"train", input_json(train)}};
    if (val) inputs["val"] = input_json(val);
    const auto steps = cdg::steps_to_threshold(trace, rc.convergence_threshold);
    const json result = {
        {"model", {{"name", name}, {"kind", cdg_model_kind(h.get())}, {"ct", ct != 0}, {"sha256", h->sha256}}},
        {"trace", trace_json(trace)},
        {"convergence",
         {{"threshold", rc.convergence_threshold}, {"steps_to_threshold", steps ? json(*steps) : json(nullptr)}}}};
    put(report_json, envelope("train", rc, inputs, result));
    put(trace_csv, cdg::trace_csv({{name, trace}}));
    if (model_out) *model_out = h.release();
  });
}

cdg_status cdg_eval(const cdg_config* cfg, const cdg_model* model, const cdg_dataset* data,
                    const char* mode, char** report_json, char** predictions_jsonl) {
  return guard([&] {
    require(cfg, "cfg");
    require(model, "model");
    require(data, "data");
    std::vector<cdg::Label> preds;
    std::string mode_name = "standard";
    if (const auto* p = std::get_if<cdg::ClassifierParams>(&model->model)) {
      if (parse_mode(mode) == cdg::InferMode::kTie) {
        throw cdg::Error(cdg::ErrorCode::kModeMismatch, "tie inference needs an absa model");
      }
      preds = cdg::predict_all(*p, data->data, cdg::Embedder::from_spec(p->embedder));
    } else {
      const auto& m = std::get<cdg::AbsaModel>(model->model);
      const cdg::InferMode im = parse_mode(mode).value_or(cdg::default_mode(m));
      mode_name = cdg::infer_mode_name(im);
      preds = cdg::predict_all(m, data->data, cdg::Embedder::from_spec(m.embedder), im);
    }
    const std::vector<cdg::Label> golds = data->data.labels();
    const json result = {{"mode", mode_name}, {"metrics", metrics_json(cdg::metrics(preds, golds))}};
    put(report_json, envelope("eval", cfg->cfg,
                              {{"model", input_json(model)}, {"data", input_json(data)}}, result));
    if (predictions_jsonl) {
      std::string out;
      for (std::size_t i = 0; i < preds.size(); ++i) {
        out += json{{"id", data->data.id_at(i)},
                    {"gold", cdg::label_name(golds[i])},
                    {"pred", cdg::label_name(preds[i])}}
                   .dump() +
               "\n";
      }
      *predictions_jsonl = dup(out);
    }
  });
}

cdg_status cdg_perturb(const cdg_config* cfg, const cdg_dataset* data, const char* lexicon_path,
                       const char* distractors_path, const cdg_model* model,
                       const char* predictions_path, const char* mode, char** revtgt_jsonl,
                       char** revnon_jsonl, char** adddiff_jsonl, char** report_json,
                       char** ars_json) {
  return guard([&] {
    require(cfg, "cfg");
    require(data, "data");
    require(lexicon_path, "lexicon_path");
    if (ars_json) *ars_json = nullptr;
    const cdg::SentimentLexicon lex = cdg::load_lexicon(lexicon_path);
    std::vector<cdg::Distractor> pool;
    if (distractors_path) pool = cdg::load_distractors(distractors_path);
    cdg::SuiteOptions opts;
    opts.seed = cfg->cfg.train.seed;
    const cdg::PerturbationSuite suite = cdg::build_suite(data->data, lex, pool, opts);

    json inputs = {{"data", input_json(data)}, {"lexicon", {{"path", lexicon_path}, {"sha256", sha256_hex(read_file(lexicon_path))}}}};
    if (distractors_path) {
      inputs["distractors"] = {{"path", distractors_path}, {"sha256", sha256_hex(read_file(distractors_path))}};
    }
    json variants = json::object();
    json skipped = json::object();
    json skip_rows = json::array();
    for (cdg::Perturbation p : {cdg::Perturbation::kRevTgt, cdg::Perturbation::kRevNon, cdg::Perturbation::kAddDiff}) {
      const std::string name(cdg::perturbation_name(p));
      variants[name] = suite.variants(p).size();
      skipped[name] = 0;
    }
    for (const auto& s : suite.skipped) {
      const std::string name(cdg::perturbation_name(s.perturbation));
      skipped[name] = skipped[name].get<std::size_t>() + 1;
      skip_rows.push_back({{"id", s.id}, {"perturbation", name}, {"reason", cdg::skip_reason_name(s.reason)}});
    }
    const json result = {{"groups", suite.groups.size()}, {"variants", variants},
                         {"skipped", skipped}, {"skip_list", skip_rows}};
    put(report_json, envelope("perturb", cfg->cfg, inputs, result));
    put(revtgt_jsonl, jsonl(suite.variants(cdg::Perturbation::kRevTgt)));
    put(revnon_jsonl, jsonl(suite.variants(cdg::Perturbation::kRevNon)));
    put(adddiff_jsonl, jsonl(suite.variants(cdg::Perturbation::kAddDiff)));

    if (!ars_json || (!model && !predictions_path)) return;
    cdg::SuiteEvaluation ev;
    std::string mode_name;
    if (model) {
      const auto* m = std::get_if<cdg::AbsaModel>(&model->model);
      if (!m) throw cdg::Error(cdg::ErrorCode::kKindMismatch, "ARS needs an absa model");
      const cdg::InferMode im = parse_mode(mode).value_or(cdg::default_mode(*m));
      mode_name = cdg::infer_mode_name(im);
      ev = cdg::evaluate_suite(*m, suite, cdg::Embedder::from_spec(m->embedder), im);
      inputs["model"] = input_json(model);
    } else {
      ev = cdg::evaluate_suite(suite, load_predictions(predictions_path));
      inputs["predictions"] = {{"path", predictions_path}, {"sha256", sha256_hex(read_file(predictions_path))}};
    }
    json by = json::object();
    for (const auto& [p, m] : ev.by_perturbation) by[p] = metrics_json(m);
    json ars = {{"ars", ev.ars}, {"groups", ev.groups},
                {"original_accuracy", ev.original_accuracy}, {"by_perturbation", by}};
    if (!mode_name.empty()) ars["mode"] = mode_name;
    *ars_json = dup(envelope("ars", cfg->cfg, inputs, ars));
  });
}

cdg_status cdg_align(const cdg_config* cfg, const cdg_dataset* data, size_t n_max,
                     cdg_dataset** aligned_out, char** rows_csv, char** report_json) {
  return guard([&] {
    require(cfg, "cfg");
    require(data, "data");
    const cdg::Embedder embedder = cdg::Embedder::from_spec(cfg->cfg.embedder);
    std::vector<cdg::AlignmentRow> rows;
    cdg::Dataset aligned = cdg::align_dataset(data->data, n_max, embedder,
                                              text_settings(cfg->cfg).stopword_set(), &rows);
    std::size_t exact = 0;
    for (const auto& r : rows) exact += r.exact ? 1 : 0;
    put(rows_csv, cdg::alignment_csv(rows));
    put(report_json, envelope("align", cfg->cfg, {{"data", input_json(data)}},
                              {{"n_max", n_max}, {"items", rows.size()}, {"exact", exact}}));
    if (aligned_out) *aligned_out = wrap(std::move(aligned));
  });
}

cdg_status cdg_paraphrase(const cdg_config* cfg, const cdg_dataset* data, const char* resume_ledger,
                          cdg_dataset** d2_out, char** ledger_jsonl, char** report_json) {
  return guard([&] {
    require(cfg, "cfg");
    require(data, "data");
    std::unique_ptr<cdg::RemoteClient> client;
    cdg::D2Options opts = d2_options(cfg->cfg, client);
    json inputs = {{"data", input_json(data)}};
    if (resume_ledger) {
      std::ifstream in(resume_ledger, std::ios::binary);
      if (!in) throw cdg::Error(cdg::ErrorCode::kFileNotFound, std::string("cannot open ledger ") + resume_ledger);
      opts.resume = cdg::parse_ledger(in);
      inputs["resume"] = {{"path", resume_ledger}, {"sha256", sha256_hex(read_file(resume_ledger))}};
    }
    cdg::D2Result r = cdg::generate_d2(data->data, opts);
    put(ledger_jsonl, cdg::ledger_jsonl(r.ledger));
    put(report_json, envelope("paraphrase", cfg->cfg, inputs,
                              {{"provider", cdg::provider_name(opts.provider)},
                               {"generated", r.d2.size()},
                               {"excluded", r.excluded}}));
    if (d2_out) *d2_out = wrap(std::move(r.d2));
  });
}

cdg_status cdg_cda_run(const cdg_config* cfg, const cdg_dataset* d1, const cdg_dataset* d2,
                       char** report_json, char** report_csv, char** trace_csv) {
  return guard([&] {
    require(cfg, "cfg");
    require(d1, "d1");
    const cdg::RunConfig& rc = cfg->cfg;
    std::unique_ptr<cdg::RemoteClient> client;
    cdg::CdaOptions opts;
    opts.train = rc.train;
    opts.seeds = rc.cda_seeds;
    opts.ratios = rc.split;
    opts.text = text_settings(rc);
    json inputs = {{"d1", input_json(d1)}};
    if (d2) {
      opts.d2 = d2->data;
      inputs["d2"] = input_json(d2);
    } else {
      opts.paraphrase = d2_options(rc, client);
    }
    const cdg::CdaReport r = cdg::run_cda(d1->data, cdg::Embedder::from_spec(rc.embedder), opts);
    put(report_json, envelope("cda", rc, inputs, json::parse(cdg::cda_report_json(r))));
    put(report_csv, cdg::cda_report_csv(r));
    if (trace_csv) {
      std::map<std::string, cdg::TrainTrace> traces;
      for (const auto& s : r.per_seed) {
        for (cdg::CdaDomain t : cdg::kCdaDomains) {
          traces[std::string(cdg::cda_domain_name(t)) + "@" + std::to_string(s.seed)] =
              s.traces[static_cast<int>(t)];
        }
      }
      *trace_csv = dup(cdg::trace_csv(traces));
    }
  });
}

cdg_status cdg_ood_run(const cdg_config* cfg, const cdg_dataset* const* datasets, size_t n_datasets,
                       const char* train_lang, int ct, char** report_json, char** trace_csv) {
  return guard([&] {
    require(cfg, "cfg");
    require(train_lang, "train_lang");
    if (n_datasets > 0) require(datasets, "datasets");
    std::map<std::string, std::vector<cdg::AbsaInstance>> by_lang;
    json inputs = json::array();
    for (size_t i = 0; i < n_datasets; ++i) {
      require(datasets[i], "dataset");
      if (datasets[i]->data.kind != cdg::DatasetKind::kAbsa) {
        throw cdg::Error(cdg::ErrorCode::kKindMismatch,
                         "cross-language runs need absa data: " + datasets[i]->path);
      }
      for (const auto& inst : datasets[i]->data.absa) by_lang[inst.lang].push_back(inst);
      inputs.push_back(input_json(datasets[i]));
    }
    std::map<std::string, cdg::Dataset> langs;
    for (auto& [lang, items] : by_lang) langs[lang] = cdg::Dataset::of_absa(std::move(items));
    const cdg::RunConfig& rc = cfg->cfg;
    cdg::OodOptions opts;
    opts.train = rc.train;
    opts.ratios = rc.split;
    opts.text = text_settings(rc);
    const cdg::OodReport r =
        cdg::run_ood(langs, train_lang, ct != 0, cdg::Embedder::from_spec(rc.embedder), opts);
    put(report_json, envelope("ood", rc, {{"datasets", inputs}}, json::parse(cdg::ood_report_json(r))));
    put(trace_csv, cdg::trace_csv({{ct ? "ct" : "standard", r.trace}}));
  });
}

cdg_status cdg_report_render(const char* report_json, char** csv, char** plot_csv) {
  return guard([&] {
    require(report_json, "report_json");
    const json r = json::parse(report_json);
    if (!r.is_object() || !r.contains("report") || !r.contains("result")) {
      throw cdg::Error(cdg::ErrorCode::kMissingField, "not a cdg report", std::nullopt, "report");
    }
    put(csv, render_csv(r));
    put(plot_csv, cdg::trace_csv(report_traces(r)));
  });
}

cdg_status cdg_report_convergence(const char* const* report_jsons, const char* const* names, size_t n,
                                  double threshold, char** report_json, char** trace_csv) {
  return guard([&] {
    if (n == 0) throw cdg::Error(cdg::ErrorCode::kInvalidArgument, "no reports given");
    require(report_jsons, "report_jsons");
    std::map<std::string, cdg::TrainTrace> traces;
    json inputs = json::object();
    for (size_t i = 0; i < n; ++i) {
      require(report_jsons[i], "report");
      const json r = json::parse(report_jsons[i]);
      const auto found = report_traces(r);
      if (found.size() != 1) {
        throw cdg::Error(cdg::ErrorCode::kInvalidArgument, "convergence needs train reports with one trace each");
      }
      const std::string name = (names && names[i]) ? names[i] : found.begin()->first;
      if (traces.count(name)) {
        throw cdg::Error(cdg::ErrorCode::kDuplicateId, "two traces named '" + name + "'");
      }
      traces[name] = found.begin()->second;
      inputs[name] = {{"sha256", sha256_hex(report_jsons[i])}};
    }
    const cdg::ConvergenceReport c = cdg::convergence_report(traces, threshold);
    const json j = {{"tool", "cdg"},
                    {"version", CDG_VERSION},
                    {"report", "convergence"},
                    {"inputs", inputs},
                    {"result", json::parse(cdg::convergence_json(c))}};
    put(report_json, j.dump(2) + "\n");
    put(trace_csv, cdg::trace_csv(traces));
  });
}

cdg_status cdg_synth_absa(size_t n_sentences, double rho, double rho_test, uint64_t seed,
                          cdg_dataset** train_out, cdg_dataset** test_out, char** lexicon_json,
                          char** distractors_json) {
  return guard([&] {
    cdg::SpuriousSpec spec;
    spec.n_sentences = n_sentences;
    spec.rho = rho;
    spec.rho_test = rho_test;
    spec.seed = seed;
    spec.vocab = cdg::SpuriousSpec::default_vocab();
    cdg::SpuriousBench b = cdg::gen_spurious_absa(spec);
    put(lexicon_json, cdg::lexicon_json(b.lexicon));
    put(distractors_json, cdg::distractors_json(b.distractors));
    if (train_out) *train_out = wrap(std::move(b.train));
    if (test_out) *test_out = wrap(std::move(b.test));
  });
}

cdg_status cdg_synth_tweets(size_t n, double shift, uint64_t seed, cdg_dataset** out,
                            char** synonyms_json) {
  return guard([&] {
    cdg::ShiftedTweets t = cdg::gen_shifted_tweets(n, shift, seed);
    put(synonyms_json, cdg::synonyms_json(t.synonyms));
    if (out) *out = wrap(std::move(t.d1));
  });
}

}  // extern "C"
