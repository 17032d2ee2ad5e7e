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

// cdg command-line tool. Talks to the library only through cdg.h.

#include <cdg/cdg.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace fs = std::filesystem;

namespace {

// Thrown on a failing library call; carries the exit code.
struct Failure {
  int exit_code;
};

int exit_code_of(cdg_status s) {
  switch (s) {
    case CDG_OK: return 0;
    case CDG_ERR_USAGE: return 1;
    case CDG_ERR_DATA: return 2;
    case CDG_ERR_RUNTIME:
    case CDG_ERR_PROVIDER: break;
  }
  return 3;
}

void check(cdg_status s) {
  if (s == CDG_OK) return;
  std::cerr << "cdg: error [" << cdg_last_error_code() << "]: " << cdg_last_error() << "\n";
  throw Failure{exit_code_of(s)};
}

[[noreturn]] void usage_error(const std::string& msg) {
  std::cerr << "cdg: error: " << msg << "\n";
  throw Failure{1};
}

struct ConfigDeleter { void operator()(cdg_config* p) const { cdg_config_free(p); } };
struct DatasetDeleter { void operator()(cdg_dataset* p) const { cdg_dataset_free(p); } };
struct ModelDeleter { void operator()(cdg_model* p) const { cdg_model_free(p); } };
using Config = std::unique_ptr<cdg_config, ConfigDeleter>;
using DatasetPtr = std::unique_ptr<cdg_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<cdg_model, ModelDeleter>;

// Owns a string returned by the library.
struct Str {
  char* p = nullptr;
  ~Str() { cdg_string_free(p); }
  char** out() { return &p; }
  std::string str() const { return p ? p : ""; }
  explicit operator bool() const { return p != nullptr; }
};

void write_file(const fs::path& path, const std::string& data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << data;
  if (!out) {
    std::cerr << "cdg: error [Io]: cannot write " << path.string() << "\n";
    throw Failure{3};
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "cdg: error [FileNotFound]: cannot open " << path << "\n";
    throw Failure{2};
  }
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Options shared by every subcommand.
struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> sets;
  bool plot_data = false;
};

struct Options {
  std::vector<std::string> data;
  std::string val;
  std::string format;
  std::string lang;
  std::string stopwords;
  std::string model;
  std::string out;
  std::string mode;
  std::string lexicon;
  std::string distractors;
  std::string predictions;
  std::string provider;
  std::string seeds;
  std::string synonyms;
  std::string resume;
  std::string d2;
  std::string train_lang;
  std::vector<std::string> inputs;
  std::vector<std::string> names;
  std::optional<double> threshold;
  bool ct = false;
  std::size_t n_max = 4;
  std::size_t n = 0;
  double rho = 0.9;
  double rho_test = 0.1;
  double shift = 0.5;
};

class Run {
 public:
  Run(const Common& c, const Options& o) {
    cdg_config* raw = nullptr;
    check(c.config.empty() ? cdg_config_new(&raw) : cdg_config_load(c.config.c_str(), &raw));
    cfg_.reset(raw);
    // Flags override the file.
    if (c.seed) set("train.seed", std::to_string(*c.seed));
    if (!c.out_dir.empty()) set("output.dir", c.out_dir);
    if (!o.format.empty()) set("data.format", o.format);
    if (!o.lang.empty()) set("data.lang", o.lang);
    if (!o.stopwords.empty()) set("data.stopwords", o.stopwords);
    if (!o.data.empty()) set("data.train", o.data.front());
    if (!o.val.empty()) set("data.val", o.val);
    if (!o.provider.empty()) set("cda.provider", o.provider);
    if (!o.seeds.empty()) set("cda.seeds", o.seeds);
    if (!o.synonyms.empty()) set("cda.synonyms", o.synonyms);
    if (o.threshold) set("output.convergence_threshold", std::to_string(*o.threshold));
    for (const auto& kv : c.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) usage_error("--set expects key=value, got '" + kv + "'");
      set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    out_dir_ = get("output.dir");
    const std::string formats = "," + get("output.formats") + ",";
    json_ = formats.find(",json,") != std::string::npos;
    csv_ = formats.find(",csv,") != std::string::npos;
  }

  cdg_config* cfg() const { return cfg_.get(); }

  std::string get(const std::string& key) const {
    Str s;
    check(cdg_config_get(cfg_.get(), key.c_str(), s.out()));
    return s.str();
  }

  DatasetPtr load(const std::string& path) const {
    cdg_dataset* raw = nullptr;
    const std::string format = get("data.format");
    const std::string lang = get("data.lang");
    check(cdg_dataset_load(path.c_str(), format.c_str(), lang.c_str(), &raw));
    return DatasetPtr(raw);
  }

  DatasetPtr train_data() const {
    const std::string p = get("data.train");
    if (p.empty()) usage_error("no input data (use --data or data.train)");
    return load(p);
  }

  DatasetPtr optional_data(const std::string& key) const {
    const std::string p = get(key);
    return p.empty() ? nullptr : load(p);
  }

  fs::path out(const std::string& name) const { return fs::path(out_dir_) / name; }

  void emit_json(const std::string& name, const Str& s) const {
    if (json_ && s) write_file(out(name), s.str());
  }
  void emit_csv(const std::string& name, const Str& s) const {
    if (csv_ && s) write_file(out(name), s.str());
  }
  void emit(const std::string& name, const Str& s) const {
    if (s) write_file(out(name), s.str());
  }

 private:
  void set(const std::string& key, const std::string& value) {
    check(cdg_config_set(cfg_.get(), key.c_str(), value.c_str()));
  }

  Config cfg_;
  std::string out_dir_;
  bool json_ = true;
  bool csv_ = true;
};

ModelPtr load_model(const std::string& path) {
  cdg_model* raw = nullptr;
  check(cdg_model_load(path.c_str(), &raw));
  return ModelPtr(raw);
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

void cmd_ingest(const Run& r, const Options& o) {
  if (o.data.empty()) usage_error("ingest needs --data");
  for (const auto& path : o.data) {
    const DatasetPtr d = r.load(path);
    Str summary;
    check(cdg_dataset_summary(d.get(), summary.out()));
    const std::string name = fs::path(path).filename().string();
    check(cdg_dataset_save(d.get(), r.out("ingest/" + name).string().c_str()));
    write_file(r.out("ingest/" + name + ".summary.json"), summary.str());
    std::cout << summary.str();
  }
}

void cmd_train(const Run& r, const Options& o, const Common& c) {
  const DatasetPtr train = r.train_data();
  const DatasetPtr val = r.optional_data("data.val");
  cdg_model* raw = nullptr;
  Str report, trace;
  check(cdg_train(r.cfg(), train.get(), val.get(), o.ct ? 1 : 0, &raw, report.out(), trace.out()));
  const ModelPtr model(raw);
  const fs::path path = o.out.empty() ? r.out("model.bin") : fs::path(o.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  check(cdg_model_save(model.get(), path.string().c_str()));
  r.emit_json("train_report.json", report);
  if (c.plot_data) r.emit("trace.csv", trace);
  std::cout << "wrote " << path.string() << "\n";
}

void cmd_eval(const Run& r, const Options& o) {
  if (o.model.empty()) usage_error("eval needs --model");
  const ModelPtr model = load_model(o.model);
  const DatasetPtr data = r.train_data();
  Str report, preds;
  check(cdg_eval(r.cfg(), model.get(), data.get(), opt(o.mode), report.out(), preds.out()));
  r.emit_json("eval_report.json", report);
  r.emit("predictions.jsonl", preds);
  std::cout << report.str();
}

void cmd_perturb(const Run& r, const Options& o) {
  if (o.lexicon.empty()) usage_error("perturb needs --lexicon");
  const DatasetPtr data = r.train_data();
  ModelPtr model;
  if (!o.model.empty()) model = load_model(o.model);
  Str revtgt, revnon, adddiff, report, ars;
  check(cdg_perturb(r.cfg(), data.get(), o.lexicon.c_str(), opt(o.distractors), model.get(),
                    opt(o.predictions), opt(o.mode), revtgt.out(), revnon.out(), adddiff.out(),
                    report.out(), ars.out()));
  r.emit("perturb/revtgt.jsonl", revtgt);
  r.emit("perturb/revnon.jsonl", revnon);
  r.emit("perturb/adddiff.jsonl", adddiff);
  r.emit_json("perturb_report.json", report);
  if (ars) {
    r.emit("ars.json", ars);
    std::cout << ars.str();
  } else {
    std::cout << report.str();
  }
}

void cmd_align(const Run& r, const Options& o) {
  const DatasetPtr data = r.train_data();
  cdg_dataset* raw = nullptr;
  Str rows, report;
  check(cdg_align(r.cfg(), data.get(), o.n_max, &raw, rows.out(), report.out()));
  const DatasetPtr aligned(raw);
  const fs::path path = o.out.empty() ? r.out("aligned.jsonl") : fs::path(o.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  check(cdg_dataset_save(aligned.get(), path.string().c_str()));
  r.emit_csv("alignment.csv", rows);
  r.emit_json("align_report.json", report);
}

void cmd_paraphrase(const Run& r, const Options& o) {
  const DatasetPtr data = r.train_data();
  cdg_dataset* raw = nullptr;
  Str ledger, report;
  check(cdg_paraphrase(r.cfg(), data.get(), opt(o.resume), &raw, ledger.out(), report.out()));
  const DatasetPtr d2(raw);
  const fs::path path = o.out.empty() ? r.out("d2.tsv") : fs::path(o.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  check(cdg_dataset_save(d2.get(), path.string().c_str()));
  r.emit("paraphrase_ledger.jsonl", ledger);
  r.emit_json("paraphrase_report.json", report);
  std::cout << report.str();
  if (cdg_dataset_size(d2.get()) == 0 && cdg_dataset_size(data.get()) > 0) {
    std::cerr << "cdg: error: every paraphrase failed; see paraphrase_ledger.jsonl\n";
    throw Failure{3};
  }
}

void cmd_cda(const Run& r, const Options& o, const Common& c) {
  const DatasetPtr d1 = r.train_data();
  DatasetPtr d2;
  if (!o.d2.empty()) d2 = r.load(o.d2);
  Str report, csv, trace;
  check(cdg_cda_run(r.cfg(), d1.get(), d2.get(), report.out(), csv.out(), trace.out()));
  r.emit_json("cda_report.json", report);
  r.emit_csv("cda_report.csv", csv);
  if (c.plot_data) r.emit("cda_traces.csv", trace);
}

void cmd_ood(const Run& r, const Options& o, const Common& c) {
  if (o.data.empty()) usage_error("ood-run needs --data");
  if (o.train_lang.empty()) usage_error("ood-run needs --train-lang");
  std::vector<DatasetPtr> owned;
  std::vector<const cdg_dataset*> handles;
  for (const auto& p : o.data) {
    owned.push_back(r.load(p));
    handles.push_back(owned.back().get());
  }
  Str report, trace;
  check(cdg_ood_run(r.cfg(), handles.data(), handles.size(), o.train_lang.c_str(), o.ct ? 1 : 0,
                    report.out(), trace.out()));
  r.emit_json("ood_report.json", report);
  if (c.plot_data) r.emit("ood_traces.csv", trace);
  std::cout << report.str();
}

void cmd_report(const Run& r, const Options& o, const Common& c) {
  if (o.inputs.empty()) usage_error("report needs --input");
  std::vector<std::string> texts;
  for (const auto& path : o.inputs) {
    texts.push_back(read_file(path));
    Str csv, plot;
    check(cdg_report_render(texts.back().c_str(), csv.out(), plot.out()));
    const std::string stem = fs::path(path).stem().string();
    r.emit(stem + ".csv", csv);
    if (c.plot_data) r.emit(stem + "_trace.csv", plot);
  }
  if (!o.threshold) return;
  if (!o.names.empty() && o.names.size() != o.inputs.size()) {
    usage_error("--name must be given once per --input");
  }
  std::vector<const char*> ptrs, names;
  for (const auto& t : texts) ptrs.push_back(t.c_str());
  for (const auto& n : o.names) names.push_back(n.c_str());
  Str report, trace;
  check(cdg_report_convergence(ptrs.data(), names.empty() ? nullptr : names.data(), ptrs.size(),
                               *o.threshold, report.out(), trace.out()));
  r.emit("convergence.json", report);
  if (c.plot_data) r.emit("convergence_trace.csv", trace);
  std::cout << report.str();
}

void cmd_synth_absa(const Run& r, const Options& o, const Common& c) {
  cdg_dataset *train = nullptr, *test = nullptr;
  Str lex, pool;
  check(cdg_synth_absa(o.n == 0 ? 5000 : o.n, o.rho, o.rho_test, c.seed.value_or(0), &train, &test,
                       lex.out(), pool.out()));
  const DatasetPtr tr(train), te(test);
  fs::create_directories(r.out(""));
  check(cdg_dataset_save(tr.get(), r.out("synth_train.jsonl").string().c_str()));
  check(cdg_dataset_save(te.get(), r.out("synth_test.jsonl").string().c_str()));
  r.emit("lexicon.json", lex);
  r.emit("distractors.json", pool);
}

void cmd_synth_tweets(const Run& r, const Options& o, const Common& c) {
  cdg_dataset* raw = nullptr;
  Str syn;
  check(cdg_synth_tweets(o.n == 0 ? 1500 : o.n, o.shift, c.seed.value_or(0), &raw, syn.out()));
  const DatasetPtr d(raw);
  fs::create_directories(r.out(""));
  check(cdg_dataset_save(d.get(), r.out("tweets.tsv").string().c_str()));
  r.emit("synonyms.json", syn);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal domain generalization toolkit for low-resource sentiment classification"};
  app.set_version_flag("--version", std::string(cdg_version()));
  app.require_subcommand(1);
  app.fallthrough();
  app.footer("Exit status: 0 success, 1 usage error, 2 data error, 3 runtime or provider error.\n"
             "Config values are overridden by flags; the paraphrase API key is read from CDG_API_KEY.");

  Common c;
  Options o;
  app.add_option("--config", c.config, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", c.seed, "Seed for every random choice (train.seed)");
  app.add_option("--out-dir", c.out_dir, "Output directory (output.dir)");
  app.add_option("--set", c.sets, "Override a config key: section.key=value");
  app.add_flag("--plot-data", c.plot_data, "Also write step/accuracy CSVs");

  auto data_opts = [&](CLI::App* s, bool many = false) {
    if (many) {
      s->add_option("--data", o.data, "Input dataset file(s)");
    } else {
      s->add_option("--data", o.data, "Input dataset file (data.train)")->expected(1);
    }
    s->add_option("--format", o.format, "auto, tweet or absa (data.format)");
    s->add_option("--lang", o.lang, "Language code for tweet files (data.lang)");
    s->add_option("--stopwords", o.stopwords, "Stopword list, one per line (data.stopwords)");
  };

  auto* ingest = app.add_subcommand("ingest", "Validate and normalize data files");
  data_opts(ingest, true);

  auto* train = app.add_subcommand("train", "Train a tweet classifier or an aspect model");
  data_opts(train);
  train->add_option("--val", o.val, "Validation dataset (data.val)");
  train->add_flag("--ct", o.ct, "Causal training (absa data only)");
  train->add_option("--out", o.out, "Model path (default <out-dir>/model.bin)");
  train->add_option("--threshold", o.threshold,
                    "Validation accuracy for steps-to-threshold (output.convergence_threshold)");

  auto* eval = app.add_subcommand("eval", "Score a saved model on a dataset");
  data_opts(eval);
  eval->add_option("--model", o.model, "Model file")->required();
  eval->add_option("--mode", o.mode, "standard or tie (default: tie for causal models)")
      ->check(CLI::IsMember({"standard", "tie"}));

  auto* perturb = app.add_subcommand("perturb", "Build RevTgt/RevNon/AddDiff suites and ARS");
  data_opts(perturb);
  perturb->add_option("--lexicon", o.lexicon, "Sentiment lexicon JSON")->required();
  perturb->add_option("--distractors", o.distractors, "Distractor pool JSON");
  perturb->add_option("--model", o.model, "Aspect model for ARS");
  perturb->add_option("--predictions", o.predictions, "Predictions JSONL (id, pred) for ARS");
  perturb->add_option("--mode", o.mode, "standard or tie")->check(CLI::IsMember({"standard", "tie"}));

  auto* align = app.add_subcommand("align", "Re-span aspects in an absa JSONL file");
  data_opts(align);
  align->add_option("--n-max", o.n_max, "Longest n-gram considered")->capture_default_str();
  align->add_option("--out", o.out, "Output path (default <out-dir>/aligned.jsonl)");

  auto* para = app.add_subcommand("paraphrase", "Generate the paraphrased domain");
  data_opts(para);
  para->add_option("--provider", o.provider, "remote or stub (cda.provider)");
  para->add_option("--synonyms", o.synonyms, "Synonym map JSON for the stub (cda.synonyms)");
  para->add_option("--resume", o.resume, "Ledger of an earlier run to resume from");
  para->add_option("--out", o.out, "Output path (default <out-dir>/d2.tsv)");

  auto* cda = app.add_subcommand("cda-run", "Cross-domain augmentation experiment");
  data_opts(cda);
  cda->add_option("--d2", o.d2, "Pre-built paraphrased dataset, index-aligned with --data");
  cda->add_option("--provider", o.provider, "remote or stub (cda.provider)");
  cda->add_option("--seeds", o.seeds, "Comma-separated run seeds (cda.seeds)");
  cda->add_option("--synonyms", o.synonyms, "Synonym map JSON for the stub (cda.synonyms)");

  auto* ood = app.add_subcommand("ood-run", "Cross-language experiment");
  data_opts(ood, true);
  ood->add_option("--train-lang", o.train_lang, "Language to train on")->required();
  ood->add_flag("--ct", o.ct, "Causal training");

  auto* report = app.add_subcommand("report", "Render JSON reports as CSV");
  report->add_option("--input", o.inputs, "Report JSON file(s)")->required();
  report->add_option("--threshold", o.threshold, "Emit steps-to-threshold over the inputs' traces");
  report->add_option("--name", o.names, "Trace name for each input (with --threshold)");

  auto* sabsa = app.add_subcommand("synth-absa", "Generate the spurious-correlation aspect benchmark");
  sabsa->add_option("--n", o.n, "Sentences (default 5000)");
  sabsa->add_option("--rho", o.rho, "Context/gold agreement in train")->capture_default_str();
  sabsa->add_option("--rho-test", o.rho_test, "Context/gold agreement in test")->capture_default_str();

  auto* stweets = app.add_subcommand("synth-tweets", "Generate template tweets and a synonym map");
  stweets->add_option("--n", o.n, "Tweets (default 1500)");
  stweets->add_option("--shift", o.shift, "Fraction of vocabulary given a synonym")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const Run r(c, o);
    if (*ingest) cmd_ingest(r, o);
    if (*train) cmd_train(r, o, c);
    if (*eval) cmd_eval(r, o);
    if (*perturb) cmd_perturb(r, o);
    if (*align) cmd_align(r, o);
    if (*para) cmd_paraphrase(r, o);
    if (*cda) cmd_cda(r, o, c);
    if (*ood) cmd_ood(r, o, c);
    if (*report) cmd_report(r, o, c);
    if (*sabsa) cmd_synth_absa(r, o, c);
    if (*stweets) cmd_synth_tweets(r, o, c);
  } catch (const Failure& f) {
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "cdg: error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
