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

#include "cdg/eval.hpp"

#include <cmath>
#include <sstream>

#include "cdg/error.hpp"
#include "json.hpp"

namespace cdg {

namespace {

using json = nlohmann::json;

void check_pair(const std::vector<Label>& preds, const std::vector<Label>& golds) {
  if (preds.size() != golds.size()) {
    throw Error(ErrorCode::kSizeMismatch, std::to_string(preds.size()) + " predictions for " +
                                              std::to_string(golds.size()) + " gold labels");
  }
  if (preds.empty()) throw Error(ErrorCode::kInvalidArgument, "no predictions to score");
}

json trace_json(const TrainTrace& t) {
  json arr = json::array();
  for (const auto& r : t.records) {
    arr.push_back({{"step", r.step}, {"train_loss", r.train_loss}, {"val_accuracy", r.val_accuracy}});
  }
  return arr;
}

json metrics_json(const Metrics& m) {
  return {{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}, {"n", m.n}};
}

json matrix_json(const CdaMatrix& m) {
  json j = json::object();
  for (CdaDomain t : kCdaDomains) {
    for (CdaDomain e : kCdaDomains) {
      j[std::string(cda_domain_name(t))][std::string(cda_domain_name(e))] =
          m[static_cast<int>(t)][static_cast<int>(e)];
    }
  }
  return j;
}

json row_json(const std::array<double, 3>& row) {
  json j = json::object();
  for (CdaDomain t : kCdaDomains) j[std::string(cda_domain_name(t))] = row[static_cast<int>(t)];
  return j;
}

}  // namespace

double accuracy(const std::vector<Label>& preds, const std::vector<Label>& golds) {
  check_pair(preds, golds);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) ok += preds[i] == golds[i];
  return static_cast<double>(ok) / static_cast<double>(preds.size());
}

double macro_f1(const std::vector<Label>& preds, const std::vector<Label>& golds) {
  check_pair(preds, golds);
  std::array<std::size_t, kNumClasses> tp{}, fp{}, fn{};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = label_index(preds[i]);
    const int g = label_index(golds[i]);
    if (p == g) {
      ++tp[p];
    } else {
      ++fp[p];
      ++fn[g];
    }
  }
  double sum = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    const std::size_t denom = 2 * tp[c] + fp[c] + fn[c];
    if (denom > 0) sum += 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
  }
  return sum / kNumClasses;
}

Metrics metrics(const std::vector<Label>& preds, const std::vector<Label>& golds) {
  return Metrics{accuracy(preds, golds), macro_f1(preds, golds), preds.size()};
}

double delta_inv(double acc_d1, double acc_d2) {
  if (!(acc_d1 >= 0 && acc_d1 <= 1) || !(acc_d2 >= 0 && acc_d2 <= 1)) {
    throw Error(ErrorCode::kInvalidArgument, "accuracies must lie in [0, 1]");
  }
  return std::round(std::abs(acc_d1 - acc_d2) * 1e12) / 1e12;
}

std::vector<Label> predict_all(const ClassifierParams& p, const Dataset& d, const Embedder& e) {
  if (d.kind != DatasetKind::kTweet) throw Error(ErrorCode::kKindMismatch, "classifier needs tweets");
  std::vector<Label> out;
  out.reserve(d.size());
  for (const auto& t : d.tweets) out.push_back(predict(p, t.text, e).label);
  return out;
}

std::vector<Label> predict_all(const AbsaModel& m, const Dataset& d, const Embedder& e,
                               InferMode mode) {
  if (d.kind != DatasetKind::kAbsa) throw Error(ErrorCode::kKindMismatch, "model needs absa data");
  std::vector<Label> out;
  out.reserve(d.size());
  for (const auto& inst : d.absa) {
    out.push_back(infer_from_branches(m, forward_inputs(m, make_inputs(m, inst, e)), mode).label);
  }
  return out;
}

InferMode default_mode(const AbsaModel& m) { return m.ct ? InferMode::kTie : InferMode::kStandard; }

std::string_view cda_domain_name(CdaDomain d) {
  switch (d) {
    case CdaDomain::kOriginal: return "original";
    case CdaDomain::kParaphrased: return "paraphrased";
    case CdaDomain::kCombined: return "combined";
  }
  return "original";
}

CdaReport run_cda(const Dataset& d1_in, const Embedder& embedder, const CdaOptions& opts) {
  if (d1_in.kind != DatasetKind::kTweet) {
    throw Error(ErrorCode::kKindMismatch, "the augmentation experiment needs tweet data");
  }
  if (opts.seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "no seeds given");
  if (opts.d2 && opts.d2->size() != d1_in.size()) {
    throw Error(ErrorCode::kSizeMismatch, "D2 is not index-aligned with D1");
  }
  CdaReport report;
  report.seeds = opts.seeds;
  for (std::uint64_t seed : opts.seeds) {
    Dataset d1 = d1_in;
    Dataset d2;
    if (opts.d2) {
      d2 = *opts.d2;
    } else {
      D2Options p = opts.paraphrase;
      p.seed = seed;
      D2Result gen = generate_d2(d1_in, p);
      if (!gen.excluded.empty()) {
        // Keep the domains index-aligned.
        std::vector<std::size_t> keep;
        std::size_t e = 0;
        for (std::size_t i = 0; i < d1_in.size(); ++i) {
          if (e < gen.excluded.size() && gen.excluded[e] == d1_in.tweets[i].id) {
            ++e;
          } else {
            keep.push_back(i);
          }
        }
        d1 = d1_in.subset(keep);
        for (const auto& id : gen.excluded) report.excluded.push_back(id);
      }
      d2 = std::move(gen.d2);
    }
    const SplitIndices idx = split_indices(d1.labels(), opts.ratios, seed, opts.stratify);
    const Splits s1 = apply_split(d1, idx);
    const Splits s2 = apply_split(d2, idx);
    const Splits sc{make_combined(s1.train, s2.train, seed), make_combined(s1.val, s2.val, seed),
                    make_combined(s1.test, s2.test, seed)};
    const std::array<const Splits*, 3> by_domain = {&s1, &s2, &sc};

    CdaSeedResult r;
    r.seed = seed;
    TrainConfig cfg = opts.train;
    cfg.seed = seed;
    for (CdaDomain t : kCdaDomains) {
      const int ti = static_cast<int>(t);
      const Splits& tr = *by_domain[static_cast<std::size_t>(ti)];
      auto [model, trace] = train_classifier(tr.train, tr.val, cfg, embedder, opts.text);
      r.traces[static_cast<std::size_t>(ti)] = std::move(trace);
      for (CdaDomain e : kCdaDomains) {
        const Dataset& val = by_domain[static_cast<std::size_t>(e)]->val;
        r.matrix[ti][static_cast<int>(e)] =
            accuracy(predict_all(model, val, embedder), val.labels());
      }
      r.test_row[static_cast<std::size_t>(ti)] =
          accuracy(predict_all(model, s1.test, embedder), s1.test.labels());
      r.delta_inv[static_cast<std::size_t>(ti)] = delta_inv(r.matrix[ti][0], r.matrix[ti][1]);
    }
    report.per_seed.push_back(std::move(r));
  }

  const double n = static_cast<double>(report.per_seed.size());
  for (const auto& r : report.per_seed) {
    for (int t = 0; t < 3; ++t) {
      for (int e = 0; e < 3; ++e) report.matrix[t][e] += r.matrix[t][e] / n;
      report.test_row[t] += r.test_row[t] / n;
    }
  }
  for (int t = 0; t < 3; ++t) {
    report.delta_inv[t] = std::abs(report.matrix[t][0] - report.matrix[t][1]);
  }
  return report;
}

std::string cda_report_json(const CdaReport& r) {
  json per_seed = json::array();
  for (const auto& s : r.per_seed) {
    json traces = json::object();
    for (CdaDomain t : kCdaDomains) {
      traces[std::string(cda_domain_name(t))] = trace_json(s.traces[static_cast<int>(t)]);
    }
    per_seed.push_back({{"seed", s.seed},
                        {"matrix", matrix_json(s.matrix)},
                        {"test_row", row_json(s.test_row)},
                        {"delta_inv", row_json(s.delta_inv)},
                        {"traces", traces}});
  }
  const json j = {{"seeds", r.seeds},
                  {"matrix", matrix_json(r.matrix)},
                  {"test_row", row_json(r.test_row)},
                  {"delta_inv", row_json(r.delta_inv)},
                  {"per_seed", per_seed},
                  {"excluded", r.excluded}};
  return j.dump(2) + "\n";
}

std::string cda_report_csv(const CdaReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "seed,train,eval,accuracy\n";
  auto rows = [&](const std::string& seed, const CdaMatrix& m, const std::array<double, 3>& test) {
    for (CdaDomain t : kCdaDomains) {
      for (CdaDomain e : kCdaDomains) {
        out << seed << ',' << cda_domain_name(t) << ',' << cda_domain_name(e) << ','
            << m[static_cast<int>(t)][static_cast<int>(e)] << '\n';
      }
      out << seed << ',' << cda_domain_name(t) << ",test," << test[static_cast<int>(t)] << '\n';
    }
  };
  rows("mean", r.matrix, r.test_row);
  for (const auto& s : r.per_seed) rows(std::to_string(s.seed), s.matrix, s.test_row);
  return out.str();
}

OodReport run_ood(const std::map<std::string, Dataset>& datasets, const std::string& train_lang,
                  bool ct, const Embedder& embedder, const OodOptions& opts) {
  const auto it = datasets.find(train_lang);
  if (it == datasets.end()) {
    throw Error(ErrorCode::kMissingLanguage, "no dataset for training language '" + train_lang + "'");
  }
  if (datasets.size() < 2) {
    throw Error(ErrorCode::kMissingLanguage, "need at least one language besides '" + train_lang + "'");
  }
  const std::uint64_t seed = opts.train.seed;
  const Splits home = split(it->second, opts.ratios, seed, opts.stratify);
  auto [model, trace] = train_absa(home.train, home.val, opts.train, ct, embedder, opts.text);
  const InferMode mode = default_mode(model);

  OodReport r;
  r.train_lang = train_lang;
  r.ct = ct;
  r.trace = std::move(trace);
  r.in_domain = metrics(predict_all(model, home.test, embedder, mode), home.test.labels());
  for (const auto& [lang, d] : datasets) {
    if (lang == train_lang) continue;
    const Splits s = split(d, opts.ratios, seed, opts.stratify);
    r.targets[lang] = metrics(predict_all(model, s.test, embedder, mode), s.test.labels());
  }
  return r;
}

std::string ood_report_json(const OodReport& r) {
  json targets = json::object();
  for (const auto& [lang, m] : r.targets) targets[lang] = metrics_json(m);
  const json j = {{"train_lang", r.train_lang},
                  {"ct", r.ct},
                  {"mode", r.ct ? "tie" : "standard"},
                  {"in_domain", metrics_json(r.in_domain)},
                  {"targets", targets},
                  {"trace", trace_json(r.trace)}};
  return j.dump(2) + "\n";
}

SuiteEvaluation evaluate_suite(const PerturbationSuite& suite,
                               const std::unordered_map<std::string, Label>& predictions) {
  SuiteEvaluation out;
  out.groups = suite.groups.size();
  out.ars = ars(suite.groups, predictions);
  auto score = [&](const Dataset& d) {
    std::vector<Label> preds;
    for (const auto& inst : d.absa) preds.push_back(predictions.at(inst.id));
    return d.empty() ? Metrics{} : metrics(preds, d.labels());
  };
  const Dataset originals = suite.originals();
  if (!originals.empty()) out.original_accuracy = score(originals).accuracy;
  for (Perturbation p : {Perturbation::kRevTgt, Perturbation::kRevNon, Perturbation::kAddDiff}) {
    out.by_perturbation[std::string(perturbation_name(p))] = score(suite.variants(p));
  }
  return out;
}

SuiteEvaluation evaluate_suite(const AbsaModel& m, const PerturbationSuite& suite,
                               const Embedder& embedder, InferMode mode) {
  const Dataset all = suite.all_instances();
  const std::vector<Label> preds = predict_all(m, all, embedder, mode);
  std::unordered_map<std::string, Label> map;
  for (std::size_t i = 0; i < preds.size(); ++i) map[all.absa[i].id] = preds[i];
  return evaluate_suite(suite, map);
}

ConvergenceReport convergence_report(const std::map<std::string, TrainTrace>& traces,
                                     double threshold) {
  ConvergenceReport r;
  r.threshold = threshold;
  r.traces = traces;
  for (const auto& [name, t] : traces) r.steps[name] = steps_to_threshold(t, threshold);
  return r;
}

std::string convergence_json(const ConvergenceReport& r) {
  json steps = json::object();
  json traces = json::object();
  for (const auto& [name, s] : r.steps) steps[name] = s ? json(*s) : json(nullptr);
  for (const auto& [name, t] : r.traces) traces[name] = trace_json(t);
  const json j = {{"threshold", r.threshold}, {"steps_to_threshold", steps}, {"traces", traces}};
  return j.dump(2) + "\n";
}

std::string trace_csv(const std::map<std::string, TrainTrace>& traces) {
  std::ostringstream out;
  out.precision(17);
  out << "model,step,train_loss,val_accuracy\n";
  for (const auto& [name, t] : traces) {
    for (const auto& rec : t.records) {
      out << name << ',' << rec.step << ',' << rec.train_loss << ',' << rec.val_accuracy << '\n';
    }
  }
  return out.str();
}

}  // namespace cdg
