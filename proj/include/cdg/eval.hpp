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

// Metrics, the cross-domain augmentation experiment and the cross-language
// harness.

#ifndef CDG_EVAL_HPP_
#define CDG_EVAL_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cdg/augment.hpp"
#include "cdg/corpus.hpp"
#include "cdg/model.hpp"
#include "cdg/perturb.hpp"

namespace cdg {

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::size_t n = 0;
};

// Both throw kSizeMismatch on unequal lengths and kInvalidArgument on empty
// input.
double accuracy(const std::vector<Label>& preds, const std::vector<Label>& golds);
// Mean per-class F1 over all three classes; a class absent from both preds
// and golds scores 0.
double macro_f1(const std::vector<Label>& preds, const std::vector<Label>& golds);
Metrics metrics(const std::vector<Label>& preds, const std::vector<Label>& golds);

// |acc_d1 - acc_d2|, inputs in [0, 1]. Rounded to 12 decimals so that
// differences of table values come out exact.
double delta_inv(double acc_d1, double acc_d2);

std::vector<Label> predict_all(const ClassifierParams& p, const Dataset& d, const Embedder& e);
std::vector<Label> predict_all(const AbsaModel& m, const Dataset& d, const Embedder& e,
                               InferMode mode);
InferMode default_mode(const AbsaModel& m);

enum class CdaDomain { kOriginal = 0, kParaphrased = 1, kCombined = 2 };
inline constexpr std::array<CdaDomain, 3> kCdaDomains = {CdaDomain::kOriginal,
                                                         CdaDomain::kParaphrased,
                                                         CdaDomain::kCombined};
std::string_view cda_domain_name(CdaDomain d);

using CdaMatrix = std::array<std::array<double, 3>, 3>;  // [train][eval]

struct CdaSeedResult {
  std::uint64_t seed = 0;
  CdaMatrix matrix{};
  std::array<double, 3> test_row{};
  std::array<double, 3> delta_inv{};
  std::array<TrainTrace, 3> traces;
};

struct CdaReport {
  std::vector<std::uint64_t> seeds;
  CdaMatrix matrix{};             // validation accuracy, mean over seeds
  std::array<double, 3> test_row{};  // original-domain test accuracy, mean
  std::array<double, 3> delta_inv{};
  std::vector<CdaSeedResult> per_seed;
  std::vector<std::string> excluded;
};

struct CdaOptions {
  TrainConfig train;
  std::vector<std::uint64_t> seeds = {0};
  SplitRatios ratios;
  bool stratify = true;
  D2Options paraphrase;          // seed overwritten per run seed
  std::optional<Dataset> d2;     // pre-built, index-aligned with d1
  TextSettings text;
};

CdaReport run_cda(const Dataset& d1, const Embedder& embedder, const CdaOptions& opts);
std::string cda_report_json(const CdaReport& r);
std::string cda_report_csv(const CdaReport& r);

struct OodReport {
  std::string train_lang;
  bool ct = false;
  Metrics in_domain;
  std::map<std::string, Metrics> targets;
  TrainTrace trace;
};

struct OodOptions {
  TrainConfig train;
  SplitRatios ratios;
  bool stratify = true;
  TextSettings text;
};

OodReport run_ood(const std::map<std::string, Dataset>& datasets, const std::string& train_lang,
                  bool ct, const Embedder& embedder, const OodOptions& opts);
std::string ood_report_json(const OodReport& r);

struct SuiteEvaluation {
  double original_accuracy = 0.0;
  std::map<std::string, Metrics> by_perturbation;  // revtgt / revnon / adddiff
  double ars = 0.0;
  std::size_t groups = 0;
};

SuiteEvaluation evaluate_suite(const AbsaModel& m, const PerturbationSuite& suite,
                               const Embedder& embedder, InferMode mode);
// Same, from a predictions map keyed by instance id.
SuiteEvaluation evaluate_suite(const PerturbationSuite& suite,
                               const std::unordered_map<std::string, Label>& predictions);

struct ConvergenceReport {
  double threshold = 0.0;
  std::map<std::string, TrainTrace> traces;  // model name -> trace
  std::map<std::string, std::optional<std::size_t>> steps;
};

ConvergenceReport convergence_report(const std::map<std::string, TrainTrace>& traces,
                                     double threshold);
std::string convergence_json(const ConvergenceReport& r);
// model,step,train_loss,val_accuracy
std::string trace_csv(const std::map<std::string, TrainTrace>& traces);

}  // namespace cdg

#endif  // CDG_EVAL_HPP_
