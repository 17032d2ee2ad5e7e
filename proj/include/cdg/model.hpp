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

// Trainable classifiers.
//
// Classifier: multinomial logistic regression over the pooled sentence
// embedding, used by the augmentation experiments.
//
// AbsaModel: a shared one-hidden-layer encoder (bias-free, so a zero
// embedding maps to a zero representation) feeding three branches:
//   aspect     zeta_a = A * enc(aspect) + b_a
//   knowledge  zeta_k = Kn * [enc(context); enc(aspect)] + b_k, where context
//              is the review window centred on the aspect mention
//   review     backdoor head over enc(review) (causal training) or a plain
//              linear head over enc(aspect ++ review) (standard training)

#ifndef CDG_MODEL_HPP_
#define CDG_MODEL_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cdg/causal.hpp"
#include "cdg/corpus.hpp"
#include "cdg/logits.hpp"
#include "cdg/text.hpp"

namespace cdg {

enum class Optimizer { kSgd, kAdamW };
std::string_view optimizer_name(Optimizer o);

struct TrainConfig {
  double learning_rate = 1e-2;
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::kAdamW;
  // Causal head.
  double tau = 0.1;
  std::size_t strata_K = 4;
  double epsilon = 1e-8;
  double momentum_m = 0.9;
  // fused, aspect, review, knowledge
  std::array<double, 4> branch_loss_weights = {1.0, 1.0, 1.0, 1.0};
  double counterfactual_weight = 1.0;
  // Encoder shape.
  std::size_t hidden = 128;
  std::size_t d_rep = 64;
  std::size_t knowledge_window = 5;

  void validate() const;
};

struct TraceRecord {
  std::size_t step = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;

  bool operator==(const TraceRecord&) const = default;
};

// One record per epoch; `step` counts optimizer updates so far.
struct TrainTrace {
  std::vector<TraceRecord> records;

  bool operator==(const TrainTrace&) const = default;
};

// First (not best) step whose validation accuracy reaches the threshold.
std::optional<std::size_t> steps_to_threshold(const TrainTrace& t, double threshold);

// Preprocessing settings travel with a model so evaluation tokenizes the same
// way training did.
struct TextSettings {
  std::vector<std::string> stopwords;  // normalized, sorted

  StopwordSet stopword_set() const;
  bool operator==(const TextSettings&) const = default;
};

struct ClassifierParams {
  Matrix W;  // C x d
  Logits b = Logits::Zero();
  EmbedderSpec embedder;
  TextSettings text;
};

struct ClassPrediction {
  Label label = Label::kPositive;
  Logits probabilities = Logits::Zero();
};

ClassPrediction predict_embedding(const ClassifierParams& p, const Vector& x);
ClassPrediction predict(const ClassifierParams& p, std::string_view text,
                        const Embedder& embedder);

std::pair<ClassifierParams, TrainTrace> train_classifier(const Dataset& train,
                                                         const Dataset& val,
                                                         const TrainConfig& cfg,
                                                         const Embedder& embedder,
                                                         const TextSettings& text = {});

// Seeded initial parameters (what zero epochs of training returns).
ClassifierParams init_classifier(std::size_t dim, std::uint64_t seed);

// Mean cross-entropy and its gradient on a fixed set of embeddings.
double classifier_loss(const ClassifierParams& p, const std::vector<Vector>& xs,
                       const std::vector<Label>& ys, ClassifierParams* grad);

struct LinearHead {
  Matrix W;  // C x in
  Logits b = Logits::Zero();

  Logits apply(const Vector& x) const { return W * x + b; }
};

struct Encoder {
  Matrix W1;  // hidden x d
  Matrix W2;  // d_rep x hidden

  Vector encode(const Vector& e) const;
};

struct AbsaModel {
  bool ct = false;
  EmbedderSpec embedder;
  TextSettings text;
  std::size_t knowledge_window = 5;
  Encoder encoder;
  LinearHead aspect_head;     // C x d_rep
  LinearHead knowledge_head;  // C x 2 d_rep
  std::variant<LinearHead, BackdoorHead> review_head;
  std::optional<CounterfactualBaseline> baselines;

  std::size_t embed_dim() const { return static_cast<std::size_t>(encoder.W1.cols()); }
  std::size_t d_rep() const { return static_cast<std::size_t>(encoder.W2.rows()); }
  const BackdoorHead& backdoor() const;
  const LinearHead& plain_review_head() const;
  // Throws if the causal-training invariants do not hold.
  void validate() const;
};

// Seeded initialization matching the shapes in `cfg`.
AbsaModel init_absa_model(std::size_t embed_dim, const TrainConfig& cfg, bool ct);
// All-zero parameters of the given shape.
AbsaModel zero_absa_model(std::size_t embed_dim, std::size_t hidden, std::size_t d_rep,
                          std::size_t strata, bool ct);

// Pooled embeddings consumed by the branches.
struct AbsaInputs {
  Vector review;   // whole review
  Vector aspect;   // aspect term
  Vector context;  // review window around the aspect mention
  Vector concat;   // aspect tokens followed by review tokens
};

// Locates the aspect mention by `span` when it covers at least one token,
// otherwise by alignment, and takes knowledge_window tokens either side.
TokenSeq aspect_context(const TokenSeq& review, const TokenSeq& aspect,
                        std::size_t knowledge_window, const Embedder& embedder,
                        const std::optional<Span>& span = std::nullopt);

AbsaInputs make_inputs(const TokenSeq& review, const TokenSeq& aspect,
                       std::size_t knowledge_window, const Embedder& embedder,
                       const std::optional<Span>& span = std::nullopt);
AbsaInputs make_inputs(const AbsaModel& m, const AbsaInstance& inst, const Embedder& embedder);

BranchLogits forward_inputs(const AbsaModel& m, const AbsaInputs& in);
BranchLogits forward_branches(const AbsaModel& m, const TokenSeq& review, const TokenSeq& aspect,
                              const Embedder& embedder);

// zeta_k + tanh(zeta_a) + tanh(zeta_r)
Logits fuse(const BranchLogits& l);

// Per-example losses of causal training: the weighted four-branch loss
// (gradient to everything except baselines and mu) and the counterfactual
// consistency loss (gradient to the baselines only).
struct AbsaLossParts {
  double joint = 0.0;
  double consistency = 0.0;
};

// Mean loss over `inputs` and, when `grad` is non-null, its gradient in a
// model of matching shape. Standard models use plain cross-entropy of the
// single head. The confounder mean is treated as a constant.
AbsaLossParts absa_loss(const AbsaModel& m, const std::vector<AbsaInputs>& inputs,
                        const std::vector<Label>& ys, const TrainConfig& cfg, AbsaModel* grad);

std::pair<AbsaModel, TrainTrace> train_absa(const Dataset& train, const Dataset& val,
                                            const TrainConfig& cfg, bool ct,
                                            const Embedder& embedder,
                                            const TextSettings& text = {});

// Accuracy of the model's default inference mode on an absa dataset.
double absa_accuracy(const AbsaModel& m, const std::vector<AbsaInputs>& inputs,
                     const std::vector<Label>& ys);

// Binary model file: "CDGM", u32 version, u32 metadata length, metadata
// JSON, little-endian f64 arrays, CRC32 of everything after the version.
inline constexpr std::uint32_t kModelFormatVersion = 1;

using AnyModel = std::variant<ClassifierParams, AbsaModel>;

void save_model(const AnyModel& m, const std::filesystem::path& path);
std::string serialize_model(const AnyModel& m);
AnyModel load_model(const std::filesystem::path& path);
AnyModel deserialize_model(std::string_view bytes);

}  // namespace cdg

#endif  // CDG_MODEL_HPP_
