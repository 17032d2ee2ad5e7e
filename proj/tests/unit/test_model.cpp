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

#include <cmath>
#include <random>

#include "cdg/model.hpp"
#include "cdg/unicode.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

namespace cdg {
namespace {

using testing::error_of;

constexpr double kGradTol = 1e-4;

TEST(Gradient, Classifier) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 6; ++trial) {
    ClassifierParams p;
    p.W = testing::random_matrix(rng, 3, 7);
    p.b = testing::random_logits(rng);
    std::vector<Vector> xs;
    for (int i = 0; i < 9; ++i) xs.push_back(testing::random_vector(rng, 7));
    const auto ys = testing::random_labels(rng, xs.size());
    const auto r = testing::check_classifier_gradient(p, xs, ys);
    EXPECT_EQ(r.entries, 24u);
    EXPECT_LT(r.max_rel, kGradTol) << "trial " << trial;
  }
}

TEST(Gradient, CausalJointLoss) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 6; ++trial) {
    TrainConfig cfg;
    const AbsaModel m = testing::random_absa_model(rng, true, cfg);
    const auto xs = testing::random_inputs(rng, 5, 6);
    const auto ys = testing::random_labels(rng, xs.size());
    const auto r = testing::check_absa_gradient(m, xs, ys, cfg);
    EXPECT_GT(r.entries, 100u);
    EXPECT_LT(r.max_rel, kGradTol) << "trial " << trial;
  }
}

TEST(Gradient, PlainModel) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    TrainConfig cfg;
    const AbsaModel m = testing::random_absa_model(rng, false, cfg);
    const auto xs = testing::random_inputs(rng, 5, 6);
    const auto ys = testing::random_labels(rng, xs.size());
    EXPECT_LT(testing::check_absa_gradient(m, xs, ys, cfg).max_rel, kGradTol) << "trial " << trial;
  }
}

TEST(Gradient, ConsistencyOnlyMovesBaselines) {
  std::mt19937_64 rng(14);
  TrainConfig cfg;
  const AbsaModel m = testing::random_absa_model(rng, true, cfg);
  const auto xs = testing::random_inputs(rng, 4, 6);
  const auto ys = testing::random_labels(rng, xs.size());
  AbsaModel grad;
  const AbsaLossParts base = absa_loss(m, xs, ys, cfg, &grad);
  // Perturbing a baseline leaves the joint loss unchanged.
  AbsaModel shifted = m;
  shifted.baselines->c_k += Logits(0.5, -0.3, 0.2);
  EXPECT_EQ(absa_loss(shifted, xs, ys, cfg, nullptr).joint, base.joint);
  EXPECT_GT(base.consistency, 0.0);
}

TEST(Predict, Examples) {
  ClassifierParams p;
  p.W = Matrix::Zero(3, 2);
  EXPECT_EQ(predict_embedding(p, Vector::Zero(2)).label, Label::kPositive);
  EXPECT_NEAR(predict_embedding(p, Vector::Zero(2)).probabilities[1], 1.0 / 3.0, 1e-15);
  p.b = Logits(0, 0, 1);
  EXPECT_EQ(predict_embedding(p, Vector::Zero(2)).label, Label::kNeutral);
  p.W << 0, 0, 5, 0, 0, 0;
  const ClassPrediction c = predict_embedding(p, Vector::Unit(2, 0));
  EXPECT_EQ(c.label, Label::kNegative);
  EXPECT_NEAR(c.probabilities.sum(), 1.0, 1e-15);
  EXPECT_EQ(error_of([&] { predict_embedding(p, Vector::Zero(3)); }), ErrorCode::kDimensionMismatch);
}

Dataset tweets(const std::vector<std::pair<std::string, Label>>& rows) {
  std::vector<LabeledText> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.push_back({"t" + std::to_string(i), rows[i].first, rows[i].second, "en", Domain::kOriginal});
  }
  return Dataset::of_tweets(out);
}

Embedder axis_embedder() {
  std::unordered_map<std::string, Vector> v;
  v["good"] = Vector::Unit(3, 0);
  v["bad"] = Vector::Unit(3, 1);
  v["meh"] = Vector::Unit(3, 2);
  return Embedder::from_vectors(std::move(v));
}

Dataset separable_tweets() {
  return tweets({{"good", Label::kPositive},
                 {"good good", Label::kPositive},
                 {"bad", Label::kNegative},
                 {"bad day", Label::kNegative},
                 {"meh", Label::kNeutral},
                 {"so meh", Label::kNeutral}});
}

double train_accuracy(const ClassifierParams& p, const Dataset& d, const Embedder& e) {
  std::size_t ok = 0;
  for (const auto& t : d.tweets) ok += predict(p, t.text, e).label == t.label;
  return static_cast<double>(ok) / static_cast<double>(d.size());
}

TEST(TrainClassifier, SeparableToy) {
  const Embedder e = axis_embedder();
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 2;
  cfg.learning_rate = 0.1;
  const auto [p, trace] = train_classifier(separable_tweets(), Dataset::of_tweets({}), cfg, e);
  EXPECT_EQ(train_accuracy(p, separable_tweets(), e), 1.0);
  ASSERT_EQ(trace.records.size(), 50u);
  EXPECT_EQ(trace.records.back().step, 150u);
  EXPECT_EQ(trace.records.back().val_accuracy, 1.0);
}

TEST(TrainClassifier, ZeroEpochsIsInitialization) {
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 9;
  const auto [p, trace] = train_classifier(separable_tweets(), Dataset::of_tweets({}), cfg,
                                           axis_embedder());
  EXPECT_TRUE(trace.records.empty());
  EXPECT_EQ(p.W, init_classifier(3, 9).W);
  EXPECT_EQ(p.b, Logits::Zero());
}

TEST(TrainClassifier, Deterministic) {
  TrainConfig cfg;
  cfg.seed = 5;
  const Embedder e = Embedder::hashed(16);
  const auto a = train_classifier(separable_tweets(), separable_tweets(), cfg, e);
  const auto b = train_classifier(separable_tweets(), separable_tweets(), cfg, e);
  EXPECT_EQ(a.second, b.second);
  EXPECT_EQ(serialize_model(a.first), serialize_model(b.first));
}

TEST(TrainClassifier, FullBatchLossNonIncreasing) {
  TrainConfig cfg;
  cfg.optimizer = Optimizer::kSgd;
  cfg.weight_decay = 0.0;
  cfg.learning_rate = 0.05;
  cfg.epochs = 40;
  const Dataset d = separable_tweets();
  cfg.batch_size = d.size();
  const auto [p, trace] = train_classifier(d, d, cfg, Embedder::hashed(16));
  for (std::size_t i = 1; i < trace.records.size(); ++i) {
    EXPECT_LE(trace.records[i].train_loss, trace.records[i - 1].train_loss) << "epoch " << i;
  }
}

TEST(TrainClassifier, RejectsInvalidInput) {
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  EXPECT_EQ(error_of([&] { train_classifier(separable_tweets(), {}, cfg, axis_embedder()); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_of([&] {
              train_classifier(Dataset::of_absa({}), {}, TrainConfig{}, axis_embedder());
            }),
            ErrorCode::kKindMismatch);
}

TEST(ForwardBranches, ZeroModelGivesZeros) {
  const AbsaModel m = zero_absa_model(8, 4, 4, 2, true);
  const BranchLogits l =
      forward_branches(m, preprocess("the pasta was cold"), preprocess("pasta"), Embedder::hashed(8));
  EXPECT_EQ(l.zeta_a, Logits::Zero());
  EXPECT_EQ(l.zeta_r, Logits::Zero());
  EXPECT_EQ(l.zeta_k, Logits::Zero());
}

TEST(ForwardBranches, EmptyAspectGivesAspectBias) {
  std::mt19937_64 rng(21);
  TrainConfig cfg;
  AbsaModel m = testing::random_absa_model(rng, true, cfg);
  const BranchLogits l =
      forward_branches(m, preprocess("the pasta was cold"), preprocess(""), Embedder::hashed(6));
  EXPECT_LT((l.zeta_a - m.aspect_head.b).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ForwardBranches, KnowledgeOracle) {
  std::mt19937_64 rng(22);
  TrainConfig cfg;
  AbsaModel m = testing::random_absa_model(rng, true, cfg);
  m.knowledge_window = 1;
  const Embedder e = Embedder::hashed(6);
  const TokenSeq review = preprocess("one two three pasta four five six");
  const TokenSeq aspect = preprocess("pasta");
  const BranchLogits l = forward_branches(m, review, aspect, e);

  auto enc = [&](const std::vector<std::string>& toks) {
    const Vector h = (m.encoder.W1 * e.embed_tokens(toks)).array().tanh().matrix();
    return Vector(m.encoder.W2 * h);
  };
  Vector ca(8);
  ca << enc({"three", "pasta", "four"}), enc({"pasta"});
  const Logits expect = m.knowledge_head.W * ca + m.knowledge_head.b;
  EXPECT_LT((l.zeta_k - expect).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((l.zeta_r - backdoor_logits(m.backdoor(), enc(review.tokens))).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AspectContext, WindowAndSpan) {
  const Embedder e = Embedder::hashed(8);
  const TokenSeq review = preprocess("a b c d e f g h");
  EXPECT_EQ(aspect_context(review, preprocess("d"), 2, e).tokens,
            (std::vector<std::string>{"b", "c", "d", "e", "f"}));
  EXPECT_EQ(aspect_context(review, preprocess("a"), 2, e).tokens,
            (std::vector<std::string>{"a", "b", "c"}));
  // An explicit span wins over alignment: "g" is at code points 12..13.
  EXPECT_EQ(aspect_context(review, preprocess("d"), 1, e, Span{12, 13}).tokens,
            (std::vector<std::string>{"f", "g", "h"}));
}

AbsaInstance absa(std::string id, std::string text, std::string aspect, Label y) {
  AbsaInstance inst;
  inst.id = id;
  inst.sentence_id = id;
  inst.lang = "en";
  const std::size_t pos = unicode::length(text.substr(0, text.find(aspect)));
  inst.span = Span{pos, pos + unicode::length(aspect)};
  inst.text = std::move(text);
  inst.aspect = std::move(aspect);
  inst.polarity = y;
  return inst;
}

Dataset toy_absa() {
  std::vector<AbsaInstance> out;
  const std::vector<std::string> aspects = {"food", "service", "staff", "room", "music", "wine"};
  const std::vector<std::pair<std::string, Label>> words = {
      {"great", Label::kPositive}, {"lovely", Label::kPositive},
      {"awful", Label::kNegative}, {"rude", Label::kNegative},
      {"average", Label::kNeutral}, {"ordinary", Label::kNeutral}};
  int n = 0;
  for (const auto& a : aspects) {
    for (const auto& [w, y] : words) {
      out.push_back(absa("x" + std::to_string(n++), "the " + a + " was " + w, a, y));
    }
  }
  return Dataset::of_absa(out);
}

TEST(TrainAbsa, PlainModelFitsToy) {
  TrainConfig cfg;
  cfg.hidden = 16;
  cfg.d_rep = 8;
  cfg.strata_K = 2;
  cfg.epochs = 40;
  cfg.batch_size = 4;
  const Embedder e = Embedder::hashed(32);
  const Dataset d = toy_absa();
  const auto [m, trace] = train_absa(d, {}, cfg, false, e);
  EXPECT_FALSE(m.ct);
  EXPECT_GE(trace.records.back().val_accuracy, 0.95);
}

TEST(TrainAbsa, CausalModelFitsToy) {
  TrainConfig cfg;
  cfg.hidden = 16;
  cfg.d_rep = 8;
  cfg.strata_K = 2;
  cfg.epochs = 40;
  cfg.batch_size = 4;
  const auto [m, trace] = train_absa(toy_absa(), {}, cfg, true, Embedder::hashed(32));
  EXPECT_TRUE(m.ct);
  EXPECT_NO_THROW(m.validate());
  EXPECT_GE(trace.records.back().val_accuracy, 0.95);
  EXPECT_TRUE(m.backdoor().mu.allFinite());
  EXPECT_GT(m.backdoor().mu.norm(), 0.0);
}

TEST(TrainAbsa, ZeroEpochsKeepsZeroBaselinesAndMean) {
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.hidden = 8;
  cfg.d_rep = 8;
  const auto [m, trace] = train_absa(toy_absa(), {}, cfg, true, Embedder::hashed(16));
  EXPECT_TRUE(trace.records.empty());
  EXPECT_EQ(m.baselines->c_a, Logits::Zero());
  EXPECT_EQ(m.baselines->c_r, Logits::Zero());
  EXPECT_EQ(m.baselines->c_k, Logits::Zero());
  EXPECT_EQ(m.backdoor().mu, Vector::Zero(8));
}

TEST(TrainAbsa, SameSeedSameTrace) {
  TrainConfig cfg;
  cfg.hidden = 8;
  cfg.d_rep = 8;
  cfg.epochs = 3;
  cfg.seed = 17;
  const Embedder e = Embedder::hashed(16);
  const auto a = train_absa(toy_absa(), {}, cfg, true, e);
  const auto b = train_absa(toy_absa(), {}, cfg, true, e);
  EXPECT_EQ(a.second, b.second);
  EXPECT_EQ(serialize_model(a.first), serialize_model(b.first));
}

TEST(TrainAbsa, FullBatchPlainLossNonIncreasing) {
  TrainConfig cfg;
  cfg.optimizer = Optimizer::kSgd;
  cfg.weight_decay = 0.0;
  cfg.learning_rate = 0.02;
  cfg.hidden = 8;
  cfg.d_rep = 8;
  cfg.epochs = 30;
  const Dataset d = toy_absa();
  cfg.batch_size = d.size();
  const auto [m, trace] = train_absa(d, {}, cfg, false, Embedder::hashed(16));
  for (std::size_t i = 1; i < trace.records.size(); ++i) {
    EXPECT_LE(trace.records[i].train_loss, trace.records[i - 1].train_loss) << "epoch " << i;
  }
}

TEST(StepsToThreshold, Examples) {
  const TrainTrace t{{{1, 0, .3}, {2, 0, .5}, {3, 0, .7}}};
  EXPECT_EQ(steps_to_threshold(t, .7), 3u);
  EXPECT_EQ(steps_to_threshold(t, .9), std::nullopt);
  const TrainTrace u{{{1, 0, .8}, {2, 0, .6}, {3, 0, .9}}};
  EXPECT_EQ(steps_to_threshold(u, .75), 1u);
  EXPECT_EQ(steps_to_threshold(TrainTrace{}, 0.0), std::nullopt);
}

AnyModel random_ct_model() {
  std::mt19937_64 rng(31);
  TrainConfig cfg;
  AbsaModel m = testing::random_absa_model(rng, true, cfg);
  m.text.stopwords = {"a", "the"};
  m.embedder.dim = 6;
  return m;
}

TEST(ModelFile, RoundTripIsBitExact) {
  testing::TempDir dir("model");
  const AnyModel m = random_ct_model();
  save_model(m, dir / "m.bin");
  const AnyModel back = load_model(dir / "m.bin");
  const auto& a = std::get<AbsaModel>(m);
  const auto& b = std::get<AbsaModel>(back);
  EXPECT_EQ(a.encoder.W1, b.encoder.W1);
  EXPECT_EQ(a.encoder.W2, b.encoder.W2);
  EXPECT_EQ(a.knowledge_head.W, b.knowledge_head.W);
  EXPECT_EQ(a.backdoor().weights, b.backdoor().weights);
  EXPECT_EQ(a.backdoor().mu, b.backdoor().mu);
  EXPECT_EQ(a.baselines->c_r, b.baselines->c_r);
  EXPECT_EQ(a.text, b.text);
  EXPECT_EQ(a.embedder, b.embedder);
  EXPECT_EQ(serialize_model(back), serialize_model(m));

  ClassifierParams p = init_classifier(5, 3);
  p.b = Logits(0.1, -0.2, 1e-300);
  const auto q = std::get<ClassifierParams>(deserialize_model(serialize_model(p)));
  EXPECT_EQ(q.W, p.W);
  EXPECT_EQ(q.b, p.b);
}

TEST(ModelFile, Errors) {
  const std::string bytes = serialize_model(random_ct_model());
  std::string v99 = bytes;
  v99[4] = 99;
  EXPECT_EQ(error_of([&] { deserialize_model(v99); }), ErrorCode::kUnsupportedVersion);

  std::string flipped = bytes;
  flipped[bytes.size() - 20] ^= 0x01;
  EXPECT_EQ(error_of([&] { deserialize_model(flipped); }), ErrorCode::kChecksumMismatch);

  for (std::size_t cut : {std::size_t{2}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_EQ(error_of([&] { deserialize_model(bytes.substr(0, cut)); }), ErrorCode::kTruncatedFile)
        << "cut " << cut;
  }
  std::string magic = bytes;
  magic[0] = 'X';
  EXPECT_EQ(error_of([&] { deserialize_model(magic); }), ErrorCode::kBadMagic);
  EXPECT_EQ(error_of([] { load_model("/nonexistent/model.bin"); }), ErrorCode::kFileNotFound);
}

}  // namespace
}  // namespace cdg
