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

#include <algorithm>
#include <random>

#include "cdg/align.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace cdg {
namespace {

using testing::error_of;

Embedder hand_embedder() {
  std::unordered_map<std::string, Vector> v;
  v["grilled"] = (Vector(3) << 1, 0, 0).finished();
  v["fish"] = (Vector(3) << 0, 1, 0).finished();
  v["was"] = (Vector(3) << 0, 0, 1).finished();
  v["really"] = (Vector(3) << 0.2, 0.1, 0.9).finished();
  v["good"] = (Vector(3) << -0.3, 0.2, 0.5).finished();
  v["seafood"] = (Vector(3) << 0.7, 0.8, 0.05).finished();
  return Embedder::from_vectors(std::move(v));
}

using testing::NgramChoice;

NgramChoice brute_force(const Embedder& e, const TokenSeq& review, const TokenSeq& aspect,
                        std::size_t n_max) {
  const NgramChoice c = testing::brute_force_align(e, review, aspect, n_max);
  std::size_t expect = 0;
  for (std::size_t n = 1; n <= std::min(n_max, review.size()); ++n) expect += review.size() - n + 1;
  EXPECT_EQ(c.candidates, expect);
  return c;
}

TEST(Align, ExactMatch) {
  const TokenSeq review = preprocess("The grilled fish was really good");
  const AlignmentResult r = align_aspect(review, preprocess("Grilled Fish"), 4, Embedder::hashed(16));
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.similarity, 1.0);
  EXPECT_EQ(r.span, (Span{4, 16}));
  EXPECT_EQ(r.matched_ngram, (std::vector<std::string>{"grilled", "fish"}));
}

TEST(Align, SingleTokenReview) {
  const TokenSeq review = preprocess("  délicieux ");
  const AlignmentResult r = align_aspect(review, preprocess("food"), 4, Embedder::hashed(16));
  EXPECT_EQ(r.span, (Span{2, 11}));
  EXPECT_EQ(r.token_length, 1u);
}

TEST(Align, BruteForceFiveTokens) {
  const Embedder e = hand_embedder();
  const TokenSeq review = preprocess("grilled fish was really good");
  const TokenSeq aspect = preprocess("seafood");
  const NgramChoice oracle = brute_force(e, review, aspect, 2);
  const AlignmentResult r = align_aspect(review, aspect, 2, e);
  EXPECT_FALSE(r.exact);
  EXPECT_EQ(r.token_begin, oracle.begin);
  EXPECT_EQ(r.token_length, oracle.length);
  EXPECT_NEAR(r.similarity, oracle.similarity, 1e-12);
  EXPECT_EQ(r.token_begin, 0u);
  EXPECT_EQ(r.token_length, 2u);
}

TEST(Align, BruteForceRandomReviews) {
  std::mt19937_64 rng(8);
  const std::vector<std::string> vocab = {"grilled", "fish", "was", "really", "good", "seafood", "zz"};
  const Embedder e = hand_embedder();
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t len = 1 + rng() % 12;
    std::string text;
    for (std::size_t i = 0; i < len; ++i) text += vocab[rng() % vocab.size()] + " ";
    const TokenSeq review = preprocess(text);
    const TokenSeq aspect = preprocess(vocab[rng() % (vocab.size() - 1)] + " " + vocab[rng() % 5]);
    const std::size_t n_max = 1 + rng() % 4;
    const AlignmentResult r = align_aspect(review, aspect, n_max, e);
    if (r.exact) {
      EXPECT_EQ(r.matched_ngram, aspect.tokens);
      continue;
    }
    const NgramChoice oracle = brute_force(e, review, aspect, n_max);
    EXPECT_NEAR(r.similarity, oracle.similarity, 1e-12) << text;
    EXPECT_EQ(r.token_begin, oracle.begin) << text;
    EXPECT_EQ(r.token_length, oracle.length) << text;
    EXPECT_LE(r.token_length, n_max);
  }
}

TEST(Align, TiesPreferLeftmostThenShortest) {
  const Embedder e = hand_embedder();
  // "fish" and "fish fish" are identical under mean pooling.
  const AlignmentResult r = align_aspect(preprocess("was fish fish"), preprocess("seafood"), 3, e);
  EXPECT_EQ(r.token_begin, 1u);
  EXPECT_EQ(r.token_length, 1u);
  const AlignmentResult z = align_aspect(preprocess("aa bb cc"), preprocess("seafood"), 3, e);
  EXPECT_EQ(z.token_begin, 0u);
  EXPECT_EQ(z.token_length, 1u);
  EXPECT_EQ(z.similarity, 0.0);
}

TEST(Align, NMaxOneIsBestSingleToken) {
  const Embedder e = hand_embedder();
  const TokenSeq review = preprocess("was really grilled good");
  const AlignmentResult r = align_aspect(review, preprocess("seafood"), 1, e);
  EXPECT_EQ(r.token_length, 1u);
  EXPECT_EQ(r.matched_ngram, (std::vector<std::string>{"grilled"}));
}

TEST(Align, Errors) {
  const Embedder e = Embedder::hashed(8);
  EXPECT_EQ(error_of([&] { align_aspect(preprocess(""), preprocess("a"), 4, e); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_of([&] { align_aspect(preprocess("a"), preprocess(" "), 4, e); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_of([&] { align_aspect(preprocess("a"), preprocess("a"), 0, e); }), ErrorCode::kInvalidArgument);
}

TEST(AlignDataset, RecomputesSpans) {
  AbsaInstance inst;
  inst.id = "t1";
  inst.sentence_id = "t1";
  inst.lang = "sw";
  inst.text = "Chakula kilikuwa kitamu sana";
  inst.aspect = "chakula";
  inst.span = Span{40, 50};
  std::vector<AlignmentRow> rows;
  const Dataset out = align_dataset(Dataset::of_absa({inst}), 4, Embedder::hashed(16), {}, &rows);
  EXPECT_EQ(out.absa[0].span, (Span{0, 7}));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_TRUE(rows[0].exact);
  EXPECT_EQ(alignment_csv(rows), "id,similarity,exact\nt1,1.000000,true\n");
  EXPECT_EQ(error_of([] { align_dataset(Dataset::of_tweets({}), 4, Embedder::hashed(4), {}, nullptr); }),
            ErrorCode::kKindMismatch);
}

}  // namespace
}  // namespace cdg
