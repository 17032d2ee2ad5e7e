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

#include <map>

#include "cdg/synthbench.hpp"
#include "cdg/text.hpp"
#include "cdg/unicode.hpp"
#include "test_util.hpp"

namespace cdg {
namespace {

using testing::error_of;

SpuriousSpec spec_with(double rho, double rho_test, std::size_t n, std::uint64_t seed = 0) {
  SpuriousSpec s;
  s.vocab = SpuriousSpec::default_vocab();
  s.rho = rho;
  s.rho_test = rho_test;
  s.n_sentences = n;
  s.seed = seed;
  return s;
}

// Fraction of non-target mentions whose polarity equals their sentence's gold.
double context_agreement(const Dataset& d) {
  std::map<std::string, Label> gold;
  for (const auto& i : d.absa) {
    if (is_target_instance(i)) gold[i.sentence_id] = i.polarity;
  }
  std::size_t agree = 0, total = 0;
  for (const auto& i : d.absa) {
    if (is_target_instance(i)) continue;
    ++total;
    agree += i.polarity == gold.at(i.sentence_id);
  }
  return static_cast<double>(agree) / static_cast<double>(total);
}

TEST(SpuriousAbsa, FullCorrelation) {
  const SpuriousBench b = gen_spurious_absa(spec_with(1.0, 1.0, 400));
  EXPECT_EQ(context_agreement(b.train), 1.0);
}

TEST(SpuriousAbsa, HalfCorrelation) {
  const SpuriousBench b = gen_spurious_absa(spec_with(0.5, 0.5, 9000));
  std::size_t non_targets = b.train.size() - targets_only(b.train).size();
  ASSERT_GE(non_targets, 10000u);
  EXPECT_NEAR(context_agreement(b.train), 0.5, 0.05);
}

TEST(SpuriousAbsa, Structure) {
  const SpuriousBench b = gen_spurious_absa(spec_with(0.9, 0.1, 500, 3));
  EXPECT_EQ(targets_only(b.train).size(), 400u);
  EXPECT_EQ(targets_only(b.test).size(), 100u);
  std::map<std::string, int> per_sentence;
  for (const auto& i : b.train.absa) {
    ++per_sentence[i.sentence_id];
    EXPECT_EQ(unicode::slice(i.text, i.span.start, i.span.end), i.aspect);
    EXPECT_NE(i.polarity, Label::kNeutral);
  }
  for (const auto& [sid, n] : per_sentence) {
    EXPECT_GE(n, 2) << sid;
    EXPECT_LE(n, 3) << sid;
  }
  EXPECT_NO_THROW(b.train.check_unique_ids());
  EXPECT_NO_THROW(b.lexicon.validate());
  EXPECT_FALSE(b.distractors.empty());
}

TEST(SpuriousAbsa, Deterministic) {
  const SpuriousBench a = gen_spurious_absa(spec_with(0.9, 0.1, 200, 8));
  const SpuriousBench b = gen_spurious_absa(spec_with(0.9, 0.1, 200, 8));
  EXPECT_EQ(a.train.absa, b.train.absa);
  EXPECT_EQ(a.test.absa, b.test.absa);
  EXPECT_NE(gen_spurious_absa(spec_with(0.9, 0.1, 200, 9)).train.absa, a.train.absa);
}

// Polarity of the descriptor right after "<aspect> is" in the target clause.
Label descriptor_oracle(const AbsaInstance& t, const SentimentLexicon& lex) {
  const TokenSeq toks = preprocess(t.text);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks.spans[i].start == t.span.start) {
      return lex.find(toks.tokens.at(i + 2))->polarity;
    }
  }
  ADD_FAILURE() << "aspect not found in " << t.text;
  return Label::kNeutral;
}

TEST(SpuriousAbsa, FlippedTestDefeatsContextShortcut) {
  const SpuriousBench b = gen_spurious_absa(spec_with(1.0, 0.0, 600, 1));
  std::map<std::string, std::vector<Label>> context;
  for (const auto& i : b.test.absa) {
    if (!is_target_instance(i)) context[i.sentence_id].push_back(i.polarity);
  }
  std::size_t ctx_right = 0, desc_right = 0, n = 0;
  for (const auto& t : targets_only(b.test).absa) {
    ++n;
    std::size_t pos = 0;
    for (Label l : context.at(t.sentence_id)) pos += l == Label::kPositive;
    const Label by_context =
        2 * pos >= context.at(t.sentence_id).size() ? Label::kPositive : Label::kNegative;
    ctx_right += by_context == t.polarity;
    desc_right += descriptor_oracle(t, b.lexicon) == t.polarity;
  }
  EXPECT_LE(static_cast<double>(ctx_right) / static_cast<double>(n), 0.5);
  EXPECT_EQ(desc_right, n);
}

TEST(SpuriousAbsa, Validation) {
  EXPECT_EQ(error_of([] { gen_spurious_absa(spec_with(1.2, 0.1, 100)); }), ErrorCode::kInvalidArgument);
  SpuriousSpec s = spec_with(0.9, 0.1, 100);
  s.vocab = {{"food", {{"good"}, {"bad"}}}};
  EXPECT_EQ(error_of([&] { gen_spurious_absa(s); }), ErrorCode::kInvalidArgument);
  s = spec_with(0.9, 0.1, 100);
  s.vocab["food"].negative.clear();
  EXPECT_EQ(error_of([&] { gen_spurious_absa(s); }), ErrorCode::kInvalidArgument);
}

TEST(ShiftedTweets, BalancedLabels) {
  const ShiftedTweets t = gen_shifted_tweets(9, 0.5, 0);
  std::array<int, 3> counts{};
  for (Label l : t.d1.labels()) ++counts[label_index(l)];
  EXPECT_EQ(counts, (std::array<int, 3>{3, 3, 3}));
  const ShiftedTweets u = gen_shifted_tweets(1001, 0.5, 0);
  counts = {};
  for (Label l : u.d1.labels()) ++counts[label_index(l)];
  for (int c : counts) EXPECT_NEAR(c, 1001.0 / 3, 1.0);
}

TEST(ShiftedTweets, OracleLabeling) {
  const std::map<std::string, Label> polar = {
      {"good", Label::kPositive}, {"great", Label::kPositive}, {"amazing", Label::kPositive},
      {"wonderful", Label::kPositive}, {"excellent", Label::kPositive}, {"lovely", Label::kPositive},
      {"fantastic", Label::kPositive}, {"brilliant", Label::kPositive}, {"bad", Label::kNegative},
      {"terrible", Label::kNegative}, {"awful", Label::kNegative}, {"horrible", Label::kNegative},
      {"poor", Label::kNegative}, {"disappointing", Label::kNegative}, {"dreadful", Label::kNegative},
      {"miserable", Label::kNegative}, {"scheduled", Label::kNeutral}, {"ordinary", Label::kNeutral},
      {"average", Label::kNeutral}, {"usual", Label::kNeutral}, {"normal", Label::kNeutral},
      {"standard", Label::kNeutral}, {"typical", Label::kNeutral}, {"regular", Label::kNeutral}};
  const ShiftedTweets t = gen_shifted_tweets(600, 0.5, 4);
  for (const auto& tw : t.d1.tweets) {
    std::optional<Label> found;
    for (const auto& tok : preprocess(tw.text).tokens) {
      if (const auto it = polar.find(tok); it != polar.end()) {
        EXPECT_FALSE(found.has_value()) << tw.text;
        found = it->second;
      }
    }
    ASSERT_TRUE(found.has_value()) << tw.text;
    EXPECT_EQ(*found, tw.label) << tw.text;
  }
}

TEST(ShiftedTweets, DeterministicAndShiftControlsSynonyms) {
  EXPECT_EQ(gen_shifted_tweets(50, 0.5, 2).d1.tweets, gen_shifted_tweets(50, 0.5, 2).d1.tweets);
  EXPECT_TRUE(gen_shifted_tweets(50, 0.0, 2).synonyms.synonyms.empty());
  const auto full = gen_shifted_tweets(50, 1.0, 2).synonyms.synonyms.size();
  const auto half = gen_shifted_tweets(50, 0.5, 2).synonyms.synonyms.size();
  EXPECT_GT(full, half);
  EXPECT_GT(half, 0u);
  EXPECT_EQ(error_of([] { gen_shifted_tweets(2, 0.5, 0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_of([] { gen_shifted_tweets(10, 1.5, 0); }), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace cdg
