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

#include "cdg/synthbench.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "cdg/error.hpp"

namespace cdg {

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

bool coin(std::mt19937_64& rng, double p) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

struct Clause {
  std::string aspect;
  Label polarity;
  bool target;
};

void emit_sentence(const SpuriousSpec& spec, const std::vector<std::string>& aspects,
                   const std::string& sid, double rho, std::mt19937_64& rng,
                   std::vector<AbsaInstance>& out) {
  const std::size_t n_aspects = 2 + pick(rng, 2);
  std::vector<std::size_t> idx(aspects.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  const Label gold = coin(rng, 0.5) ? Label::kPositive : Label::kNegative;
  std::vector<Clause> clauses;
  clauses.push_back(Clause{aspects[idx[0]], gold, true});
  for (std::size_t k = 1; k < n_aspects; ++k) {
    clauses.push_back(Clause{aspects[idx[k]], coin(rng, rho) ? gold : flip_polarity(gold), false});
  }
  std::shuffle(clauses.begin(), clauses.end(), rng);

  std::string text;
  std::vector<Span> spans;
  for (std::size_t k = 0; k < clauses.size(); ++k) {
    if (k > 0) text += k + 1 == clauses.size() ? ", and " : ", ";
    const DescriptorVocab& v = spec.vocab.at(clauses[k].aspect);
    const auto& words = clauses[k].polarity == Label::kPositive ? v.positive : v.negative;
    text += "the ";
    spans.push_back(Span{text.size(), text.size() + clauses[k].aspect.size()});
    text += clauses[k].aspect + " is " + words[pick(rng, words.size())];
  }
  text += ".";

  std::size_t non_target = 0;
  for (std::size_t k = 0; k < clauses.size(); ++k) {
    AbsaInstance inst;
    inst.id = sid + (clauses[k].target ? ":t" : ":n" + std::to_string(++non_target));
    inst.sentence_id = sid;
    inst.lang = spec.lang;
    inst.text = text;
    inst.aspect = clauses[k].aspect;
    inst.span = spans[k];
    inst.polarity = clauses[k].polarity;
    out.push_back(std::move(inst));
  }
}

}  // namespace

std::map<std::string, DescriptorVocab> SpuriousSpec::default_vocab() {
  return {
      {"food", {{"delicious", "tasty", "fresh"}, {"bland", "stale", "soggy"}}},
      {"service", {{"attentive", "friendly", "prompt"}, {"heedless", "rude", "slow"}}},
      {"atmosphere", {{"cozy", "lively", "charming"}, {"gloomy", "dull", "cramped"}}},
      {"music", {{"melodic", "soothing", "upbeat"}, {"jarring", "grating", "tinny"}}},
      {"staff", {{"courteous", "helpful", "cheerful"}, {"arrogant", "unhelpful", "grumpy"}}},
      {"price", {{"affordable", "fair", "reasonable"}, {"overpriced", "steep", "exorbitant"}}},
      {"drinks", {{"refreshing", "smooth", "chilled"}, {"watery", "flat", "lukewarm"}}},
      {"decor", {{"elegant", "stylish", "tasteful"}, {"tacky", "shabby", "drab"}}},
  };
}

void SpuriousSpec::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, m); };
  if (vocab.size() < 3) bad("need at least 3 aspects (a target and up to 2 non-targets)");
  for (const auto& [aspect, v] : vocab) {
    if (v.positive.empty() || v.negative.empty()) bad("aspect '" + aspect + "' has an empty vocab");
    if (v.positive.size() != v.negative.size()) {
      bad("aspect '" + aspect + "' needs as many negative as positive descriptors");
    }
  }
  if (!(rho >= 0 && rho <= 1) || !(rho_test >= 0 && rho_test <= 1)) bad("rho must be in [0, 1]");
  if (!(test_fraction > 0 && test_fraction < 1)) bad("test_fraction must be in (0, 1)");
  if (n_sentences < 2) bad("need at least 2 sentences");
}

SpuriousBench gen_spurious_absa(const SpuriousSpec& spec) {
  spec.validate();
  std::vector<std::string> aspects;
  for (const auto& [a, v] : spec.vocab) aspects.push_back(a);

  std::mt19937_64 rng(spec.seed);
  const auto n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(spec.test_fraction * spec.n_sentences)));
  const std::size_t n_train = spec.n_sentences - n_test;
  std::vector<AbsaInstance> train, test;
  for (std::size_t j = 0; j < n_train; ++j) {
    emit_sentence(spec, aspects, "tr" + std::to_string(j), spec.rho, rng, train);
  }
  for (std::size_t j = 0; j < n_test; ++j) {
    emit_sentence(spec, aspects, "te" + std::to_string(j), spec.rho_test, rng, test);
  }

  SpuriousBench out;
  out.train = Dataset::of_absa(std::move(train));
  out.test = Dataset::of_absa(std::move(test));
  for (auto* d : {&out.train, &out.test}) {
    d->provenance["source"] = "synth-absa";
    d->provenance["seed"] = std::to_string(spec.seed);
  }
  out.train.provenance["rho"] = std::to_string(spec.rho);
  out.test.provenance["rho"] = std::to_string(spec.rho_test);
  for (const auto& [aspect, v] : spec.vocab) {
    for (std::size_t i = 0; i < v.positive.size(); ++i) {
      out.lexicon.add(v.positive[i], Label::kPositive, v.negative[i]);
      out.lexicon.add(v.negative[i], Label::kNegative, v.positive[i]);
    }
    for (const auto& w : v.positive) {
      out.distractors.push_back(Distractor{aspect, aspect + " is " + w, Label::kPositive});
    }
    for (const auto& w : v.negative) {
      out.distractors.push_back(Distractor{aspect, aspect + " is " + w, Label::kNegative});
    }
  }
  out.lexicon.validate();
  return out;
}

bool is_target_instance(const AbsaInstance& inst) {
  return inst.id.size() >= 2 && inst.id.compare(inst.id.size() - 2, 2, ":t") == 0;
}

Dataset targets_only(const Dataset& d) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < d.absa.size(); ++i) {
    if (is_target_instance(d.absa[i])) idx.push_back(i);
  }
  return d.subset(idx);
}

namespace {

struct TweetVocab {
  std::vector<std::string> subjects;
  std::vector<std::string> fillers;
  std::array<std::vector<std::string>, kNumClasses> polar;
  std::vector<std::string> templates;  // {S} subject, {P} polarity word, {T} filler
};

const TweetVocab& tweet_vocab() {
  static const TweetVocab v{
      {"the match", "my phone", "this movie", "the concert", "the food", "our team",
       "the service", "the weather", "the traffic", "the school", "the market", "the show"},
      {"today", "tonight", "this week", "again", "right now", "for real"},
      {{{"good", "great", "amazing", "wonderful", "excellent", "lovely", "fantastic", "brilliant"},
        {"bad", "terrible", "awful", "horrible", "poor", "disappointing", "dreadful", "miserable"},
        {"scheduled", "ordinary", "average", "usual", "normal", "standard", "typical", "regular"}}},
      {"{S} is {P} {T}", "{S} was {P}", "honestly {S} looks {P} {T}", "{S} seems {P}, {T}",
       "@user {S} is {P}", "{T}, {S} was {P}"},
  };
  return v;
}

// Same-class replacement candidates, index-aligned with the vocab lists.
const std::map<std::string, std::string>& synonym_table() {
  static const std::map<std::string, std::string> t = {
      {"good", "fine"}, {"great", "superb"}, {"amazing", "astonishing"}, {"wonderful", "marvelous"},
      {"excellent", "outstanding"}, {"lovely", "delightful"}, {"fantastic", "terrific"},
      {"brilliant", "splendid"}, {"bad", "lousy"}, {"terrible", "atrocious"}, {"awful", "appalling"},
      {"horrible", "horrid"}, {"poor", "shoddy"}, {"disappointing", "underwhelming"},
      {"dreadful", "abysmal"}, {"miserable", "wretched"}, {"scheduled", "planned"},
      {"ordinary", "commonplace"}, {"average", "middling"}, {"usual", "customary"},
      {"normal", "routine"}, {"standard", "conventional"}, {"typical", "characteristic"},
      {"regular", "habitual"}, {"match", "game"}, {"phone", "handset"}, {"movie", "film"},
      {"concert", "gig"}, {"food", "meal"}, {"team", "squad"}, {"service", "staff"},
      {"weather", "climate"}, {"traffic", "congestion"}, {"school", "academy"},
      {"market", "bazaar"}, {"show", "programme"}, {"today", "now"}, {"tonight", "this evening"},
      {"week", "fortnight"}, {"again", "once more"}, {"honestly", "frankly"}, {"looks", "appears"},
      {"seems", "feels"},
  };
  return t;
}

}  // namespace

ShiftedTweets gen_shifted_tweets(std::size_t n, double shift, std::uint64_t seed) {
  if (n < 3) throw Error(ErrorCode::kInvalidArgument, "need at least 3 tweets (one per label)");
  if (!(shift >= 0 && shift <= 1)) throw Error(ErrorCode::kInvalidArgument, "shift must be in [0, 1]");
  const TweetVocab& v = tweet_vocab();
  std::mt19937_64 rng(seed);

  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = label_from_index(static_cast<int>(i % kNumClasses));
  std::shuffle(labels.begin(), labels.end(), rng);

  std::vector<LabeledText> items;
  items.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string t = v.templates[pick(rng, v.templates.size())];
    const auto& polar = v.polar[static_cast<std::size_t>(label_index(labels[i]))];
    auto fill = [&](const std::string& slot, const std::string& value) {
      const auto pos = t.find(slot);
      if (pos != std::string::npos) t.replace(pos, slot.size(), value);
    };
    fill("{S}", v.subjects[pick(rng, v.subjects.size())]);
    fill("{P}", polar[pick(rng, polar.size())]);
    fill("{T}", v.fillers[pick(rng, v.fillers.size())]);
    items.push_back(LabeledText{"synth:" + std::to_string(i + 1), t, labels[i], "en",
                                Domain::kOriginal});
  }

  ShiftedTweets out;
  out.d1 = Dataset::of_tweets(std::move(items));
  out.d1.provenance["source"] = "synth-tweets";
  out.d1.provenance["seed"] = std::to_string(seed);
  out.d1.provenance["shift"] = std::to_string(shift);

  std::vector<std::pair<std::string, std::string>> table(synonym_table().begin(),
                                                         synonym_table().end());
  std::shuffle(table.begin(), table.end(), rng);
  const auto keep = static_cast<std::size_t>(std::llround(shift * static_cast<double>(table.size())));
  for (std::size_t i = 0; i < keep; ++i) out.synonyms.synonyms.insert(table[i]);
  out.synonyms.protected_tokens = {"user"};
  return out;
}

}  // namespace cdg
