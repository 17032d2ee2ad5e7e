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

// ARTS-style perturbation suites for aspect-level data and the aspect
// robustness score.
//
// Edits are lexicon driven: sentiment terms (possibly multiword, matched
// longest first on normalized tokens) inside a token window around an aspect
// mention are swapped for their antonyms. Offsets are code points.

#ifndef CDG_PERTURB_HPP_
#define CDG_PERTURB_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cdg/corpus.hpp"

namespace cdg {

inline constexpr std::size_t kDefaultPerturbWindow = 5;
inline constexpr std::size_t kMaxDistractors = 3;

struct LexiconEntry {
  std::string term;  // as written
  Label polarity = Label::kPositive;
  std::string antonym;

  bool operator==(const LexiconEntry&) const = default;
};

struct SentimentLexicon {
  // Keyed by the normalized token sequence joined with single spaces.
  std::map<std::string, LexiconEntry> entries;

  // Throws kInvalidLexicon on a duplicate or empty term.
  void add(std::string_view term, Label polarity, std::string_view antonym);
  // Polarities are positive/negative and an antonym that is itself listed
  // has the opposite polarity.
  void validate() const;
  const LexiconEntry* find(std::string_view normalized_key) const;
  std::size_t max_term_tokens() const { return max_tokens_; }

 private:
  std::size_t max_tokens_ = 0;
};

// {"entries":[{"term":..,"polarity":..,"antonym":..}, ...]}
SentimentLexicon parse_lexicon(std::string_view json_text);
SentimentLexicon load_lexicon(const std::filesystem::path& path);
std::string lexicon_json(const SentimentLexicon& lex);

struct Distractor {
  std::string aspect;
  std::string clause;
  Label polarity = Label::kNegative;

  bool operator==(const Distractor&) const = default;
};

// {"distractors":[{"aspect":..,"clause":..,"polarity":..}, ...]}
std::vector<Distractor> parse_distractors(std::string_view json_text);
std::vector<Distractor> load_distractors(const std::filesystem::path& path);
std::string distractors_json(const std::vector<Distractor>& pool);

enum class SkipReason { kNeutralTarget, kNoSentimentTerm, kNoNonTarget, kAspectNotFound, kNoDistractor };
std::string_view skip_reason_name(SkipReason r);

struct PerturbResult {
  std::optional<AbsaInstance> instance;
  std::optional<SkipReason> skipped;

  bool ok() const { return instance.has_value(); }
};

PerturbResult rev_tgt(const AbsaInstance& inst, const SentimentLexicon& lex,
                      std::size_t window = kDefaultPerturbWindow);

// `siblings` may include `inst` itself; it is ignored by id. Tokens inside
// the target window are never edited.
PerturbResult rev_non(const AbsaInstance& inst, const std::vector<const AbsaInstance*>& siblings,
                      const SentimentLexicon& lex, std::size_t window = kDefaultPerturbWindow);

// Appends ", but " and up to kMaxDistractors clauses of opposite polarity
// (any polarity for a neutral target). Throws kInvalidArgument when the pool
// is empty.
PerturbResult add_diff(const AbsaInstance& inst, const std::vector<Distractor>& pool,
                       std::uint64_t seed);

struct PerturbationGroup {
  AbsaInstance original;
  std::vector<AbsaInstance> variants;
};

struct SkipRecord {
  std::string id;
  Perturbation perturbation = Perturbation::kNone;
  SkipReason reason = SkipReason::kNoSentimentTerm;
};

struct PerturbationSuite {
  std::vector<PerturbationGroup> groups;  // only groups with >= 1 variant
  std::vector<SkipRecord> skipped;

  Dataset originals() const;
  Dataset variants(Perturbation p) const;
  // Originals followed by every variant.
  Dataset all_instances() const;
};

struct SuiteOptions {
  std::size_t window = kDefaultPerturbWindow;
  std::uint64_t seed = 0;
  // Which instances get perturbed; null means all unperturbed ones.
  std::function<bool(const AbsaInstance&)> is_original;
};

PerturbationSuite build_suite(const Dataset& d, const SentimentLexicon& lex,
                              const std::vector<Distractor>& pool, const SuiteOptions& opts = {});

// Fraction of groups predicted correctly on the original and on every
// variant. Throws kMissingPrediction naming the first uncovered id.
double ars(const std::vector<PerturbationGroup>& groups,
           const std::unordered_map<std::string, Label>& predictions);

}  // namespace cdg

#endif  // CDG_PERTURB_HPP_
