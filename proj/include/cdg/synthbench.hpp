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

// Seeded synthetic corpora with known causal structure.

#ifndef CDG_SYNTHBENCH_HPP_
#define CDG_SYNTHBENCH_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cdg/augment.hpp"
#include "cdg/corpus.hpp"
#include "cdg/perturb.hpp"

namespace cdg {

struct DescriptorVocab {
  std::vector<std::string> positive;
  std::vector<std::string> negative;
};

struct SpuriousSpec {
  std::size_t n_sentences = 5000;
  double test_fraction = 0.2;
  // Descriptors per aspect; positive[i] and negative[i] are antonyms.
  std::map<std::string, DescriptorVocab> vocab;
  double rho = 0.9;
  double rho_test = 0.1;
  std::uint64_t seed = 0;
  std::string lang = "en";

  // Restaurant-domain aspects with aspect-specific descriptors.
  static std::map<std::string, DescriptorVocab> default_vocab();
  void validate() const;
};

// Every aspect mention is an instance. The target of sentence "tr12" has id
// "tr12:t"; its non-target aspects are "tr12:n1", "tr12:n2". Test sentences
// use the prefix "te".
struct SpuriousBench {
  Dataset train;
  Dataset test;
  SentimentLexicon lexicon;
  std::vector<Distractor> distractors;
};

SpuriousBench gen_spurious_absa(const SpuriousSpec& spec);

bool is_target_instance(const AbsaInstance& inst);
Dataset targets_only(const Dataset& d);

struct ShiftedTweets {
  Dataset d1;
  SynonymMap synonyms;
};

// Template tweets with an explicit polarity word. `shift` is the fraction of
// vocabulary words that receive a synonym in the returned map.
ShiftedTweets gen_shifted_tweets(std::size_t n, double shift, std::uint64_t seed);

}  // namespace cdg

#endif  // CDG_SYNTHBENCH_HPP_
