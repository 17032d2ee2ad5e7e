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

#ifndef CDG_ALIGN_HPP_
#define CDG_ALIGN_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "cdg/corpus.hpp"
#include "cdg/text.hpp"

namespace cdg {

inline constexpr std::size_t kDefaultAlignNgram = 4;

struct AlignmentResult {
  Span span;
  std::size_t token_begin = 0;
  std::size_t token_length = 0;
  std::vector<std::string> matched_ngram;
  double similarity = 0.0;
  bool exact = false;
};

// Best contiguous review n-gram (length <= n_max) for the aspect term by
// cosine similarity of pooled embeddings. Ties go to the leftmost start,
// then the shorter n-gram. A token-identical n-gram wins outright and
// reports similarity 1.
AlignmentResult align_aspect(const TokenSeq& review, const TokenSeq& aspect, std::size_t n_max,
                             const Embedder& embedder);

struct AlignmentRow {
  std::string id;
  double similarity = 0.0;
  bool exact = false;
};

// Replaces every instance's span with the aligned one; spans in the input
// need not be valid.
Dataset align_dataset(const Dataset& d, std::size_t n_max, const Embedder& embedder,
                      const StopwordSet& stopwords, std::vector<AlignmentRow>* rows);

std::string alignment_csv(const std::vector<AlignmentRow>& rows);

}  // namespace cdg

#endif  // CDG_ALIGN_HPP_
