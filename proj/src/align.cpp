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

#include "cdg/align.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "cdg/error.hpp"

namespace cdg {

namespace {

// Similarities this close count as equal, so pooling round-off cannot
// override the leftmost-then-shortest tie-break.
constexpr double kTieTolerance = 1e-12;

bool tokens_equal(const TokenSeq& review, std::size_t begin, const TokenSeq& aspect) {
  return std::equal(aspect.tokens.begin(), aspect.tokens.end(),
                    review.tokens.begin() + static_cast<std::ptrdiff_t>(begin));
}

AlignmentResult make_result(const TokenSeq& review, std::size_t begin, std::size_t length,
                            double similarity, bool exact) {
  AlignmentResult r;
  r.token_begin = begin;
  r.token_length = length;
  r.span = Span{review.spans[begin].start, review.spans[begin + length - 1].end};
  r.matched_ngram.assign(review.tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                         review.tokens.begin() + static_cast<std::ptrdiff_t>(begin + length));
  r.similarity = similarity;
  r.exact = exact;
  return r;
}

}  // namespace

AlignmentResult align_aspect(const TokenSeq& review, const TokenSeq& aspect, std::size_t n_max,
                             const Embedder& embedder) {
  if (review.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot align in an empty review");
  if (aspect.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot align an empty aspect");
  if (n_max == 0) throw Error(ErrorCode::kInvalidArgument, "n_max must be >= 1");

  if (aspect.size() <= n_max && aspect.size() <= review.size()) {
    for (std::size_t b = 0; b + aspect.size() <= review.size(); ++b) {
      if (tokens_equal(review, b, aspect)) return make_result(review, b, aspect.size(), 1.0, true);
    }
  }

  const Vector target = embedder.embed(aspect);
  std::size_t best_begin = 0;
  std::size_t best_len = 1;
  double best = -2.0;
  for (const Ngram& g : ngrams(review, n_max)) {
    const auto first = review.tokens.begin() + static_cast<std::ptrdiff_t>(g.begin);
    const std::vector<std::string> window(first, first + static_cast<std::ptrdiff_t>(g.length));
    const double sim = cosine(target, embedder.embed_tokens(window));
    if (sim > best + kTieTolerance) {
      best = sim;
      best_begin = g.begin;
      best_len = g.length;
    }
  }
  return make_result(review, best_begin, best_len, best, false);
}

Dataset align_dataset(const Dataset& d, std::size_t n_max, const Embedder& embedder,
                      const StopwordSet& stopwords, std::vector<AlignmentRow>* rows) {
  if (d.kind != DatasetKind::kAbsa) {
    throw Error(ErrorCode::kKindMismatch, "alignment needs an absa dataset");
  }
  Dataset out = d;
  if (rows) rows->clear();
  for (std::size_t i = 0; i < out.absa.size(); ++i) {
    AbsaInstance& inst = out.absa[i];
    const TokenSeq review = preprocess(inst.text, stopwords);
    const TokenSeq aspect = preprocess(inst.aspect, stopwords);
    if (review.empty() || aspect.empty()) {
      throw Error(ErrorCode::kEmptyText,
                  "instance '" + inst.id + "': review or aspect has no tokens", i + 1,
                  review.empty() ? "text" : "aspect");
    }
    const AlignmentResult r = align_aspect(review, aspect, n_max, embedder);
    inst.span = r.span;
    if (rows) rows->push_back(AlignmentRow{inst.id, r.similarity, r.exact});
  }
  out.provenance["aligned_n_max"] = std::to_string(n_max);
  return out;
}

std::string alignment_csv(const std::vector<AlignmentRow>& rows) {
  std::ostringstream out;
  out << "id,similarity,exact\n";
  for (const auto& r : rows) {
    std::string id = r.id;
    if (id.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : id) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      id = quoted + "\"";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", r.similarity);
    out << id << ',' << buf << ',' << (r.exact ? "true" : "false") << '\n';
  }
  return out.str();
}

}  // namespace cdg
