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

// Text preprocessing and the sentence embedding provider.
//
// Preprocessing splits on whitespace and punctuation, lowercases and
// NFC-normalizes each token, and drops stopwords. Token spans point back into
// the original (unnormalized) text in code points.
//
// Two embedders are provided: a hashed bag of pseudo-random unit vectors
// (self-contained) and a word2vec-style text file of pretrained vectors.
// Both mean-pool token vectors; the empty sequence embeds to zero.

#ifndef CDG_TEXT_HPP_
#define CDG_TEXT_HPP_

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cdg/corpus.hpp"

namespace cdg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using StopwordSet = std::unordered_set<std::string>;

struct TokenSeq {
  std::vector<std::string> tokens;
  std::string original_text;
  std::vector<Span> spans;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  // Subsequence [begin, end) keeping the same original text.
  TokenSeq slice(std::size_t begin, std::size_t end) const;
};

StopwordSet make_stopwords(const std::vector<std::string>& words);
StopwordSet load_stopwords(const std::filesystem::path& path);

TokenSeq preprocess(std::string_view raw, const StopwordSet& stopwords = {});

struct Ngram {
  std::size_t begin = 0;  // token index
  std::size_t length = 0;
  Span span;              // merged character span
};

// Every contiguous run of 1..min(n_max, size) tokens, ordered by start then
// length.
std::vector<Ngram> ngrams(const TokenSeq& t, std::size_t n_max);

// 64-bit FNV-1a; stable across platforms, used for hashing and seed mixing.
std::uint64_t fnv1a(std::string_view s);

// Defined as 0 when either norm is below 1e-12.
double cosine(const Vector& u, const Vector& v);

enum class EmbedderKind { kHashedBag, kFileBacked };

struct EmbedderSpec {
  EmbedderKind kind = EmbedderKind::kHashedBag;
  std::size_t dim = 64;
  std::uint64_t hash_buckets = 65536;
  std::string vectors_path;

  void validate() const;
  bool operator==(const EmbedderSpec&) const = default;
};

std::string_view embedder_kind_name(EmbedderKind kind);

class Embedder {
 public:
  static Embedder hashed(std::size_t dim = 64, std::uint64_t buckets = 65536);
  // Dimension is taken from the first line and enforced on every other line.
  // Tokens are normalized the same way preprocess() normalizes them.
  static Embedder from_file(const std::filesystem::path& path);
  static Embedder from_spec(const EmbedderSpec& spec);
  // In-memory vectors, treated as file-backed.
  static Embedder from_vectors(std::unordered_map<std::string, Vector> vectors);

  const EmbedderSpec& spec() const { return spec_; }
  std::size_t dim() const { return spec_.dim; }

  // Vector for a single normalized token. Unknown tokens of a file-backed
  // embedder give the zero vector.
  Vector token_vector(std::string_view token) const;

  Vector embed(const TokenSeq& t) const;
  Vector embed_tokens(std::span<const std::string> tokens) const;

 private:
  EmbedderSpec spec_;
  std::unordered_map<std::string, Vector> vectors_;
};

}  // namespace cdg

#endif  // CDG_TEXT_HPP_
