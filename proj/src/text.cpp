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

#include "cdg/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "cdg/error.hpp"
#include "cdg/unicode.hpp"

namespace cdg {

TokenSeq TokenSeq::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, tokens.size());
  begin = std::min(begin, end);
  TokenSeq out;
  out.original_text = original_text;
  out.tokens.assign(tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                    tokens.begin() + static_cast<std::ptrdiff_t>(end));
  out.spans.assign(spans.begin() + static_cast<std::ptrdiff_t>(begin),
                   spans.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

StopwordSet make_stopwords(const std::vector<std::string>& words) {
  StopwordSet out;
  for (const auto& w : words) {
    std::string norm = unicode::normalize_token(unicode::trim(w));
    if (!norm.empty()) out.insert(std::move(norm));
  }
  return out;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open stopwords '" + path.string() + "'");
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) words.push_back(line);
  return make_stopwords(words);
}

TokenSeq preprocess(std::string_view raw, const StopwordSet& stopwords) {
  TokenSeq out;
  out.original_text = std::string(raw);
  const std::u32string cps = unicode::to_u32(raw);
  std::size_t i = 0;
  while (i < cps.size()) {
    if (unicode::is_token_boundary(cps[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && !unicode::is_token_boundary(cps[j])) ++j;
    std::string token = unicode::normalize_token(
        unicode::to_utf8(std::u32string_view(cps).substr(i, j - i)));
    if (!token.empty() && stopwords.count(token) == 0) {
      out.tokens.push_back(std::move(token));
      out.spans.push_back(Span{i, j});
    }
    i = j;
  }
  return out;
}

std::vector<Ngram> ngrams(const TokenSeq& t, std::size_t n_max) {
  if (n_max == 0) throw Error(ErrorCode::kInvalidArgument, "n_max must be >= 1");
  std::vector<Ngram> out;
  const std::size_t len = t.size();
  for (std::size_t b = 0; b < len; ++b) {
    for (std::size_t n = 1; n <= n_max && b + n <= len; ++n) {
      out.push_back(Ngram{b, n, Span{t.spans[b].start, t.spans[b + n - 1].end}});
    }
  }
  return out;
}

double cosine(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cosine of vectors with dimensions " + std::to_string(u.size()) + " and " +
                    std::to_string(v.size()));
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu < 1e-12 || nv < 1e-12) return 0.0;
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

std::string_view embedder_kind_name(EmbedderKind kind) {
  return kind == EmbedderKind::kHashedBag ? "hashed_bag" : "file_backed";
}

void EmbedderSpec::validate() const {
  if (dim == 0) throw Error(ErrorCode::kInvalidArgument, "embedding dimension must be > 0");
  if (kind == EmbedderKind::kHashedBag &&
      (hash_buckets == 0 || (hash_buckets & (hash_buckets - 1)) != 0)) {
    throw Error(ErrorCode::kInvalidArgument, "hash_buckets must be a power of two");
  }
}

Embedder Embedder::hashed(std::size_t dim, std::uint64_t buckets) {
  Embedder e;
  e.spec_.kind = EmbedderKind::kHashedBag;
  e.spec_.dim = dim;
  e.spec_.hash_buckets = buckets;
  e.spec_.validate();
  return e;
}

Embedder Embedder::from_vectors(std::unordered_map<std::string, Vector> vectors) {
  Embedder e;
  e.spec_.kind = EmbedderKind::kFileBacked;
  e.spec_.dim = vectors.empty() ? 0 : static_cast<std::size_t>(vectors.begin()->second.size());
  for (const auto& [tok, v] : vectors) {
    if (static_cast<std::size_t>(v.size()) != e.spec_.dim) {
      throw Error(ErrorCode::kDimensionMismatch, "vector for '" + tok + "' has wrong dimension");
    }
    e.vectors_.emplace(unicode::normalize_token(tok), v);
  }
  e.spec_.validate();
  return e;
}

Embedder Embedder::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kFileNotFound, "cannot open vectors file '" + path.string() + "'");
  }
  Embedder e;
  e.spec_.kind = EmbedderKind::kFileBacked;
  e.spec_.dim = 0;
  e.spec_.vectors_path = path.string();
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    values.clear();
    std::string num;
    while (fields >> num) {
      double x = 0;
      auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), x);
      if (ec != std::errc() || ptr != num.data() + num.size() || !std::isfinite(x)) {
        throw Error(ErrorCode::kMalformedLine,
                    path.filename().string() + ":" + std::to_string(lineno) +
                        ": bad number '" + num + "'",
                    lineno);
      }
      values.push_back(x);
    }
    if (values.empty()) {
      throw Error(ErrorCode::kMalformedLine,
                  path.filename().string() + ":" + std::to_string(lineno) + ": no vector values",
                  lineno);
    }
    if (e.spec_.dim == 0) e.spec_.dim = values.size();
    if (values.size() != e.spec_.dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  path.filename().string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(e.spec_.dim) + " values, got " +
                      std::to_string(values.size()),
                  lineno);
    }
    Vector v = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    e.vectors_.try_emplace(unicode::normalize_token(token), std::move(v));
  }
  if (e.vectors_.empty()) {
    throw Error(ErrorCode::kEmptyFile, "vectors file '" + path.string() + "' is empty");
  }
  return e;
}

Embedder Embedder::from_spec(const EmbedderSpec& spec) {
  spec.validate();
  if (spec.kind == EmbedderKind::kHashedBag) return hashed(spec.dim, spec.hash_buckets);
  Embedder e = from_file(spec.vectors_path);
  if (e.dim() != spec.dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "vectors file dimension " + std::to_string(e.dim()) + " does not match " +
                    std::to_string(spec.dim));
  }
  return e;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Vector Embedder::token_vector(std::string_view token) const {
  const auto d = static_cast<Eigen::Index>(spec_.dim);
  if (spec_.kind == EmbedderKind::kFileBacked) {
    auto it = vectors_.find(std::string(token));
    return it == vectors_.end() ? Vector::Zero(d) : it->second;
  }
  const std::uint64_t bucket = fnv1a(token) & (spec_.hash_buckets - 1);
  std::mt19937_64 rng(bucket * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = gauss(rng);
  return v / v.norm();
}

Vector Embedder::embed_tokens(std::span<const std::string> tokens) const {
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(spec_.dim));
  if (tokens.empty()) return sum;
  // Summing in sorted order makes the mean exactly permutation invariant.
  std::vector<std::string_view> sorted(tokens.begin(), tokens.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::string_view tok : sorted) sum += token_vector(tok);
  return sum / static_cast<double>(tokens.size());
}

Vector Embedder::embed(const TokenSeq& t) const { return embed_tokens(t.tokens); }

}  // namespace cdg
