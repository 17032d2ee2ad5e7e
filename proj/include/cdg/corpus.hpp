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

// Sentiment datasets: tweet-level (TSV) and aspect-level (JSONL) ingestion,
// splitting and domain combination.

#ifndef CDG_CORPUS_HPP_
#define CDG_CORPUS_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cdg {

// Declaration order is the argmax tie-break order used everywhere.
enum class Label : int { kPositive = 0, kNegative = 1, kNeutral = 2 };
inline constexpr int kNumClasses = 3;

std::string_view label_name(Label label);
std::optional<Label> try_parse_label(std::string_view s);
inline int label_index(Label label) { return static_cast<int>(label); }
inline Label label_from_index(int i) { return static_cast<Label>(i); }
// positive <-> negative; neutral stays neutral.
Label flip_polarity(Label label);

enum class Domain { kOriginal, kParaphrased };
std::string_view domain_name(Domain domain);

struct LabeledText {
  std::string id;
  std::string text;
  Label label = Label::kNeutral;
  std::string lang;
  Domain domain = Domain::kOriginal;

  bool operator==(const LabeledText&) const = default;
};

enum class Perturbation { kNone, kRevTgt, kRevNon, kAddDiff };
std::string_view perturbation_name(Perturbation p);
std::optional<Perturbation> try_parse_perturbation(std::string_view s);

// Half-open code point range.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Span&) const = default;
};

struct AbsaInstance {
  std::string id;
  std::string sentence_id;
  std::string lang;
  std::string text;
  std::string aspect;
  Span span;
  Label polarity = Label::kNeutral;
  Perturbation perturbation = Perturbation::kNone;
  std::optional<std::string> source_id;

  bool operator==(const AbsaInstance&) const = default;
};

enum class DatasetKind { kTweet, kAbsa };
std::string_view dataset_kind_name(DatasetKind kind);

// Homogeneous: only the vector matching `kind` is populated.
struct Dataset {
  DatasetKind kind = DatasetKind::kTweet;
  std::vector<LabeledText> tweets;
  std::vector<AbsaInstance> absa;
  std::map<std::string, std::string> provenance;

  static Dataset of_tweets(std::vector<LabeledText> items);
  static Dataset of_absa(std::vector<AbsaInstance> items);

  std::size_t size() const;
  bool empty() const { return size() == 0; }
  const std::string& id_at(std::size_t i) const;
  Label label_at(std::size_t i) const;
  std::vector<Label> labels() const;

  // Items sharing `sentence_id`, in dataset order.
  std::vector<const AbsaInstance*> by_sentence(std::string_view sentence_id) const;

  // Throws kDuplicateId if ids collide.
  void check_unique_ids() const;

  Dataset subset(const std::vector<std::size_t>& indices) const;
};

// The 17 Afri-SemEval language codes plus "en".
bool is_known_language(std::string_view code);

Dataset load_tweets(const std::filesystem::path& path, std::string_view lang);
Dataset parse_tweets(std::istream& in, std::string_view source_name, std::string_view lang);
void save_tweets(const Dataset& d, const std::filesystem::path& path);
void write_tweets(const Dataset& d, std::ostream& out);

// With validate_spans=false, out-of-range spans are kept as read (used by
// alignment, which recomputes them).
Dataset load_absa(const std::filesystem::path& path, bool validate_spans = true);
Dataset parse_absa(std::istream& in, std::string_view source_name, bool validate_spans = true);
void save_absa(const Dataset& d, const std::filesystem::path& path);
void write_absa(const Dataset& d, std::ostream& out);
std::string absa_to_json_line(const AbsaInstance& inst);

// Picks the loader from the extension (.tsv/.txt -> tweets, .jsonl/.json ->
// absa) unless `kind` is given.
Dataset load_dataset(const std::filesystem::path& path, std::optional<DatasetKind> kind,
                     std::string_view lang);
void save_dataset(const Dataset& d, const std::filesystem::path& path);

Dataset make_combined(const Dataset& d1, const Dataset& d2, std::uint64_t seed);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

// Largest-remainder apportionment of n items; ties go to the earlier split.
std::array<std::size_t, 3> apportion(std::size_t n, const SplitRatios& ratios);

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

SplitIndices split_indices(const std::vector<Label>& labels, const SplitRatios& ratios,
                           std::uint64_t seed, bool stratify_by_label);

struct Splits {
  Dataset train, val, test;
};

Splits split(const Dataset& d, const SplitRatios& ratios, std::uint64_t seed,
             bool stratify_by_label);
Splits apply_split(const Dataset& d, const SplitIndices& idx);

}  // namespace cdg

#endif  // CDG_CORPUS_HPP_
