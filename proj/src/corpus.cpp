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

#include "cdg/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "cdg/error.hpp"
#include "cdg/log.hpp"
#include "cdg/unicode.hpp"
#include "json.hpp"

namespace cdg {

using nlohmann::json;

std::string_view label_name(Label label) {
  switch (label) {
    case Label::kPositive: return "positive";
    case Label::kNegative: return "negative";
    case Label::kNeutral: return "neutral";
  }
  return "neutral";
}

std::optional<Label> try_parse_label(std::string_view s) {
  if (s == "positive") return Label::kPositive;
  if (s == "negative") return Label::kNegative;
  if (s == "neutral") return Label::kNeutral;
  return std::nullopt;
}

Label flip_polarity(Label label) {
  switch (label) {
    case Label::kPositive: return Label::kNegative;
    case Label::kNegative: return Label::kPositive;
    case Label::kNeutral: return Label::kNeutral;
  }
  return label;
}

std::string_view domain_name(Domain domain) {
  return domain == Domain::kOriginal ? "original" : "paraphrased";
}

std::string_view perturbation_name(Perturbation p) {
  switch (p) {
    case Perturbation::kNone: return "none";
    case Perturbation::kRevTgt: return "revtgt";
    case Perturbation::kRevNon: return "revnon";
    case Perturbation::kAddDiff: return "adddiff";
  }
  return "none";
}

std::optional<Perturbation> try_parse_perturbation(std::string_view s) {
  if (s == "none") return Perturbation::kNone;
  if (s == "revtgt") return Perturbation::kRevTgt;
  if (s == "revnon") return Perturbation::kRevNon;
  if (s == "adddiff") return Perturbation::kAddDiff;
  return std::nullopt;
}

std::string_view dataset_kind_name(DatasetKind kind) {
  return kind == DatasetKind::kTweet ? "tweet" : "absa";
}

Dataset Dataset::of_tweets(std::vector<LabeledText> items) {
  Dataset d;
  d.kind = DatasetKind::kTweet;
  d.tweets = std::move(items);
  return d;
}

Dataset Dataset::of_absa(std::vector<AbsaInstance> items) {
  Dataset d;
  d.kind = DatasetKind::kAbsa;
  d.absa = std::move(items);
  return d;
}

std::size_t Dataset::size() const {
  return kind == DatasetKind::kTweet ? tweets.size() : absa.size();
}

const std::string& Dataset::id_at(std::size_t i) const {
  return kind == DatasetKind::kTweet ? tweets.at(i).id : absa.at(i).id;
}

Label Dataset::label_at(std::size_t i) const {
  return kind == DatasetKind::kTweet ? tweets.at(i).label : absa.at(i).polarity;
}

std::vector<Label> Dataset::labels() const {
  std::vector<Label> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(label_at(i));
  return out;
}

std::vector<const AbsaInstance*> Dataset::by_sentence(std::string_view sentence_id) const {
  std::vector<const AbsaInstance*> out;
  for (const auto& inst : absa) {
    if (inst.sentence_id == sentence_id) out.push_back(&inst);
  }
  return out;
}

void Dataset::check_unique_ids() const {
  std::unordered_set<std::string> seen;
  seen.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    if (!seen.insert(id_at(i)).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate id '" + id_at(i) + "'", i + 1, "id");
    }
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.kind = kind;
  out.provenance = provenance;
  if (kind == DatasetKind::kTweet) {
    out.tweets.reserve(indices.size());
    for (std::size_t i : indices) out.tweets.push_back(tweets.at(i));
  } else {
    out.absa.reserve(indices.size());
    for (std::size_t i : indices) out.absa.push_back(absa.at(i));
  }
  return out;
}

bool is_known_language(std::string_view code) {
  static const std::set<std::string_view> kCodes = {
      "af", "am", "ha", "ig", "ln", "lug", "nso", "nya", "run",
      "rw", "sn", "so", "st", "tn", "xh",  "yo",  "zu",  "en"};
  return kCodes.count(code) > 0;
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kFileNotFound, "cannot open '" + path.string() + "'", std::nullopt,
                path.string());
  }
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool blank(std::string_view line) { return unicode::trim(line).empty(); }

std::string where(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

}  // namespace

Dataset parse_tweets(std::istream& in, std::string_view source_name, std::string_view lang) {
  if (!lang.empty() && !is_known_language(lang)) {
    log::warn("unrecognized language code '" + std::string(lang) + "' for " +
              std::string(source_name));
  }
  std::vector<LabeledText> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (blank(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw Error(ErrorCode::kMalformedLine,
                  where(source_name, lineno) + ": expected exactly two tab-separated columns",
                  lineno);
    }
    std::string text = line.substr(0, tab);
    const std::string label_str = line.substr(tab + 1);
    const auto label = try_parse_label(label_str);
    if (!label) {
      throw Error(ErrorCode::kUnknownLabel,
                  where(source_name, lineno) + ": unknown label '" + label_str + "'", lineno,
                  "label");
    }
    if (blank(text)) {
      throw Error(ErrorCode::kEmptyText, where(source_name, lineno) + ": empty text", lineno,
                  "text");
    }
    LabeledText item;
    item.id = std::string(source_name) + ":" + std::to_string(lineno);
    item.text = std::move(text);
    item.label = *label;
    item.lang = std::string(lang);
    item.domain = Domain::kOriginal;
    items.push_back(std::move(item));
  }
  if (items.empty()) {
    throw Error(ErrorCode::kEmptyFile, std::string(source_name) + ": no data lines");
  }
  Dataset d = Dataset::of_tweets(std::move(items));
  d.provenance["source"] = std::string(source_name);
  d.provenance["lang"] = std::string(lang);
  d.check_unique_ids();
  return d;
}

Dataset load_tweets(const std::filesystem::path& path, std::string_view lang) {
  std::ifstream in = open_input(path);
  Dataset d = parse_tweets(in, path.filename().string(), lang);
  d.provenance["path"] = path.string();
  return d;
}

void write_tweets(const Dataset& d, std::ostream& out) {
  if (d.kind != DatasetKind::kTweet) {
    throw Error(ErrorCode::kKindMismatch, "write_tweets on an absa dataset");
  }
  for (const auto& t : d.tweets) {
    if (t.text.find('\t') != std::string::npos || t.text.find('\n') != std::string::npos) {
      throw Error(ErrorCode::kMalformedLine, "tweet '" + t.id + "' contains a tab or newline");
    }
    out << t.text << '\t' << label_name(t.label) << '\n';
  }
}

void save_tweets(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  write_tweets(d, out);
}

namespace {

const json& require(const json& obj, const char* field, std::size_t lineno,
                    std::string_view source) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) {
    throw Error(ErrorCode::kMissingField,
                where(source, lineno) + ": missing field '" + field + "'", lineno, field);
  }
  return *it;
}

std::string require_string(const json& obj, const char* field, std::size_t lineno,
                           std::string_view source) {
  const json& v = require(obj, field, lineno, source);
  if (!v.is_string()) {
    throw Error(ErrorCode::kMalformedLine,
                where(source, lineno) + ": field '" + field + "' must be a string", lineno,
                field);
  }
  return v.get<std::string>();
}

std::size_t require_offset(const json& obj, const char* field, std::size_t lineno,
                           std::string_view source) {
  const json& v = require(obj, field, lineno, source);
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::kMalformedLine,
                where(source, lineno) + ": field '" + field + "' must be an integer", lineno,
                field);
  }
  const auto value = v.get<long long>();
  if (value < 0) {
    throw Error(ErrorCode::kSpanOutOfBounds,
                where(source, lineno) + ": negative '" + field + "'", lineno, field);
  }
  return static_cast<std::size_t>(value);
}

}  // namespace

Dataset parse_absa(std::istream& in, std::string_view source_name, bool validate_spans) {
  std::vector<AbsaInstance> items;
  std::set<std::string> warned;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (blank(line)) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kMalformedLine,
                  where(source_name, lineno) + ": invalid JSON (" + e.what() + ")", lineno);
    }
    if (!obj.is_object()) {
      throw Error(ErrorCode::kMalformedLine, where(source_name, lineno) + ": expected an object",
                  lineno);
    }
    AbsaInstance inst;
    inst.id = require_string(obj, "id", lineno, source_name);
    inst.sentence_id = require_string(obj, "sentence_id", lineno, source_name);
    inst.lang = require_string(obj, "lang", lineno, source_name);
    inst.text = require_string(obj, "text", lineno, source_name);
    inst.aspect = require_string(obj, "aspect", lineno, source_name);
    inst.span.start = require_offset(obj, "span_start", lineno, source_name);
    inst.span.end = require_offset(obj, "span_end", lineno, source_name);
    const std::string pol = require_string(obj, "polarity", lineno, source_name);
    const auto label = try_parse_label(pol);
    if (!label) {
      throw Error(ErrorCode::kUnknownLabel,
                  where(source_name, lineno) + ": invalid polarity '" + pol + "'", lineno,
                  "polarity");
    }
    inst.polarity = *label;
    if (auto it = obj.find("perturbation"); it != obj.end() && !it->is_null()) {
      const auto p = it->is_string() ? try_parse_perturbation(it->get<std::string>())
                                     : std::nullopt;
      if (!p) {
        throw Error(ErrorCode::kMalformedLine,
                    where(source_name, lineno) + ": invalid perturbation", lineno,
                    "perturbation");
      }
      inst.perturbation = *p;
    }
    if (auto it = obj.find("source_id"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) {
        throw Error(ErrorCode::kMalformedLine,
                    where(source_name, lineno) + ": field 'source_id' must be a string",
                    lineno, "source_id");
      }
      inst.source_id = it->get<std::string>();
    }
    if (inst.perturbation != Perturbation::kNone && !inst.source_id) {
      throw Error(ErrorCode::kMissingField,
                  where(source_name, lineno) + ": perturbed instance without 'source_id'",
                  lineno, "source_id");
    }
    const std::size_t len = unicode::length(inst.text);
    if (validate_spans && !(inst.span.start < inst.span.end && inst.span.end <= len)) {
      throw Error(ErrorCode::kSpanOutOfBounds,
                  where(source_name, lineno) + ": span [" + std::to_string(inst.span.start) +
                      ", " + std::to_string(inst.span.end) + ") outside text of length " +
                      std::to_string(len),
                  lineno, "span_end");
    }
    if (!is_known_language(inst.lang) && warned.insert(inst.lang).second) {
      log::warn("unrecognized language code '" + inst.lang + "' in " +
                std::string(source_name));
    }
    items.push_back(std::move(inst));
  }
  if (items.empty()) {
    throw Error(ErrorCode::kEmptyFile, std::string(source_name) + ": no data lines");
  }
  Dataset d = Dataset::of_absa(std::move(items));
  d.provenance["source"] = std::string(source_name);
  d.check_unique_ids();
  return d;
}

Dataset load_absa(const std::filesystem::path& path, bool validate_spans) {
  std::ifstream in = open_input(path);
  Dataset d = parse_absa(in, path.filename().string(), validate_spans);
  d.provenance["path"] = path.string();
  return d;
}

std::string absa_to_json_line(const AbsaInstance& inst) {
  json obj = {
      {"id", inst.id},
      {"sentence_id", inst.sentence_id},
      {"lang", inst.lang},
      {"text", inst.text},
      {"aspect", inst.aspect},
      {"span_start", inst.span.start},
      {"span_end", inst.span.end},
      {"polarity", std::string(label_name(inst.polarity))},
  };
  if (inst.perturbation != Perturbation::kNone) {
    obj["perturbation"] = std::string(perturbation_name(inst.perturbation));
  }
  if (inst.source_id) obj["source_id"] = *inst.source_id;
  return obj.dump();
}

void write_absa(const Dataset& d, std::ostream& out) {
  if (d.kind != DatasetKind::kAbsa) {
    throw Error(ErrorCode::kKindMismatch, "write_absa on a tweet dataset");
  }
  for (const auto& inst : d.absa) out << absa_to_json_line(inst) << '\n';
}

void save_absa(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  write_absa(d, out);
}

Dataset load_dataset(const std::filesystem::path& path, std::optional<DatasetKind> kind,
                     std::string_view lang) {
  if (!kind) {
    const std::string ext = path.extension().string();
    kind = (ext == ".jsonl" || ext == ".json") ? DatasetKind::kAbsa : DatasetKind::kTweet;
  }
  return *kind == DatasetKind::kAbsa ? load_absa(path) : load_tweets(path, lang);
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  if (d.kind == DatasetKind::kAbsa) {
    save_absa(d, path);
  } else {
    save_tweets(d, path);
  }
}

Dataset make_combined(const Dataset& d1, const Dataset& d2, std::uint64_t seed) {
  if (d1.kind != d2.kind) {
    throw Error(ErrorCode::kKindMismatch, "cannot combine tweet and absa datasets");
  }
  if (d1.size() != d2.size()) {
    throw Error(ErrorCode::kSizeMismatch, "combined domains must have equal size (" +
                                              std::to_string(d1.size()) + " vs " +
                                              std::to_string(d2.size()) + ")");
  }
  Dataset out;
  out.kind = d1.kind;
  const std::size_t n = d1.size() + d2.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t k : order) {
    const Dataset& src = k < d1.size() ? d1 : d2;
    const std::size_t i = k < d1.size() ? k : k - d1.size();
    if (out.kind == DatasetKind::kTweet) {
      out.tweets.push_back(src.tweets[i]);
    } else {
      out.absa.push_back(src.absa[i]);
    }
  }
  auto source_of = [](const Dataset& d) {
    auto it = d.provenance.find("source");
    return it == d.provenance.end() ? std::string("<memory>") : it->second;
  };
  out.provenance["source"] = "combined";
  out.provenance["source_d1"] = source_of(d1);
  out.provenance["source_d2"] = source_of(d2);
  out.provenance["seed"] = std::to_string(seed);
  out.check_unique_ids();
  return out;
}

std::array<std::size_t, 3> apportion(std::size_t n, const SplitRatios& ratios) {
  const std::array<double, 3> r = {ratios.train, ratios.val, ratios.test};
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * r[i];
    // Guard against 0.8 * 10 = 7.999999999.
    const double fl = std::floor(exact + 1e-9);
    sizes[i] = static_cast<std::size_t>(fl);
    rem[i] = exact - fl;
    assigned += sizes[i];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b] + 1e-12; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) sizes[order[k % 3]] += 1;
  return sizes;
}

namespace {

void check_ratios(const SplitRatios& r) {
  if (!(r.train > 0 && r.val > 0 && r.test > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "split ratios must be positive");
  }
  if (std::abs(r.train + r.val + r.test - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "split ratios must sum to 1");
  }
}

}  // namespace

SplitIndices split_indices(const std::vector<Label>& labels, const SplitRatios& ratios,
                           std::uint64_t seed, bool stratify_by_label) {
  check_ratios(ratios);
  if (labels.size() < 3) {
    throw Error(ErrorCode::kDatasetTooSmall, "need at least 3 items to split, got " +
                                                 std::to_string(labels.size()));
  }
  std::mt19937_64 rng(seed);
  SplitIndices out;
  auto deal = [&](std::vector<std::size_t>& pool) {
    std::shuffle(pool.begin(), pool.end(), rng);
    const auto sizes = apportion(pool.size(), ratios);
    auto it = pool.begin();
    out.train.insert(out.train.end(), it, it + static_cast<std::ptrdiff_t>(sizes[0]));
    it += static_cast<std::ptrdiff_t>(sizes[0]);
    out.val.insert(out.val.end(), it, it + static_cast<std::ptrdiff_t>(sizes[1]));
    it += static_cast<std::ptrdiff_t>(sizes[1]);
    out.test.insert(out.test.end(), it, pool.end());
  };
  if (stratify_by_label) {
    for (int c = 0; c < kNumClasses; ++c) {
      std::vector<std::size_t> pool;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (label_index(labels[i]) == c) pool.push_back(i);
      }
      deal(pool);
    }
    std::shuffle(out.train.begin(), out.train.end(), rng);
    std::shuffle(out.val.begin(), out.val.end(), rng);
    std::shuffle(out.test.begin(), out.test.end(), rng);
  } else {
    std::vector<std::size_t> pool(labels.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    deal(pool);
  }
  return out;
}

Splits apply_split(const Dataset& d, const SplitIndices& idx) {
  Splits s{d.subset(idx.train), d.subset(idx.val), d.subset(idx.test)};
  s.train.provenance["split"] = "train";
  s.val.provenance["split"] = "val";
  s.test.provenance["split"] = "test";
  return s;
}

Splits split(const Dataset& d, const SplitRatios& ratios, std::uint64_t seed,
             bool stratify_by_label) {
  Splits s = apply_split(d, split_indices(d.labels(), ratios, seed, stratify_by_label));
  for (Dataset* part : {&s.train, &s.val, &s.test}) {
    part->provenance["split_seed"] = std::to_string(seed);
  }
  return s;
}

}  // namespace cdg
