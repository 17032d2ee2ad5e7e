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

#include "cdg/perturb.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "cdg/error.hpp"
#include "cdg/text.hpp"
#include "cdg/unicode.hpp"
#include "json.hpp"

namespace cdg {

namespace {

using json = nlohmann::json;

std::string join_tokens(const std::vector<std::string>& toks, std::size_t b, std::size_t e) {
  std::string out;
  for (std::size_t i = b; i < e; ++i) {
    if (i > b) out += ' ';
    out += toks[i];
  }
  return out;
}

std::string term_key(std::string_view term) {
  const TokenSeq t = preprocess(term);
  return join_tokens(t.tokens, 0, t.size());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Label parse_polarity(const json& j, std::string_view what) {
  const auto label = try_parse_label(j.get<std::string>());
  if (!label) {
    throw Error(ErrorCode::kUnknownLabel,
                std::string(what) + ": unknown polarity '" + j.get<std::string>() + "'",
                std::nullopt, "polarity");
  }
  return *label;
}

struct Match {
  std::size_t begin;
  std::size_t end;
  const LexiconEntry* entry;
};

// Non-overlapping, longest match first, left to right.
std::vector<Match> find_terms(const TokenSeq& t, const SentimentLexicon& lex) {
  std::vector<Match> out;
  const std::size_t max_len = lex.max_term_tokens();
  std::size_t i = 0;
  while (i < t.size()) {
    bool hit = false;
    for (std::size_t len = std::min(max_len, t.size() - i); len >= 1; --len) {
      if (const LexiconEntry* e = lex.find(join_tokens(t.tokens, i, i + len))) {
        out.push_back(Match{i, i + len, e});
        i += len;
        hit = true;
        break;
      }
    }
    if (!hit) ++i;
  }
  return out;
}

using TokenRange = std::pair<std::size_t, std::size_t>;

// Tokens overlapping the aspect span, else the leftmost token-identical run.
std::optional<TokenRange> locate(const TokenSeq& t, const AbsaInstance& inst) {
  std::optional<TokenRange> r;
  if (inst.span.start < inst.span.end) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.spans[i].start < inst.span.end && t.spans[i].end > inst.span.start) {
        if (!r) r = TokenRange{i, i + 1};
        r->second = i + 1;
      }
    }
  }
  if (r) return r;
  const TokenSeq a = preprocess(inst.aspect);
  if (a.empty() || a.size() > t.size()) return std::nullopt;
  for (std::size_t b = 0; b + a.size() <= t.size(); ++b) {
    if (std::equal(a.tokens.begin(), a.tokens.end(),
                   t.tokens.begin() + static_cast<std::ptrdiff_t>(b))) {
      return TokenRange{b, b + a.size()};
    }
  }
  return std::nullopt;
}

TokenRange window_of(const TokenRange& m, std::size_t w, std::size_t n) {
  return {m.first > w ? m.first - w : 0, std::min(n, m.second + w)};
}

struct Edit {
  Span span;
  std::string replacement;
};

// Applies non-overlapping edits and moves `aspect` accordingly. No edit may
// overlap the aspect span.
std::string apply_edits(std::string_view text, std::vector<Edit> edits, Span* aspect) {
  std::sort(edits.begin(), edits.end(),
            [](const Edit& a, const Edit& b) { return a.span.start > b.span.start; });
  std::u32string cps = unicode::to_u32(text);
  std::ptrdiff_t shift = 0;
  for (const Edit& e : edits) {
    const std::u32string rep = unicode::to_u32(e.replacement);
    cps.replace(e.span.start, e.span.end - e.span.start, rep);
    if (e.span.end <= aspect->start) {
      shift += static_cast<std::ptrdiff_t>(rep.size()) -
               static_cast<std::ptrdiff_t>(e.span.end - e.span.start);
    }
  }
  aspect->start = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(aspect->start) + shift);
  aspect->end = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(aspect->end) + shift);
  return unicode::to_utf8(cps);
}

AbsaInstance derive(const AbsaInstance& inst, Perturbation p) {
  AbsaInstance out = inst;
  out.id = inst.id + ":" + std::string(perturbation_name(p));
  out.sentence_id = out.id;
  out.perturbation = p;
  out.source_id = inst.id;
  return out;
}

PerturbResult skip(SkipReason r) { return PerturbResult{std::nullopt, r}; }

Edit edit_for(const TokenSeq& t, const Match& m) {
  return Edit{Span{t.spans[m.begin].start, t.spans[m.end - 1].end}, m.entry->antonym};
}

}  // namespace

void SentimentLexicon::add(std::string_view term, Label polarity, std::string_view antonym) {
  const std::string key = term_key(term);
  if (key.empty()) throw Error(ErrorCode::kInvalidLexicon, "lexicon term has no tokens");
  if (entries.count(key)) {
    throw Error(ErrorCode::kInvalidLexicon, "duplicate lexicon term '" + std::string(term) + "'");
  }
  entries.emplace(key, LexiconEntry{std::string(term), polarity, std::string(antonym)});
  max_tokens_ = std::max(max_tokens_, preprocess(term).size());
}

const LexiconEntry* SentimentLexicon::find(std::string_view key) const {
  const auto it = entries.find(std::string(key));
  return it == entries.end() ? nullptr : &it->second;
}

void SentimentLexicon::validate() const {
  for (const auto& [key, e] : entries) {
    if (e.polarity == Label::kNeutral) {
      throw Error(ErrorCode::kInvalidLexicon, "lexicon term '" + e.term + "' is neutral");
    }
    const std::string ant = term_key(e.antonym);
    if (ant.empty()) {
      throw Error(ErrorCode::kInvalidLexicon, "lexicon term '" + e.term + "' has no antonym");
    }
    if (const LexiconEntry* a = find(ant); a && a->polarity == e.polarity) {
      throw Error(ErrorCode::kInvalidLexicon, "antonym '" + e.antonym + "' of '" + e.term +
                                                  "' has the same polarity");
    }
  }
}

SentimentLexicon parse_lexicon(std::string_view json_text) {
  SentimentLexicon lex;
  try {
    const json j = json::parse(json_text);
    for (const auto& e : j.at("entries")) {
      lex.add(e.at("term").get<std::string>(), parse_polarity(e.at("polarity"), "lexicon"),
              e.at("antonym").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidLexicon, std::string("malformed lexicon: ") + e.what());
  }
  lex.validate();
  return lex;
}

SentimentLexicon load_lexicon(const std::filesystem::path& path) {
  return parse_lexicon(read_file(path));
}

std::string lexicon_json(const SentimentLexicon& lex) {
  json entries = json::array();
  for (const auto& [key, e] : lex.entries) {
    entries.push_back({{"term", e.term}, {"polarity", label_name(e.polarity)}, {"antonym", e.antonym}});
  }
  return json{{"entries", entries}}.dump(2) + "\n";
}

std::vector<Distractor> parse_distractors(std::string_view json_text) {
  std::vector<Distractor> out;
  try {
    const json j = json::parse(json_text);
    for (const auto& d : j.at("distractors")) {
      out.push_back(Distractor{d.at("aspect").get<std::string>(), d.at("clause").get<std::string>(),
                               parse_polarity(d.at("polarity"), "distractor")});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedLine, std::string("malformed distractor pool: ") + e.what());
  }
  return out;
}

std::vector<Distractor> load_distractors(const std::filesystem::path& path) {
  return parse_distractors(read_file(path));
}

std::string distractors_json(const std::vector<Distractor>& pool) {
  json arr = json::array();
  for (const auto& d : pool) {
    arr.push_back({{"aspect", d.aspect}, {"clause", d.clause}, {"polarity", label_name(d.polarity)}});
  }
  return json{{"distractors", arr}}.dump(2) + "\n";
}

std::string_view skip_reason_name(SkipReason r) {
  switch (r) {
    case SkipReason::kNeutralTarget: return "neutral_target";
    case SkipReason::kNoSentimentTerm: return "no_sentiment_term";
    case SkipReason::kNoNonTarget: return "no_non_target";
    case SkipReason::kAspectNotFound: return "aspect_not_found";
    case SkipReason::kNoDistractor: return "no_distractor";
  }
  return "unknown";
}

PerturbResult rev_tgt(const AbsaInstance& inst, const SentimentLexicon& lex, std::size_t window) {
  if (inst.polarity == Label::kNeutral) return skip(SkipReason::kNeutralTarget);
  const TokenSeq t = preprocess(inst.text);
  const auto mention = locate(t, inst);
  if (!mention) return skip(SkipReason::kAspectNotFound);
  const auto [lo, hi] = window_of(*mention, window, t.size());
  std::vector<Edit> edits;
  for (const Match& m : find_terms(t, lex)) {
    const bool inside = m.begin >= lo && m.end <= hi;
    const bool clear = m.end <= mention->first || m.begin >= mention->second;
    if (inside && clear) edits.push_back(edit_for(t, m));
  }
  if (edits.empty()) return skip(SkipReason::kNoSentimentTerm);
  AbsaInstance out = derive(inst, Perturbation::kRevTgt);
  out.text = apply_edits(inst.text, std::move(edits), &out.span);
  out.polarity = flip_polarity(inst.polarity);
  return PerturbResult{std::move(out), std::nullopt};
}

PerturbResult rev_non(const AbsaInstance& inst, const std::vector<const AbsaInstance*>& siblings,
                      const SentimentLexicon& lex, std::size_t window) {
  std::vector<const AbsaInstance*> others;
  for (const AbsaInstance* s : siblings) {
    if (s->id != inst.id && s->text == inst.text) others.push_back(s);
  }
  if (others.empty()) return skip(SkipReason::kNoNonTarget);
  const TokenSeq t = preprocess(inst.text);
  const auto target = locate(t, inst);
  if (!target) return skip(SkipReason::kAspectNotFound);

  // 0 = not editable, 1 = editable.
  std::vector<char> editable(t.size(), 0);
  std::vector<char> fixed(t.size(), 0);
  const auto [tlo, thi] = window_of(*target, window, t.size());
  for (std::size_t i = tlo; i < thi; ++i) fixed[i] = 1;
  for (const AbsaInstance* s : others) {
    const auto m = locate(t, *s);
    if (!m) continue;
    const auto [lo, hi] = window_of(*m, window, t.size());
    for (std::size_t i = lo; i < hi; ++i) editable[i] = 1;
    for (std::size_t i = m->first; i < m->second; ++i) fixed[i] = 1;
  }
  std::vector<Edit> edits;
  for (const Match& m : find_terms(t, lex)) {
    bool ok = true;
    for (std::size_t i = m.begin; i < m.end; ++i) ok = ok && editable[i] && !fixed[i];
    if (ok) edits.push_back(edit_for(t, m));
  }
  if (edits.empty()) return skip(SkipReason::kNoSentimentTerm);
  AbsaInstance out = derive(inst, Perturbation::kRevNon);
  out.text = apply_edits(inst.text, std::move(edits), &out.span);
  return PerturbResult{std::move(out), std::nullopt};
}

PerturbResult add_diff(const AbsaInstance& inst, const std::vector<Distractor>& pool,
                       std::uint64_t seed) {
  if (pool.empty()) throw Error(ErrorCode::kInvalidArgument, "distractor pool is empty");
  const std::string target = term_key(inst.aspect);
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const Distractor& d = pool[i];
    const bool opposite = inst.polarity == Label::kNeutral ? d.polarity != Label::kNeutral
                                                           : d.polarity == flip_polarity(inst.polarity);
    if (opposite && term_key(d.aspect) != target) eligible.push_back(i);
  }
  if (eligible.empty()) return skip(SkipReason::kNoDistractor);
  std::mt19937_64 rng(seed ^ fnv1a(inst.id));
  std::shuffle(eligible.begin(), eligible.end(), rng);
  eligible.resize(std::min(eligible.size(), kMaxDistractors));

  std::string base = inst.text;
  while (!base.empty() && (base.back() == ' ' || base.back() == '\t' || base.back() == '\n')) {
    base.pop_back();
  }
  std::string terminal;
  if (!base.empty() && (base.back() == '.' || base.back() == '!' || base.back() == '?')) {
    terminal = base.back();
    base.pop_back();
  }
  std::string added;
  for (std::size_t k = 0; k < eligible.size(); ++k) {
    if (k > 0) added += ", ";
    added += pool[eligible[k]].clause;
  }
  AbsaInstance out = derive(inst, Perturbation::kAddDiff);
  out.text = base + ", but " + added + terminal;
  return PerturbResult{std::move(out), std::nullopt};
}

Dataset PerturbationSuite::originals() const {
  std::vector<AbsaInstance> items;
  for (const auto& g : groups) items.push_back(g.original);
  return Dataset::of_absa(std::move(items));
}

Dataset PerturbationSuite::variants(Perturbation p) const {
  std::vector<AbsaInstance> items;
  for (const auto& g : groups) {
    for (const auto& v : g.variants) {
      if (v.perturbation == p) items.push_back(v);
    }
  }
  return Dataset::of_absa(std::move(items));
}

Dataset PerturbationSuite::all_instances() const {
  std::vector<AbsaInstance> items;
  for (const auto& g : groups) items.push_back(g.original);
  for (const auto& g : groups) items.insert(items.end(), g.variants.begin(), g.variants.end());
  return Dataset::of_absa(std::move(items));
}

PerturbationSuite build_suite(const Dataset& d, const SentimentLexicon& lex,
                              const std::vector<Distractor>& pool, const SuiteOptions& opts) {
  if (d.kind != DatasetKind::kAbsa) {
    throw Error(ErrorCode::kKindMismatch, "perturbation needs an absa dataset");
  }
  PerturbationSuite suite;
  for (const AbsaInstance& inst : d.absa) {
    const bool original =
        opts.is_original ? opts.is_original(inst) : inst.perturbation == Perturbation::kNone;
    if (!original) continue;
    PerturbationGroup g{inst, {}};
    auto take = [&](PerturbResult r, Perturbation p) {
      if (r.ok()) {
        g.variants.push_back(std::move(*r.instance));
      } else {
        suite.skipped.push_back(SkipRecord{inst.id, p, *r.skipped});
      }
    };
    take(rev_tgt(inst, lex, opts.window), Perturbation::kRevTgt);
    take(rev_non(inst, d.by_sentence(inst.sentence_id), lex, opts.window), Perturbation::kRevNon);
    if (pool.empty()) {
      suite.skipped.push_back(SkipRecord{inst.id, Perturbation::kAddDiff, SkipReason::kNoDistractor});
    } else {
      take(add_diff(inst, pool, opts.seed), Perturbation::kAddDiff);
    }
    if (!g.variants.empty()) suite.groups.push_back(std::move(g));
  }
  return suite;
}

double ars(const std::vector<PerturbationGroup>& groups,
           const std::unordered_map<std::string, Label>& predictions) {
  auto correct = [&](const AbsaInstance& inst) {
    const auto it = predictions.find(inst.id);
    if (it == predictions.end()) {
      throw Error(ErrorCode::kMissingPrediction, "no prediction for instance '" + inst.id + "'",
                  std::nullopt, "id");
    }
    return it->second == inst.polarity;
  };
  if (groups.empty()) return 0.0;
  std::size_t robust = 0;
  for (const auto& g : groups) {
    bool ok = correct(g.original);
    for (const auto& v : g.variants) ok = correct(v) && ok;
    robust += ok;
  }
  return static_cast<double>(robust) / static_cast<double>(groups.size());
}

}  // namespace cdg
