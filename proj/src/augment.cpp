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

#include "cdg/augment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <istream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "cdg/error.hpp"
#include "cdg/log.hpp"
#include "cdg/text.hpp"
#include "cdg/unicode.hpp"
#include "json.hpp"

namespace cdg {

namespace {

using json = nlohmann::json;

std::uint64_t mix(std::uint64_t seed, std::string_view s) {
  return (seed * 0x9E3779B97F4A7C15ull) ^ fnv1a(s);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

// "a, b" -> "b, a" when the text has exactly one comma and both sides are
// non-empty. Terminal punctuation stays at the end.
std::string swap_clauses(const std::string& text) {
  if (std::count(text.begin(), text.end(), ',') != 1) return text;
  const auto comma = text.find(',');
  std::string left = unicode::trim(text.substr(0, comma));
  std::string right = unicode::trim(text.substr(comma + 1));
  std::string terminal;
  while (!right.empty() && is_terminal(right.back())) {
    terminal.insert(terminal.begin(), right.back());
    right.pop_back();
  }
  right = unicode::trim(right);
  if (left.empty() || right.empty()) return text;
  return right + ", " + left + terminal;
}

std::string parse_completion(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedResponse, std::string("response is not JSON: ") + e.what());
  }
  const json* content = nullptr;
  if (j.is_object() && j.contains("choices") && j["choices"].is_array() && !j["choices"].empty() &&
      j["choices"][0].is_object() && j["choices"][0].contains("message") &&
      j["choices"][0]["message"].is_object() && j["choices"][0]["message"].contains("content")) {
    content = &j["choices"][0]["message"]["content"];
  }
  if (!content || !content->is_string()) {
    throw Error(ErrorCode::kMalformedResponse, "response has no choices[0].message.content");
  }
  std::string text = clean_completion(content->get<std::string>());
  if (text.empty()) throw Error(ErrorCode::kEmptyCompletion, "completion is empty");
  return text;
}

}  // namespace

std::string build_prompt(std::string_view language_name, std::string_view tweet) {
  std::string out = "You have been provided with ";
  out += language_name;
  out += " tweet. Paraphrase '";
  out += tweet;
  out +=
      "' in a way that preserves its sentiment and meaning but changes its wording. Return only "
      "the paraphrased tweet.";
  return out;
}

std::string language_display_name(std::string_view code) {
  static const std::map<std::string_view, std::string_view> names = {
      {"af", "Afrikaans"}, {"am", "Amharic"},   {"en", "English"},  {"ha", "Hausa"},
      {"ig", "Igbo"},      {"ln", "Lingala"},   {"lug", "Luganda"}, {"nso", "Northern Sotho"},
      {"nya", "Chichewa"}, {"run", "Kirundi"},  {"rw", "Kinyarwanda"}, {"sn", "Shona"},
      {"so", "Somali"},    {"st", "Sesotho"},   {"tn", "Setswana"}, {"xh", "isiXhosa"},
      {"yo", "Yoruba"},    {"zu", "isiZulu"}};
  const auto it = names.find(code);
  return std::string(it == names.end() ? code : it->second);
}

SynonymMap parse_synonyms(std::string_view json_text) {
  SynonymMap m;
  try {
    const json j = json::parse(json_text);
    for (const auto& [k, v] : j.at("synonyms").items()) {
      m.synonyms[unicode::normalize_token(k)] = v.get<std::string>();
    }
    if (j.contains("protected")) {
      for (const auto& p : j.at("protected")) {
        m.protected_tokens.push_back(unicode::normalize_token(p.get<std::string>()));
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedLine, std::string("malformed synonym map: ") + e.what());
  }
  return m;
}

SynonymMap load_synonyms(const std::filesystem::path& path) {
  return parse_synonyms(read_file(path));
}

std::string synonyms_json(const SynonymMap& m) {
  return json{{"synonyms", m.synonyms}, {"protected", m.protected_tokens}}.dump(2) + "\n";
}

std::string paraphrase_stub(std::string_view text, const SynonymMap& synonyms,
                            std::uint64_t seed) {
  std::mt19937_64 rng(mix(seed, text));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const TokenSeq t = preprocess(text);
  std::u32string cps = unicode::to_u32(text);
  // Right to left so earlier offsets stay valid; draws still go left to right.
  std::vector<std::pair<Span, std::string>> edits;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const std::string& tok = t.tokens[i];
    if (std::find(synonyms.protected_tokens.begin(), synonyms.protected_tokens.end(), tok) !=
        synonyms.protected_tokens.end()) {
      continue;
    }
    const auto it = synonyms.synonyms.find(tok);
    if (it == synonyms.synonyms.end()) continue;
    if (u(rng) < 0.5) edits.emplace_back(t.spans[i], it->second);
  }
  for (auto e = edits.rbegin(); e != edits.rend(); ++e) {
    cps.replace(e->first.start, e->first.end - e->first.start, unicode::to_u32(e->second));
  }
  return swap_clauses(unicode::to_utf8(cps));
}

std::string_view provider_name(Provider p) { return p == Provider::kRemote ? "remote" : "stub"; }

std::optional<Provider> try_parse_provider(std::string_view s) {
  if (s == "remote") return Provider::kRemote;
  if (s == "stub") return Provider::kStub;
  return std::nullopt;
}

std::string api_key_from_env() {
  const char* key = std::getenv(kApiKeyEnv);
  if (!key || !*key) {
    throw Error(ErrorCode::kAuthFailure,
                std::string("environment variable ") + kApiKeyEnv + " is not set");
  }
  return key;
}

std::string clean_completion(std::string_view text) {
  std::string s = unicode::trim(text);
  static const std::vector<std::pair<std::string, std::string>> quotes = {
      {"\"", "\""}, {"'", "'"}, {"“", "”"}, {"‘", "’"}};
  for (const auto& [open, close] : quotes) {
    if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
      s = unicode::trim(s.substr(open.size(), s.size() - open.size() - close.size()));
      break;
    }
  }
  return s;
}

RemoteClient::RemoteClient(EndpointConfig cfg, Transport transport, Sleeper sleeper)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  if (!transport_) throw Error(ErrorCode::kInvalidArgument, "remote client needs a transport");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (cfg_.concurrency == 0) cfg_.concurrency = 1;
}

ParaphraseRequest RemoteClient::request_for(std::string_view language_name,
                                            std::string_view tweet) const {
  ParaphraseRequest r;
  r.language_name = std::string(language_name);
  r.tweet = std::string(tweet);
  r.temperature = cfg_.temperature;
  r.model_name = cfg_.model;
  r.max_retries = cfg_.max_retries;
  return r;
}

std::string RemoteClient::complete(const ParaphraseRequest& req,
                                   std::vector<std::chrono::milliseconds>* delays) const {
  if (req.tweet.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot paraphrase an empty tweet");
  const json body = {
      {"model", req.model_name},
      {"messages", json::array({{{"role", "user"},
                                 {"content", build_prompt(req.language_name, req.tweet)}}})},
      {"temperature", req.temperature}};
  const std::string payload = body.dump();
  const HttpHeaders headers = {{"Authorization", "Bearer " + cfg_.api_key},
                               {"Content-Type", "application/json"}};
  std::mt19937_64 rng(mix(cfg_.jitter_seed, req.tweet));
  std::uniform_real_distribution<double> jitter(0.0, 0.1);

  for (std::size_t attempt = 0;; ++attempt) {
    std::string why;
    std::optional<HttpResponse> r;
    try {
      r = transport_(cfg_.endpoint, payload, headers);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTransportFailure) throw;
      why = e.what();
    }
    if (r) {
      if (r->status == 401 || r->status == 403) {
        throw Error(ErrorCode::kAuthFailure,
                    "endpoint rejected the credentials (HTTP " + std::to_string(r->status) + ")");
      }
      if (r->status >= 200 && r->status < 300) return parse_completion(r->body);
      if (r->status != 429 && r->status < 500) {
        throw Error(ErrorCode::kTransportFailure, "unexpected HTTP " + std::to_string(r->status));
      }
      why = "HTTP " + std::to_string(r->status);
    }
    if (attempt >= req.max_retries) {
      throw Error(ErrorCode::kRetriesExhausted,
                  "gave up after " + std::to_string(attempt + 1) + " attempts (last: " + why + ")");
    }
    const double base = static_cast<double>(cfg_.backoff_base.count()) * std::ldexp(1.0, static_cast<int>(attempt));
    const auto delay = std::chrono::milliseconds(static_cast<long long>(std::llround(base * (1.0 + jitter(rng)))));
    log::info("retry " + std::to_string(attempt + 1) + " after " + why + ", backoff " +
              std::to_string(delay.count()) + " ms");
    if (delays) delays->push_back(delay);
    sleeper_(delay);
  }
}

ParaphraseRecord paraphrase_remote(const RemoteClient& client, const ParaphraseRequest& req,
                                   std::string source_id, Label label) {
  ParaphraseRecord rec;
  rec.source_id = std::move(source_id);
  rec.original = req.tweet;
  rec.paraphrase = client.complete(req);
  rec.provider = Provider::kRemote;
  rec.label = label;
  return rec;
}

std::string ledger_jsonl(const std::vector<LedgerEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += json{{"source_id", e.source_id},
                {"original", e.original},
                {"paraphrase", e.paraphrase},
                {"provider", provider_name(e.provider)},
                {"status", e.status}}
               .dump();
    out += '\n';
  }
  return out;
}

std::vector<LedgerEntry> parse_ledger(std::istream& in) {
  std::vector<LedgerEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (unicode::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      LedgerEntry e;
      e.source_id = j.at("source_id").get<std::string>();
      e.original = j.at("original").get<std::string>();
      e.paraphrase = j.at("paraphrase").get<std::string>();
      const auto p = try_parse_provider(j.at("provider").get<std::string>());
      if (!p) throw Error(ErrorCode::kMalformedLine, "unknown provider", lineno, "provider");
      e.provider = *p;
      e.status = j.at("status").get<std::string>();
      out.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedLine, std::string("malformed ledger line: ") + e.what(), lineno);
    }
  }
  return out;
}

D2Result generate_d2(const Dataset& d1, const D2Options& opts) {
  if (d1.kind != DatasetKind::kTweet) {
    throw Error(ErrorCode::kKindMismatch, "paraphrasing needs a tweet dataset");
  }
  if (opts.provider == Provider::kRemote && !opts.client) {
    throw Error(ErrorCode::kInvalidArgument, "remote provider needs a configured client");
  }
  std::unordered_map<std::string, const LedgerEntry*> done;
  for (const auto& e : opts.resume) {
    if (e.status == "ok") done[e.source_id] = &e;
  }

  const std::size_t n = d1.tweets.size();
  std::vector<std::string> text(n);
  std::vector<std::string> status(n, "ok");
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < n; ++i) {
    const LabeledText& t = d1.tweets[i];
    if (const auto it = done.find(t.id); it != done.end()) {
      text[i] = it->second->paraphrase;
    } else if (opts.provider == Provider::kStub) {
      text[i] = paraphrase_stub(t.text, opts.synonyms, mix(opts.seed, t.id));
    } else {
      pending.push_back(i);
    }
  }

  if (!pending.empty()) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t k = next++; k < pending.size(); k = next++) {
        const std::size_t i = pending[k];
        const LabeledText& t = d1.tweets[i];
        try {
          text[i] = opts.client->complete(
              opts.client->request_for(language_display_name(t.lang), t.text));
        } catch (const Error& e) {
          status[i] = std::string(error_code_name(e.code()));
          log::warn("paraphrase of '" + t.id + "' failed: " + e.what());
        }
      }
    };
    const std::size_t workers = std::min(opts.client->config().concurrency, pending.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
  }

  D2Result out;
  std::vector<LabeledText> items;
  for (std::size_t i = 0; i < n; ++i) {
    const LabeledText& t = d1.tweets[i];
    out.ledger.push_back(LedgerEntry{t.id, t.text, status[i] == "ok" ? text[i] : std::string(),
                                     opts.provider, status[i]});
    if (status[i] != "ok") {
      out.excluded.push_back(t.id);
      continue;
    }
    items.push_back(LabeledText{t.id + ":p", text[i], t.label, t.lang, Domain::kParaphrased});
    out.records.push_back(ParaphraseRecord{t.id, t.text, text[i], opts.provider, t.label});
  }
  out.d2 = Dataset::of_tweets(std::move(items));
  out.d2.provenance = d1.provenance;
  out.d2.provenance["provider"] = std::string(provider_name(opts.provider));
  if (opts.provider == Provider::kStub) {
    out.d2.provenance["paraphrase_seed"] = std::to_string(opts.seed);
  } else {
    out.d2.provenance["model"] = opts.client->config().model;
  }
  return out;
}

Dataset identity_d2(const Dataset& d1) {
  if (d1.kind != DatasetKind::kTweet) {
    throw Error(ErrorCode::kKindMismatch, "paraphrasing needs a tweet dataset");
  }
  Dataset d2 = d1;
  for (auto& t : d2.tweets) {
    t.id += ":p";
    t.domain = Domain::kParaphrased;
  }
  d2.provenance["provider"] = "identity";
  return d2;
}

}  // namespace cdg
