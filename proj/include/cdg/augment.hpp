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

// Paraphrase generation for counterfactual data augmentation: the prompt,
// a chat-completion client over an injectable transport, an offline stub
// paraphraser and the D2 builder.

#ifndef CDG_AUGMENT_HPP_
#define CDG_AUGMENT_HPP_

#include <chrono>
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

std::string build_prompt(std::string_view language_name, std::string_view tweet);

// Display name for a language code ("yo" -> "Yoruba"); the code itself when
// unknown.
std::string language_display_name(std::string_view code);

struct SynonymMap {
  std::map<std::string, std::string> synonyms;  // normalized word -> same-polarity synonym
  std::vector<std::string> protected_tokens;
};

// {"synonyms": {"good": "fine", ...}, "protected": ["user", ...]}
SynonymMap parse_synonyms(std::string_view json_text);
SynonymMap load_synonyms(const std::filesystem::path& path);
std::string synonyms_json(const SynonymMap& m);

// Label-preserving rewrite: each unprotected token with a synonym is swapped
// with probability 0.5, then a single top-level "a, b" becomes "b, a".
std::string paraphrase_stub(std::string_view text, const SynonymMap& synonyms, std::uint64_t seed);

enum class Provider { kRemote, kStub };
std::string_view provider_name(Provider p);
std::optional<Provider> try_parse_provider(std::string_view s);

struct ParaphraseRequest {
  std::string language_name;
  std::string tweet;
  double temperature = 0.7;
  std::string model_name;
  std::size_t max_retries = 3;
};

struct ParaphraseRecord {
  std::string source_id;
  std::string original;
  std::string paraphrase;
  Provider provider = Provider::kStub;
  Label label = Label::kNeutral;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

using HttpHeaders = std::map<std::string, std::string>;
// POSTs `body` to `url`. Throws Error(kTransportFailure) when no response
// arrives.
using Transport =
    std::function<HttpResponse(const std::string& url, const std::string& body, const HttpHeaders&)>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;

Transport http_transport(std::chrono::seconds timeout = std::chrono::seconds(60));

struct EndpointConfig {
  std::string endpoint;
  std::string model = "gpt-4o-mini";
  double temperature = 0.7;
  std::size_t concurrency = 4;
  std::size_t max_retries = 3;
  std::chrono::milliseconds backoff_base{1000};
  std::uint64_t jitter_seed = 0;
  std::string api_key;
};

inline constexpr const char* kApiKeyEnv = "CDG_API_KEY";
// Throws kAuthFailure when the variable is unset or empty.
std::string api_key_from_env();

// Completion text with surrounding whitespace and enclosing quotes removed.
std::string clean_completion(std::string_view text);

class RemoteClient {
 public:
  RemoteClient(EndpointConfig cfg, Transport transport, Sleeper sleeper = {});

  const EndpointConfig& config() const { return cfg_; }
  ParaphraseRequest request_for(std::string_view language_name, std::string_view tweet) const;

  // Retries 429 and 5xx with delay base * 2^k plus up to 10% jitter. 401/403
  // fail at once. `delays`, when given, receives each backoff.
  std::string complete(const ParaphraseRequest& req,
                       std::vector<std::chrono::milliseconds>* delays = nullptr) const;

 private:
  EndpointConfig cfg_;
  Transport transport_;
  Sleeper sleeper_;
};

ParaphraseRecord paraphrase_remote(const RemoteClient& client, const ParaphraseRequest& req,
                                   std::string source_id, Label label);

struct LedgerEntry {
  std::string source_id;
  std::string original;
  std::string paraphrase;
  Provider provider = Provider::kStub;
  std::string status;  // "ok" or the error code name

  bool operator==(const LedgerEntry&) const = default;
};

std::string ledger_jsonl(const std::vector<LedgerEntry>& entries);
std::vector<LedgerEntry> parse_ledger(std::istream& in);

struct D2Options {
  Provider provider = Provider::kStub;
  std::uint64_t seed = 0;
  SynonymMap synonyms;
  const RemoteClient* client = nullptr;  // required for kRemote
  // Successful ledger rows from an earlier run; their items are not re-sent.
  std::vector<LedgerEntry> resume;
};

struct D2Result {
  Dataset d2;
  std::vector<ParaphraseRecord> records;
  std::vector<LedgerEntry> ledger;  // one row per d1 item, input order
  std::vector<std::string> excluded;
};

D2Result generate_d2(const Dataset& d1, const D2Options& opts);

// Identity provider: D2 equals D1 apart from ids and domain.
Dataset identity_d2(const Dataset& d1);

}  // namespace cdg

#endif  // CDG_AUGMENT_HPP_
