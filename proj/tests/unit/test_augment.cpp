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

#include <gtest/gtest.h>

#include <mutex>
#include <set>

#include "cdg/augment.hpp"
#include "json.hpp"
#include "test_util.hpp"

namespace cdg {
namespace {

using testing::data_dir;
using testing::error_of;

TEST(Prompt, Golden) {
  EXPECT_EQ(build_prompt("Yoruba", "Mo nif\xe1\xba\xb9 eyi"), testing::read_text(data_dir() / "prompt_golden.txt"));
}

TEST(Prompt, VerbatimSubstitution) {
  EXPECT_EQ(build_prompt("English", "don't 'quote' me"),
            "You have been provided with English tweet. Paraphrase 'don't 'quote' me' in a way that "
            "preserves its sentiment and meaning but changes its wording. Return only the "
            "paraphrased tweet.");
  EXPECT_EQ(build_prompt("", "x").substr(0, 30), "You have been provided with  t");
  EXPECT_EQ(language_display_name("yo"), "Yoruba");
  EXPECT_EQ(language_display_name("en"), "English");
}

SynonymMap synonyms() {
  SynonymMap m;
  m.synonyms = {{"happy", "glad"}, {"great", "excellent"}, {"day", "moment"}};
  m.protected_tokens = {"day"};
  return m;
}

TEST(Stub, NoRuleFires) {
  EXPECT_EQ(paraphrase_stub("nothing to see here", synonyms(), 0), "nothing to see here");
  EXPECT_EQ(paraphrase_stub("", synonyms(), 0), "");
}

TEST(Stub, ClauseSwap) {
  EXPECT_EQ(paraphrase_stub("a, b", {}, 0), "b, a");
  EXPECT_EQ(paraphrase_stub("first part, second part", {}, 5), "second part, first part");
}

TEST(Stub, SeededSynonymsAndProtection) {
  const std::string text = "happy happy great day";
  std::set<std::string> outputs;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::string a = paraphrase_stub(text, synonyms(), seed);
    EXPECT_EQ(a, paraphrase_stub(text, synonyms(), seed));
    EXPECT_NE(a.find("day"), std::string::npos) << "protected token replaced";
    EXPECT_EQ(a.find("moment"), std::string::npos);
    outputs.insert(a);
  }
  EXPECT_GT(outputs.size(), 1u);
  // Each candidate token is independently kept or swapped.
  for (const auto& o : outputs) {
    EXPECT_TRUE(o.ends_with(" day")) << o;
  }
}

TEST(SynonymFile, RoundTrip) {
  const SynonymMap m = synonyms();
  const SynonymMap back = parse_synonyms(synonyms_json(m));
  EXPECT_EQ(back.synonyms, m.synonyms);
  EXPECT_EQ(back.protected_tokens, m.protected_tokens);
  EXPECT_EQ(error_of([] { parse_synonyms("{oops"); }), ErrorCode::kMalformedLine);
}

std::string completion(const std::string& text) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}.dump();
}

struct Script {
  std::mutex mu;
  std::vector<HttpResponse> responses;
  std::vector<std::string> bodies;
  std::size_t calls = 0;

  Transport transport() {
    return [this](const std::string&, const std::string& body, const HttpHeaders& h) {
      std::lock_guard<std::mutex> lock(mu);
      EXPECT_EQ(h.at("Authorization"), "Bearer k");
      bodies.push_back(body);
      const HttpResponse r = responses[std::min(calls, responses.size() - 1)];
      ++calls;
      return r;
    };
  }
};

EndpointConfig endpoint() {
  EndpointConfig c;
  c.endpoint = "http://fake/v1/chat/completions";
  c.api_key = "k";
  c.model = "m1";
  c.backoff_base = std::chrono::milliseconds(1000);
  return c;
}

TEST(Remote, FixedText) {
  Script s;
  s.responses = {{200, completion("  \"ABC\" ")}};
  const RemoteClient client(endpoint(), s.transport(), [](auto) {});
  const ParaphraseRecord rec =
      paraphrase_remote(client, client.request_for("Hausa", "ina son shi"), "t1", Label::kPositive);
  EXPECT_EQ(rec.paraphrase, "ABC");
  EXPECT_EQ(rec.label, Label::kPositive);
  EXPECT_EQ(rec.provider, Provider::kRemote);
  const auto body = nlohmann::json::parse(s.bodies.at(0));
  EXPECT_EQ(body["model"], "m1");
  EXPECT_EQ(body["temperature"], 0.7);
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], build_prompt("Hausa", "ina son shi"));
}

TEST(Remote, RetriesWithBackoff) {
  Script s;
  s.responses = {{429, ""}, {429, ""}, {200, completion("ok")}};
  std::vector<std::chrono::milliseconds> slept;
  const RemoteClient client(endpoint(), s.transport(), [&](auto d) { slept.push_back(d); });
  std::vector<std::chrono::milliseconds> delays;
  EXPECT_EQ(client.complete(client.request_for("English", "hi"), &delays), "ok");
  EXPECT_EQ(s.calls, 3u);
  ASSERT_EQ(delays.size(), 2u);
  EXPECT_EQ(delays, slept);
  EXPECT_GE(delays[0].count(), 1000);
  EXPECT_LE(delays[0].count(), 1100);
  EXPECT_GE(delays[1].count(), 2000);
  EXPECT_LE(delays[1].count(), 2200);
}

TEST(Remote, ErrorClasses) {
  auto code_for = [](std::vector<HttpResponse> rs, std::size_t* calls = nullptr) {
    Script s;
    s.responses = std::move(rs);
    const RemoteClient client(endpoint(), s.transport(), [](auto) {});
    auto code = error_of([&] { client.complete(client.request_for("English", "hi")); });
    if (calls) *calls = s.calls;
    return code;
  };
  std::size_t calls = 0;
  EXPECT_EQ(code_for({{401, ""}}, &calls), ErrorCode::kAuthFailure);
  EXPECT_EQ(calls, 1u);
  EXPECT_EQ(code_for({{403, ""}}), ErrorCode::kAuthFailure);
  EXPECT_EQ(code_for({{503, ""}}, &calls), ErrorCode::kRetriesExhausted);
  EXPECT_EQ(calls, 4u);
  EXPECT_EQ(code_for({{200, completion("  ")}}), ErrorCode::kEmptyCompletion);
  EXPECT_EQ(code_for({{200, "not json"}}), ErrorCode::kMalformedResponse);
  EXPECT_EQ(code_for({{200, R"({"choices":[]})"}}), ErrorCode::kMalformedResponse);
}

TEST(CleanCompletion, Quotes) {
  EXPECT_EQ(clean_completion("\"hello\""), "hello");
  EXPECT_EQ(clean_completion("\xe2\x80\x9chello\xe2\x80\x9d\n"), "hello");
  EXPECT_EQ(clean_completion("'a' and 'b"), "'a' and 'b");
  EXPECT_EQ(clean_completion("it's"), "it's");
}

Dataset three_tweets() {
  return Dataset::of_tweets({{"a", "happy day, great times", Label::kPositive, "en", Domain::kOriginal},
                             {"b", "FAIL ME", Label::kNegative, "en", Domain::kOriginal},
                             {"c", "it is fine", Label::kNeutral, "yo", Domain::kOriginal}});
}

TEST(GenerateD2, Stub) {
  D2Options opts;
  opts.synonyms = synonyms();
  opts.seed = 4;
  const D2Result r = generate_d2(three_tweets(), opts);
  ASSERT_EQ(r.d2.size(), 3u);
  EXPECT_EQ(r.d2.labels(), three_tweets().labels());
  EXPECT_EQ(r.d2.tweets[0].id, "a:p");
  EXPECT_EQ(r.d2.tweets[2].lang, "yo");
  for (const auto& t : r.d2.tweets) EXPECT_EQ(t.domain, Domain::kParaphrased);
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    EXPECT_EQ(r.records[i].label, three_tweets().tweets[i].label);
  }
  EXPECT_TRUE(r.excluded.empty());
  EXPECT_EQ(r.d2.provenance.at("provider"), "stub");
  EXPECT_EQ(generate_d2(three_tweets(), opts).d2.tweets, r.d2.tweets);
}

TEST(GenerateD2, RemotePartialFailure) {
  const Transport t = [](const std::string&, const std::string& body, const HttpHeaders&) {
    if (body.find("FAIL ME") != std::string::npos) return HttpResponse{500, ""};
    return HttpResponse{200, completion(body.find("Yoruba") != std::string::npos ? "yo text" : "en text")};
  };
  const RemoteClient client(endpoint(), t, [](auto) {});
  D2Options opts;
  opts.provider = Provider::kRemote;
  opts.client = &client;
  const D2Result r = generate_d2(three_tweets(), opts);
  ASSERT_EQ(r.d2.size(), 2u);
  EXPECT_EQ(r.excluded, (std::vector<std::string>{"b"}));
  EXPECT_EQ(r.d2.tweets[0].text, "en text");
  EXPECT_EQ(r.d2.tweets[1].text, "yo text");
  EXPECT_EQ(r.d2.tweets[1].label, Label::kNeutral);
  ASSERT_EQ(r.ledger.size(), 3u);
  EXPECT_EQ(r.ledger[1].status, "RetriesExhausted");
  EXPECT_EQ(r.ledger[0].status, "ok");

  // Resuming sends only the failed item.
  std::size_t calls = 0;
  const Transport counting = [&](const std::string&, const std::string&, const HttpHeaders&) {
    ++calls;
    return HttpResponse{200, completion("fixed")};
  };
  const RemoteClient again(endpoint(), counting, [](auto) {});
  opts.client = &again;
  opts.resume = r.ledger;
  const D2Result r2 = generate_d2(three_tweets(), opts);
  EXPECT_EQ(calls, 1u);
  EXPECT_EQ(r2.d2.size(), 3u);
  EXPECT_EQ(r2.d2.tweets[1].text, "fixed");
  EXPECT_EQ(r2.d2.tweets[0].text, "en text");
}

TEST(Ledger, RoundTrip) {
  const std::vector<LedgerEntry> rows = {{"a", "x", "y", Provider::kStub, "ok"},
                                         {"b", "q\"z", "", Provider::kRemote, "AuthFailure"}};
  std::istringstream in(ledger_jsonl(rows));
  EXPECT_EQ(parse_ledger(in), rows);
}

TEST(IdentityD2, KeepsText) {
  const Dataset d2 = identity_d2(three_tweets());
  EXPECT_EQ(d2.tweets[1].text, "FAIL ME");
  EXPECT_EQ(d2.tweets[1].id, "b:p");
  EXPECT_EQ(error_of([] { identity_d2(Dataset::of_absa({})); }), ErrorCode::kKindMismatch);
}

}  // namespace
}  // namespace cdg
