#include "trendscope/agents.hpp"
#include "trendscope/errors.hpp"
#include "trendscope/simulator.hpp"

#include "test_support.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <deque>
#include <set>

using namespace trendscope;
using namespace trendscope::agents;
using nlohmann::json;

namespace {

struct ScriptedTransport : Transport {
  std::deque<HttpResponse> script;
  std::vector<HttpRequest> seen;
  HttpResponse post(const HttpRequest& request) override {
    seen.push_back(request);
    if (script.empty()) throw TransportError("script exhausted");
    HttpResponse r = script.front();
    script.pop_front();
    if (r.status == 0) throw TransportError("connection refused");
    return r;
  }
};

std::string chat_body(const std::string& text) {
  return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", text}}}}})}}.dump();
}

AgentEndpoint live_endpoint() {
  AgentEndpoint e;
  e.endpoint_id = "live-1";
  e.provider_kind = ProviderKind::Live;
  e.model_name = "some-model";
  e.base_url = "https://example.invalid/v1/";
  return e;
}

RetryPolicy no_sleep(std::vector<std::chrono::milliseconds>* delays = nullptr) {
  RetryPolicy p;
  p.sleep = [delays](std::chrono::milliseconds d) {
    if (delays) delays->push_back(d);
  };
  return p;
}

json profiles_json(std::size_t n, bool duplicate_spec) {
  json arr = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    arr.push_back({{"role", "analyst"},
                   {"specialization", duplicate_spec ? std::string("same thing") : "topic " + std::to_string(i)},
                   {"background", "school " + std::to_string(i % 7)}});
  }
  return {{"profiles", arr}};
}

}  // namespace

TEST_CASE("mock table answers registered prompts deterministically") {
  AgentClient client;
  MockTable table;
  const auto ep = testing::mock_endpoint("m1");
  table.add("m1", "hello", "canned reply");
  client.set_mock_table(table);
  CHECK(client.complete(ep, "hello") == "canned reply");
  CHECK(client.complete(ep, "hello") == "canned reply");
  CHECK(client.transport_calls() == 0);
}

TEST_CASE("unregistered mock prompt returns the fallback sentinel") {
  AgentClient client;
  const auto ep = testing::mock_endpoint("m1");
  const auto a = client.complete(ep, "unknown prompt");
  CHECK(a == client.complete(ep, "unknown prompt"));
  CHECK(is_mock_fallback(a));
  CHECK(a == mock_fallback_text("m1", "unknown prompt"));
  CHECK_FALSE(is_mock_fallback("an ordinary answer"));
}

TEST_CASE("mock keys depend on endpoint and prompt") {
  CHECK(mock_key("a", "p") != mock_key("b", "p"));
  CHECK(mock_key("a", "p") != mock_key("a", "q"));
  CHECK(mock_key("a", "p") == mock_key("a", "p"));
}

TEST_CASE("mock table disk round trip") {
  testing::TempDir dir("mock-table");
  MockTable t;
  t.add("e", "prompt one", "reply one");
  t.add("e", "prompt two", "reply two");
  t.save_dir(dir.path());
  const auto back = MockTable::load_dir(dir.path());
  CHECK(back.size() == 2);
  CHECK(back.lookup("e", "prompt two") == std::optional<std::string>("reply two"));
}

TEST_CASE("live endpoint retries transient faults and succeeds on attempt 3") {
  auto transport = std::make_shared<ScriptedTransport>();
  transport->script = {{0, ""}, {503, "busy"}, {200, chat_body("finally")}};
  AgentClient client(transport);
  std::vector<std::chrono::milliseconds> delays;
  client.set_retry_policy(no_sleep(&delays));
  CHECK(client.complete(live_endpoint(), "question") == "finally");
  CHECK(transport->seen.size() == 3);
  CHECK(client.transport_calls() == 3);
  REQUIRE(delays.size() == 2);
  CHECK(delays[1] == 2 * delays[0]);
  CHECK(transport->seen[0].url == "https://example.invalid/v1/chat/completions");
  const auto body = json::parse(transport->seen[0].body);
  CHECK(body["model"] == "some-model");
  CHECK(body["temperature"] == 0.6);
  CHECK(body["messages"][1]["content"] == "question");
}

TEST_CASE("live endpoint gives up after three transient faults") {
  auto transport = std::make_shared<ScriptedTransport>();
  transport->script = {{0, ""}, {500, ""}, {429, ""}, {200, chat_body("too late")}};
  AgentClient client(transport);
  client.set_retry_policy(no_sleep());
  CHECK_THROWS_AS(client.complete(live_endpoint(), "q"), TransportError);
  CHECK(transport->seen.size() == 3);
}

TEST_CASE("protocol errors are not retried") {
  auto transport = std::make_shared<ScriptedTransport>();
  transport->script = {{200, "{\"no\":\"choices\"}"}, {200, chat_body("x")}};
  AgentClient client(transport);
  client.set_retry_policy(no_sleep());
  CHECK_THROWS_AS(client.complete(live_endpoint(), "q"), ProtocolError);
  CHECK(transport->seen.size() == 1);
}

TEST_CASE("chat response parsing") {
  CHECK(parse_chat_response(chat_body("hi")) == "hi");
  CHECK_THROWS_AS(parse_chat_response("nope"), ProtocolError);
  CHECK_THROWS_AS(parse_chat_response("{\"choices\":[]}"), ProtocolError);
}

TEST_CASE("endpoint validation and credential variable") {
  auto e = live_endpoint();
  CHECK_NOTHROW(e.validate());
  CHECK(e.credential_env() == "TRENDSCOPE_API_KEY_LIVE_1");
  e.credential_ref = "MY_KEY";
  CHECK(e.credential_env() == "MY_KEY");
  e.base_url.clear();
  CHECK_THROWS(e.validate());
}

TEST_CASE("prompt library loads the shipped templates") {
  const auto lib = testing::repo_prompts();
  for (const char* name : {"deep_research_breakthrough", "deep_research_question", "consolidate_contexts",
                           "propose_breakthrough", "propose_question", "ensemble_vote", "chair_panel", "cast_ballot"}) {
    CHECK(lib.contains(name));
    CHECK(lib.get(name).version == 1);
    CHECK(lib.get(name).hash.size() == 64);
  }
  CHECK_THROWS(lib.get("missing_template"));
}

TEST_CASE("deep research passes canned mock documents through") {
  const auto lib = testing::repo_prompts();
  const auto us = testing::mock_endpoint("research-us", RegionTag::US);
  const auto cn = testing::mock_endpoint("research-cn", RegionTag::CN);
  const std::string prompt = lib.get("deep_research_breakthrough").render({{"mode", "breakthrough_2025"}});
  MockTable table;
  table.add("research-us", prompt, "US context document");
  table.add("research-cn", prompt, "CN context document");
  AgentClient client;
  client.set_mock_table(table);
  client.set_clock([] { return std::string("2026-01-01T00:00:00Z"); });
  const auto a = run_deep_research(client, lib, us, ResearchMode::Breakthrough2025);
  const auto b = run_deep_research(client, lib, cn, "breakthrough_2025");
  CHECK(a.text == "US context document");
  CHECK(b.text == "CN context document");
  CHECK(a.provenance.endpoint_id != b.provenance.endpoint_id);
  CHECK(a.doc_id != b.doc_id);
  CHECK(a.provenance.timestamp == "2026-01-01T00:00:00Z");
  CHECK(a.provenance.template_hash == lib.get("deep_research_breakthrough").hash);
  CHECK_THROWS_AS(run_deep_research(client, lib, us, "breakthrough_2031"), ContractViolation);

  const auto merged = consolidate_contexts(client, lib, a, b, testing::mock_endpoint("consolidator"));
  CHECK(merged.provenance.parents == std::vector<std::string>{a.doc_id, b.doc_id});
  CHECK(ContextDocument::from_json(merged.to_json()).doc_id == merged.doc_id);

  ContextDocument empty;
  CHECK_THROWS_AS(consolidate_contexts(client, lib, a, empty, testing::mock_endpoint("consolidator")), ContractViolation);
}

TEST_CASE("background cap and panel validation") {
  CHECK(background_cap(70) == 14);
  CHECK(background_cap(30) == 6);
  CHECK(background_cap(1) == 1);
  auto panel = testing::make_panel(0, 10);
  CHECK(validate_panel(panel, 10).empty());
  panel[3].specialization = panel[2].specialization;
  CHECK_FALSE(validate_panel(panel, 10).empty());
  CHECK_FALSE(validate_panel(testing::make_panel(0, 9), 10).empty());
}

TEST_CASE("chair with a valid roster yields 70 distinct specializations") {
  AgentClient client;
  client.set_mock_responder([](const AgentEndpoint&, std::string_view) { return profiles_json(70, false).dump(); });
  const auto panel = instantiate_panel(client, testing::repo_prompts(), testing::mock_endpoint("chair"),
                                       PanelSpec::defaults(Stage::Screening), Domain::Physics);
  REQUIRE(panel.size() == 70);
  std::set<std::string> specs, ids;
  for (const auto& p : panel) {
    specs.insert(p.specialization);
    ids.insert(p.voter_id);
    CHECK(p.kind == VoterKind::Ai);
  }
  CHECK(specs.size() == 70);
  CHECK(ids.size() == 70);
}

TEST_CASE("chair repeating a specialization fails after three attempts") {
  AgentClient client;
  int calls = 0;
  std::vector<std::string> prompts_seen;
  client.set_mock_responder([&](const AgentEndpoint&, std::string_view prompt) {
    ++calls;
    prompts_seen.emplace_back(prompt);
    return profiles_json(5, true).dump();
  });
  PanelSpec spec{Stage::Refinement, 0, 5, Level::Professor};
  try {
    instantiate_panel(client, testing::repo_prompts(), testing::mock_endpoint("chair"), spec, Domain::Biology);
    FAIL("expected PanelGenerationError");
  } catch (const PanelGenerationError& e) {
    CHECK_FALSE(e.violations().empty());
  }
  CHECK(calls == kMaxAttempts);
  CHECK(prompts_seen[1].find("ATTEMPT: 2") != std::string::npos);
}

TEST_CASE("single member panel") {
  AgentClient client;
  client.set_mock_responder([](const AgentEndpoint&, std::string_view) { return profiles_json(1, false).dump(); });
  PanelSpec spec{Stage::Screening, 0, 1, Level::Graduate};
  const auto panel = instantiate_panel(client, testing::repo_prompts(), testing::mock_endpoint("chair"), spec, Domain::Physics);
  CHECK(panel.size() == 1);
}

TEST_CASE("simulated chair satisfies the roster constraints") {
  AgentClient client;
  client.set_mock_responder(sim::make_responder(1));
  for (auto stage : {Stage::Screening, Stage::Refinement}) {
    const auto spec = PanelSpec::defaults(stage);
    const auto panel = instantiate_panel(client, testing::repo_prompts(), testing::mock_endpoint("chair"), spec,
                                         Domain::Economics);
    CHECK(panel.size() == spec.ai_count);
    CHECK(validate_panel(panel, spec.ai_count).empty());
  }
}

TEST_CASE("voter profile json round trip") {
  const auto p = testing::make_panel(0, 1).front();
  CHECK(VoterProfile::from_json(p.to_json()) == p);
}
