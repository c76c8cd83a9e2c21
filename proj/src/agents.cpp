#include "trendscope/agents.hpp"

#include "trendscope/errors.hpp"
#include "trendscope/hash.hpp"
#include "trendscope/text.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <set>
#include <thread>

namespace trendscope::agents {

using nlohmann::json;

std::string_view to_string(ProviderKind k) { return k == ProviderKind::Live ? "live" : "mock"; }

std::string_view to_string(RegionTag r) {
  switch (r) {
    case RegionTag::US: return "US";
    case RegionTag::CN: return "CN";
    case RegionTag::Other: return "other";
  }
  return "other";
}

std::optional<ProviderKind> parse_provider_kind(std::string_view s) {
  const auto k = ascii_lower(s);
  if (k == "live") return ProviderKind::Live;
  if (k == "mock") return ProviderKind::Mock;
  return std::nullopt;
}

std::optional<RegionTag> parse_region(std::string_view s) {
  const auto k = ascii_lower(s);
  if (k == "us") return RegionTag::US;
  if (k == "cn") return RegionTag::CN;
  if (k == "other") return RegionTag::Other;
  return std::nullopt;
}

void AgentEndpoint::validate() const {
  if (endpoint_id.empty()) throw ConfigError("endpoint: empty endpoint_id");
  if (!(temperature >= 0.0)) throw ConfigError("endpoint " + endpoint_id + ": temperature must be >= 0");
  if (provider_kind == ProviderKind::Live && base_url.empty()) {
    throw ConfigError("endpoint " + endpoint_id + ": live endpoints need base_url");
  }
}

std::string AgentEndpoint::credential_env() const {
  if (!credential_ref.empty()) return credential_ref;
  std::string id = ascii_upper(endpoint_id);
  for (char& c : id) {
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  }
  return "TRENDSCOPE_API_KEY_" + id;
}

// ---- mock ----

std::string mock_key(std::string_view endpoint_id, std::string_view prompt) {
  std::string material(endpoint_id);
  material.push_back('\n');
  material.append(prompt);
  return sha256_hex(material);
}

MockTable MockTable::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("mock table directory missing: " + dir.string());
  MockTable t;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    t.add_by_key(entry.path().stem().string(), read_file(entry.path().string()));
  }
  return t;
}

void MockTable::save_dir(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [key, text] : responses_) write_file((dir / (key + ".txt")).string(), text);
}

void MockTable::add(std::string_view endpoint_id, std::string_view prompt, std::string response) {
  add_by_key(mock_key(endpoint_id, prompt), std::move(response));
}

void MockTable::add_by_key(std::string key, std::string response) {
  responses_[std::move(key)] = std::move(response);
}

std::optional<std::string> MockTable::lookup(std::string_view endpoint_id, std::string_view prompt) const {
  auto it = responses_.find(mock_key(endpoint_id, prompt));
  if (it == responses_.end()) return std::nullopt;
  return it->second;
}

std::string mock_fallback_text(std::string_view endpoint_id, std::string_view prompt) {
  return "[mock:unregistered " + std::string(endpoint_id) + " " + mock_key(endpoint_id, prompt).substr(0, 16) + "]";
}

bool is_mock_fallback(std::string_view text) { return text.rfind("[mock:unregistered ", 0) == 0; }

// ---- client ----

AgentClient::AgentClient(std::shared_ptr<Transport> transport) : transport_(std::move(transport)) {}

std::string AgentClient::now() const {
  if (clock_) return clock_();
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string AgentClient::complete(const AgentEndpoint& endpoint, std::string_view prompt,
                                  const DecodeHints& hints) const {
  ++completions_;
  if (endpoint.provider_kind == ProviderKind::Mock) {
    if (auto hit = mock_table_.lookup(endpoint.endpoint_id, prompt)) return *hit;
    if (responder_) {
      if (auto r = responder_(endpoint, prompt)) return *r;
    }
    return mock_fallback_text(endpoint.endpoint_id, prompt);
  }
  return complete_live(endpoint, prompt, hints);
}

json build_chat_request(const AgentEndpoint& endpoint, std::string_view prompt, const DecodeHints& hints) {
  json body = {{"model", endpoint.model_name},
               {"temperature", hints.temperature.value_or(endpoint.temperature)},
               {"messages",
                json::array({{{"role", "system"}, {"content", hints.system_prompt}},
                             {{"role", "user"}, {"content", std::string(prompt)}}})}};
  if (hints.max_tokens) body["max_tokens"] = *hints.max_tokens;
  return body;
}

std::string parse_chat_response(std::string_view body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ProtocolError("response is not a JSON object");
  auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) {
    throw ProtocolError("response has no choices");
  }
  const auto& first = (*choices)[0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string()) {
    throw ProtocolError("response choice has no text content");
  }
  return first["message"]["content"].get<std::string>();
}

std::string AgentClient::complete_live(const AgentEndpoint& endpoint, std::string_view prompt,
                                       const DecodeHints& hints) const {
  if (!transport_) throw TransportError("no transport configured for live endpoint " + endpoint.endpoint_id);
  HttpRequest req;
  std::string url = endpoint.base_url;
  if (!url.empty() && url.back() == '/') url.pop_back();
  req.url = url + "/chat/completions";
  req.headers.emplace_back("Content-Type", "application/json");
  if (const char* key = std::getenv(endpoint.credential_env().c_str())) {
    req.headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  req.body = build_chat_request(endpoint, prompt, hints).dump();

  const int attempts = std::max(1, retry_.max_attempts);
  for (int attempt = 1;; ++attempt) {
    try {
      ++transport_calls_;
      HttpResponse resp = transport_->post(req);
      if (resp.status == 429 || resp.status >= 500) {
        throw TransportError("HTTP " + std::to_string(resp.status) + " from " + endpoint.endpoint_id);
      }
      if (resp.status != 200) {
        throw ProtocolError("HTTP " + std::to_string(resp.status) + " from " + endpoint.endpoint_id);
      }
      return parse_chat_response(resp.body);
    } catch (const TransportError&) {
      if (attempt >= attempts) throw;
      const auto delay = retry_.base_delay * (1 << (attempt - 1));
      if (retry_.sleep) retry_.sleep(delay);
      else std::this_thread::sleep_for(delay);
    }
  }
}

// ---- prompts ----

std::string PromptTemplate::render(const std::vector<std::pair<std::string, std::string>>& vars) const {
  return render_template(text, vars);
}

PromptLibrary PromptLibrary::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("prompt directory missing: " + dir.string());
  PromptLibrary lib;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    // <name>.v<N>.txt
    const std::string stem = entry.path().stem().string();
    const auto dot = stem.rfind(".v");
    if (dot == std::string::npos) continue;
    PromptTemplate t;
    t.name = stem.substr(0, dot);
    t.version = std::atoi(stem.c_str() + dot + 2);
    t.text = read_file(entry.path().string());
    t.hash = sha256_hex(t.text);
    lib.add(std::move(t));
  }
  return lib;
}

void PromptLibrary::add(PromptTemplate tmpl) {
  if (tmpl.hash.empty()) tmpl.hash = sha256_hex(tmpl.text);
  auto it = templates_.find(tmpl.name);
  if (it == templates_.end() || it->second.version < tmpl.version) {
    templates_[tmpl.name] = std::move(tmpl);
  }
}

const PromptTemplate& PromptLibrary::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw ConfigError("prompt template not found: " + std::string(name));
  return it->second;
}

bool PromptLibrary::contains(std::string_view name) const { return templates_.find(name) != templates_.end(); }

// ---- deep research ----

std::string_view to_string(ResearchMode m) {
  return m == ResearchMode::Breakthrough2025 ? "breakthrough_2025" : "question_2026";
}

ResearchMode parse_research_mode(std::string_view s) {
  if (s == "breakthrough_2025") return ResearchMode::Breakthrough2025;
  if (s == "question_2026") return ResearchMode::Question2026;
  throw ContractViolation("unknown deep research mode '" + std::string(s) + "'");
}

json ContextDocument::to_json() const {
  return {{"doc_id", doc_id},
          {"text", text},
          {"provenance",
           {{"endpoint_id", provenance.endpoint_id},
            {"model_name", provenance.model_name},
            {"timestamp", provenance.timestamp},
            {"mode", provenance.mode},
            {"template_name", provenance.template_name},
            {"template_hash", provenance.template_hash},
            {"parents", provenance.parents}}}};
}

ContextDocument ContextDocument::from_json(const json& j) {
  ContextDocument d;
  d.doc_id = j.at("doc_id").get<std::string>();
  d.text = j.at("text").get<std::string>();
  const auto& p = j.at("provenance");
  d.provenance.endpoint_id = p.at("endpoint_id").get<std::string>();
  d.provenance.model_name = p.value("model_name", "");
  d.provenance.timestamp = p.value("timestamp", "");
  d.provenance.mode = p.value("mode", "");
  d.provenance.template_name = p.value("template_name", "");
  d.provenance.template_hash = p.value("template_hash", "");
  d.provenance.parents = p.value("parents", std::vector<std::string>{});
  return d;
}

namespace {

std::string doc_id_for(const Provenance& p, std::string_view text) {
  std::string material = p.endpoint_id + "\n" + p.mode + "\n";
  for (const auto& parent : p.parents) material += parent + "\n";
  material.append(text);
  return sha256_hex(material).substr(0, 16);
}

}  // namespace

ContextDocument run_deep_research(const AgentClient& client, const PromptLibrary& prompts,
                                  const AgentEndpoint& endpoint, ResearchMode mode) {
  const std::string name = mode == ResearchMode::Breakthrough2025 ? "deep_research_breakthrough"
                                                                   : "deep_research_question";
  const auto& tmpl = prompts.get(name);
  const std::string prompt = tmpl.render({{"mode", std::string(to_string(mode))}});
  ContextDocument doc;
  doc.text = client.complete(endpoint, prompt);
  doc.provenance = {endpoint.endpoint_id, endpoint.model_name, client.now(), std::string(to_string(mode)),
                    tmpl.name, tmpl.hash, {}};
  doc.doc_id = doc_id_for(doc.provenance, doc.text);
  return doc;
}

ContextDocument run_deep_research(const AgentClient& client, const PromptLibrary& prompts,
                                  const AgentEndpoint& endpoint, std::string_view mode) {
  return run_deep_research(client, prompts, endpoint, parse_research_mode(mode));
}

ContextDocument consolidate_contexts(const AgentClient& client, const PromptLibrary& prompts,
                                     const ContextDocument& doc_a, const ContextDocument& doc_b,
                                     const AgentEndpoint& endpoint) {
  if (trim(doc_a.text).empty() || trim(doc_b.text).empty()) {
    throw ContractViolation("consolidate_contexts: both context documents must be non-empty");
  }
  const auto& tmpl = prompts.get("consolidate_contexts");
  const std::string prompt = tmpl.render({{"mode", doc_a.provenance.mode},
                                          {"source_a", doc_a.provenance.endpoint_id},
                                          {"source_b", doc_b.provenance.endpoint_id},
                                          {"document_a", doc_a.text},
                                          {"document_b", doc_b.text}});
  ContextDocument doc;
  doc.text = client.complete(endpoint, prompt);
  doc.provenance = {endpoint.endpoint_id, endpoint.model_name, client.now(), doc_a.provenance.mode,
                    tmpl.name, tmpl.hash, {doc_a.doc_id, doc_b.doc_id}};
  doc.doc_id = doc_id_for(doc.provenance, doc.text);
  return doc;
}

// ---- panels ----

std::string_view to_string(VoterKind k) { return k == VoterKind::Human ? "human" : "ai"; }
std::string_view to_string(Level l) { return l == Level::Graduate ? "graduate" : "professor"; }

std::optional<VoterKind> parse_voter_kind(std::string_view s) {
  const auto k = ascii_lower(s);
  if (k == "human") return VoterKind::Human;
  if (k == "ai") return VoterKind::Ai;
  return std::nullopt;
}

std::optional<Level> parse_level(std::string_view s) {
  const auto k = ascii_lower(s);
  if (k == "graduate") return Level::Graduate;
  if (k == "professor") return Level::Professor;
  return std::nullopt;
}

json VoterProfile::to_json() const {
  return {{"voter_id", voter_id},
          {"kind", std::string(agents::to_string(kind))},
          {"level", std::string(agents::to_string(level))},
          {"role", role},
          {"specialization", specialization},
          {"background", background}};
}

VoterProfile VoterProfile::from_json(const json& j) {
  VoterProfile p;
  p.voter_id = j.value("voter_id", "");
  auto kind = parse_voter_kind(j.value("kind", "ai"));
  auto level = parse_level(j.value("level", "graduate"));
  if (!kind || !level) throw ProtocolError("voter profile: bad kind or level");
  p.kind = *kind;
  p.level = *level;
  p.role = j.value("role", "");
  p.specialization = j.value("specialization", "");
  p.background = j.value("background", "");
  return p;
}

PanelSpec PanelSpec::defaults(Stage stage) {
  if (stage == Stage::Screening) return {Stage::Screening, 30, 70, Level::Graduate};
  return {Stage::Refinement, 10, 30, Level::Professor};
}

std::size_t background_cap(std::size_t ai_count) { return (ai_count + 4) / 5; }

std::vector<std::string> validate_panel(const std::vector<VoterProfile>& profiles,
                                        std::size_t expected_count) {
  std::vector<std::string> violations;
  if (profiles.size() != expected_count) {
    violations.push_back("expected " + std::to_string(expected_count) + " profiles, got " +
                         std::to_string(profiles.size()));
  }
  std::map<std::string, std::size_t> specs, backgrounds;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto& p = profiles[i];
    if (trim(p.role).empty() || trim(p.specialization).empty() || trim(p.background).empty()) {
      violations.push_back("profile " + std::to_string(i + 1) + " has an empty role, specialization or background");
    }
    ++specs[ascii_lower(collapse_whitespace(p.specialization))];
    ++backgrounds[ascii_lower(collapse_whitespace(p.background))];
  }
  for (const auto& [s, n] : specs) {
    if (n > 1) violations.push_back("duplicate specialization '" + s + "' (" + std::to_string(n) + ")");
  }
  const std::size_t cap = background_cap(expected_count);
  for (const auto& [b, n] : backgrounds) {
    if (n > cap) {
      violations.push_back("background '" + b + "' held by " + std::to_string(n) + " members (cap " +
                           std::to_string(cap) + ")");
    }
  }
  return violations;
}

namespace {

std::optional<std::vector<VoterProfile>> parse_profiles(std::string_view reply, std::string& error) {
  json j = json::parse(strip_code_fence(reply), nullptr, false);
  if (j.is_discarded()) {
    error = "reply is not valid JSON";
    return std::nullopt;
  }
  const json* arr = &j;
  if (j.is_object() && j.contains("profiles")) arr = &j["profiles"];
  if (!arr->is_array()) {
    error = "reply has no profiles array";
    return std::nullopt;
  }
  std::vector<VoterProfile> out;
  for (const auto& item : *arr) {
    if (!item.is_object()) {
      error = "profile entry is not an object";
      return std::nullopt;
    }
    VoterProfile p;
    p.role = item.value("role", "");
    p.specialization = item.value("specialization", "");
    p.background = item.value("background", "");
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

std::vector<VoterProfile> instantiate_panel(const AgentClient& client, const PromptLibrary& prompts,
                                            const AgentEndpoint& chair, const PanelSpec& spec,
                                            Domain domain) {
  if (spec.ai_count < 1) throw ContractViolation("instantiate_panel: ai_count must be >= 1");
  const auto& tmpl = prompts.get("chair_panel");
  std::vector<std::string> violations;
  for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
    std::string retry_note;
    if (!violations.empty()) {
      retry_note = "ATTEMPT: " + std::to_string(attempt) + "\nThe previous roster was rejected:\n";
      for (const auto& v : violations) retry_note += "- " + v + "\n";
    }
    const std::string prompt =
        tmpl.render({{"count", std::to_string(spec.ai_count)},
                     {"level", std::string(to_string(spec.level))},
                     {"stage", std::string(to_string(spec.stage))},
                     {"domain", std::string(display_name(domain))},
                     {"background_cap", std::to_string(background_cap(spec.ai_count))},
                     {"retry_note", retry_note}});
    const std::string reply = client.complete(chair, prompt);
    std::string parse_error;
    auto profiles = parse_profiles(reply, parse_error);
    if (!profiles) {
      violations = {parse_error};
      continue;
    }
    violations = validate_panel(*profiles, spec.ai_count);
    if (!violations.empty()) continue;
    for (std::size_t i = 0; i < profiles->size(); ++i) {
      auto& p = (*profiles)[i];
      char id[64];
      std::snprintf(id, sizeof id, "ai-%s-%03zu", std::string(to_string(spec.stage)).c_str(), i + 1);
      p.voter_id = id;
      p.kind = VoterKind::Ai;
      p.level = spec.level;
    }
    return *profiles;
  }
  throw PanelGenerationError("panel generation failed after " + std::to_string(kMaxAttempts) + " attempts",
                             violations);
}

}  // namespace trendscope::agents
