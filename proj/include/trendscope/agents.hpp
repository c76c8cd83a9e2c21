#pragma once

#include "trendscope/types.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace trendscope::agents {

enum class ProviderKind { Live, Mock };
enum class RegionTag { US, CN, Other };

std::string_view to_string(ProviderKind k);
std::string_view to_string(RegionTag r);
std::optional<ProviderKind> parse_provider_kind(std::string_view s);
std::optional<RegionTag> parse_region(std::string_view s);

struct AgentEndpoint {
  std::string endpoint_id;
  ProviderKind provider_kind = ProviderKind::Mock;
  std::string model_name;
  std::string base_url;
  // Name of the environment variable holding the API key. Empty means
  // TRENDSCOPE_API_KEY_<ENDPOINT_ID>.
  std::string credential_ref;
  double temperature = 0.6;
  RegionTag region_tag = RegionTag::Other;

  void validate() const;
  std::string credential_env() const;
};

struct DecodeHints {
  std::optional<double> temperature;
  std::optional<int> max_tokens;
  std::string system_prompt = "You are a careful scientific analyst. Follow the output format exactly.";
};

// ---- transport ----

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Throws TransportError on connection failures and retryable statuses.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

// HTTPS (or plain HTTP) JSON POST via cpp-httplib.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(std::chrono::seconds timeout = std::chrono::seconds(600));
  HttpResponse post(const HttpRequest& request) override;

 private:
  std::chrono::seconds timeout_;
};

// ---- mock ----

// Stable lookup key of a (endpoint_id, prompt) pair.
std::string mock_key(std::string_view endpoint_id, std::string_view prompt);

// hash -> canned response. Stored on disk as <hash>.txt files. Immutable once shared.
class MockTable {
 public:
  static MockTable load_dir(const std::filesystem::path& dir);
  void save_dir(const std::filesystem::path& dir) const;

  void add(std::string_view endpoint_id, std::string_view prompt, std::string response);
  void add_by_key(std::string key, std::string response);
  std::optional<std::string> lookup(std::string_view endpoint_id, std::string_view prompt) const;
  std::size_t size() const { return responses_.size(); }

 private:
  std::map<std::string, std::string> responses_;
};

// Consulted for mock endpoints when the table has no entry.
using MockResponder =
    std::function<std::optional<std::string>(const AgentEndpoint&, std::string_view prompt)>;

std::string mock_fallback_text(std::string_view endpoint_id, std::string_view prompt);
bool is_mock_fallback(std::string_view text);

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{500};
  // Replaceable so tests do not sleep.
  std::function<void(std::chrono::milliseconds)> sleep;
};

// Provider-agnostic completion client. Stateless per call; safe to share
// across threads once configured.
class AgentClient {
 public:
  explicit AgentClient(std::shared_ptr<Transport> transport = nullptr);

  void set_mock_table(MockTable table) { mock_table_ = std::move(table); }
  void set_mock_responder(MockResponder responder) { responder_ = std::move(responder); }
  void set_retry_policy(RetryPolicy policy) { retry_ = std::move(policy); }
  // ISO-8601 timestamps for provenance. Mock pipelines use a fixed clock.
  void set_clock(std::function<std::string()> clock) { clock_ = std::move(clock); }

  std::string complete(const AgentEndpoint& endpoint, std::string_view prompt,
                       const DecodeHints& hints = {}) const;

  std::string now() const;
  std::size_t transport_calls() const { return transport_calls_.load(); }
  std::size_t completions() const { return completions_.load(); }

 private:
  std::string complete_live(const AgentEndpoint& endpoint, std::string_view prompt,
                            const DecodeHints& hints) const;

  std::shared_ptr<Transport> transport_;
  MockTable mock_table_;
  MockResponder responder_;
  RetryPolicy retry_;
  std::function<std::string()> clock_;
  mutable std::atomic<std::size_t> transport_calls_{0};
  mutable std::atomic<std::size_t> completions_{0};
};

// Builds the chat-completion request body and extracts the reply text.
nlohmann::json build_chat_request(const AgentEndpoint& endpoint, std::string_view prompt,
                                  const DecodeHints& hints);
// Throws ProtocolError when the envelope has no text reply.
std::string parse_chat_response(std::string_view body);

// ---- prompt templates ----

struct PromptTemplate {
  std::string name;
  int version = 0;
  std::string text;
  std::string hash;  // sha256 of text

  std::string render(const std::vector<std::pair<std::string, std::string>>& vars) const;
};

// Loads <name>.v<N>.txt files from a directory; the highest version per name wins.
class PromptLibrary {
 public:
  static PromptLibrary load_dir(const std::filesystem::path& dir);
  void add(PromptTemplate tmpl);
  const PromptTemplate& get(std::string_view name) const;
  bool contains(std::string_view name) const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

// ---- deep research ----

enum class ResearchMode { Breakthrough2025, Question2026 };
std::string_view to_string(ResearchMode m);
// Throws ContractViolation for anything outside the enum.
ResearchMode parse_research_mode(std::string_view s);

struct Provenance {
  std::string endpoint_id;
  std::string model_name;
  std::string timestamp;
  std::string mode;
  std::string template_name;
  std::string template_hash;
  std::vector<std::string> parents;
};

struct ContextDocument {
  std::string doc_id;
  std::string text;
  Provenance provenance;

  nlohmann::json to_json() const;
  static ContextDocument from_json(const nlohmann::json& j);
};

ContextDocument run_deep_research(const AgentClient& client, const PromptLibrary& prompts,
                                  const AgentEndpoint& endpoint, ResearchMode mode);
ContextDocument run_deep_research(const AgentClient& client, const PromptLibrary& prompts,
                                  const AgentEndpoint& endpoint, std::string_view mode);

// Throws ContractViolation when either document is empty.
ContextDocument consolidate_contexts(const AgentClient& client, const PromptLibrary& prompts,
                                     const ContextDocument& doc_a, const ContextDocument& doc_b,
                                     const AgentEndpoint& endpoint);

// ---- voter panels ----

enum class VoterKind { Human, Ai };
enum class Level { Graduate, Professor };
std::string_view to_string(VoterKind k);
std::string_view to_string(Level l);
std::optional<VoterKind> parse_voter_kind(std::string_view s);
std::optional<Level> parse_level(std::string_view s);

struct VoterProfile {
  std::string voter_id;
  VoterKind kind = VoterKind::Ai;
  Level level = Level::Graduate;
  std::string role;
  std::string specialization;
  std::string background;

  nlohmann::json to_json() const;
  static VoterProfile from_json(const nlohmann::json& j);
  bool operator==(const VoterProfile&) const = default;
};

struct PanelSpec {
  Stage stage = Stage::Screening;
  std::size_t human_count = 30;
  std::size_t ai_count = 70;
  Level level = Level::Graduate;

  static PanelSpec defaults(Stage stage);
};

// Most members allowed to share one background string.
std::size_t background_cap(std::size_t ai_count);

// Constraint violations of a generated AI roster; empty when valid.
std::vector<std::string> validate_panel(const std::vector<VoterProfile>& profiles,
                                        std::size_t expected_count);

// One ChairAgent call per attempt, up to 3 attempts. Throws
// PanelGenerationError listing the last attempt's violations.
std::vector<VoterProfile> instantiate_panel(const AgentClient& client, const PromptLibrary& prompts,
                                            const AgentEndpoint& chair, const PanelSpec& spec,
                                            Domain domain);

inline constexpr int kMaxAttempts = 3;

}  // namespace trendscope::agents
