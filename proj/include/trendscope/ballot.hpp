#pragma once

#include "trendscope/agents.hpp"
#include "trendscope/propose.hpp"
#include "trendscope/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace trendscope::ballot {

enum class RuleKind { ApprovalUnlimited, LimitedExact };
std::string_view to_string(RuleKind k);
std::optional<RuleKind> parse_rule_kind(std::string_view s);

struct VotingRule {
  RuleKind kind = RuleKind::ApprovalUnlimited;
  std::size_t votes_per_voter = 0;  // limited_exact only
  double weight_human = 1.0;
  double weight_ai = 1.0;
  std::size_t advance_count = 30;
  std::size_t induct_count = 0;

  static VotingRule screening();
  static VotingRule refinement();
  static VotingRule for_stage(Stage stage);

  void validate() const;
  // Instruction shown to voters.
  std::string rule_text() const;
  nlohmann::json to_json() const;
  static VotingRule from_json(const nlohmann::json& j);
  bool operator==(const VotingRule&) const = default;
};

struct Ballot {
  std::string voter_id;
  std::vector<std::string> selections;
  std::int64_t submitted_at = 0;  // unix milliseconds

  nlohmann::json to_json() const;
  static Ballot from_json(const nlohmann::json& j);
  bool operator==(const Ballot&) const = default;
};

enum class RejectReason {
  SessionClosed,
  UnknownVoter,
  DuplicateVoter,
  DuplicateSelection,
  WrongSelectionCount,
  UnknownCandidate,
};
std::string_view to_string(RejectReason r);

struct SubmitResult {
  bool accepted = false;
  std::optional<RejectReason> reason;
  std::string detail;

  static SubmitResult ok() { return {true, std::nullopt, {}}; }
  static SubmitResult rejected(RejectReason r, std::string detail) { return {false, r, std::move(detail)}; }
};

enum class SessionStatus { Open, Closed };
std::string_view to_string(SessionStatus s);

class Session {
 public:
  std::string session_id;
  Category category = Category::Breakthrough;
  Domain domain = Domain::ArtificialIntelligence;
  Stage stage = Stage::Screening;
  propose::CandidatePool pool;
  std::vector<agents::VoterProfile> panel;
  VotingRule rule;
  SessionStatus status = SessionStatus::Open;
  std::uint64_t seed = 0;
  std::vector<std::string> presentation_order;

  const std::vector<Ballot>& ballots() const { return ballots_; }
  const agents::VoterProfile* voter(std::string_view voter_id) const;
  bool has_voted(std::string_view voter_id) const;
  std::size_t count(agents::VoterKind kind) const;

  // Checks in order: closed, unknown voter, duplicate voter, duplicate
  // selection, selection count, unknown candidate.
  SubmitResult validate(const Ballot& ballot) const;
  SubmitResult submit(Ballot ballot);
  void close() { status = SessionStatus::Closed; }

  // Without ballots; they live in the append-only log.
  nlohmann::json to_json() const;
  static Session from_json(const nlohmann::json& j);

 private:
  std::vector<Ballot> ballots_;
};

struct CreateOptions {
  std::uint64_t seed = 0;
  bool allow_panel_override = false;
  std::string session_id;  // derived from the inputs when empty
};

std::string_view expected_pool_tag(Stage stage);

// Throws ContractViolation on a pool/stage mismatch, a panel that does not
// match the stage defaults (unless overridden), or duplicate voter ids.
Session create_session(Category category, Domain domain, Stage stage, propose::CandidatePool pool,
                       std::vector<agents::VoterProfile> panel, VotingRule rule,
                       const CreateOptions& options = {});

// ---- tally ----

struct TallyRow {
  std::string candidate_id;
  std::size_t raw_human = 0;
  std::size_t raw_ai = 0;
  double weighted = 0.0;
  std::size_t final_rank = 0;
  bool advanced = false;
  bool inducted = false;
  bool operator==(const TallyRow&) const = default;
};

struct Turnout {
  std::size_t human_panel = 0;
  std::size_t ai_panel = 0;
  std::size_t human_ballots = 0;
  std::size_t ai_ballots = 0;
  bool operator==(const Turnout&) const = default;
};

struct Tally {
  std::string session_id;
  Category category = Category::Breakthrough;
  Domain domain = Domain::ArtificialIntelligence;
  Stage stage = Stage::Screening;
  VotingRule rule;
  std::vector<std::string> candidate_order;  // presentation order
  std::vector<TallyRow> rows;                // by final_rank
  Turnout turnout;
  std::vector<std::string> notes;

  const TallyRow* find(std::string_view candidate_id) const;
  nlohmann::json to_json() const;
  static Tally from_json(const nlohmann::json& j);
  // candidate_id,raw_human,raw_ai,weighted,final_rank,advanced,inducted
  void write_csv(std::ostream& out) const;
  bool operator==(const Tally&) const = default;
};

// Throws ContractViolation while the session is open, EmptyTallyError with no ballots.
Tally tally(const Session& session);

struct AdvanceResult {
  propose::CandidatePool next;
  std::optional<propose::CandidatePool> inducted;
};

AdvanceResult advance(const Session& session, const Tally& tally);

// ---- AI ballots ----

struct AiCollection {
  std::size_t accepted = 0;
  std::size_t calls = 0;
  std::vector<std::string> abstentions;
  std::vector<std::string> log;
};

using SubmitFn = std::function<SubmitResult(const Ballot&)>;

std::string build_ballot_prompt(const agents::PromptLibrary& prompts, const Session& session,
                                const agents::VoterProfile& voter, const std::string& retry_note);

// AI voter i is served by endpoints[i % endpoints.size()]. Each agent gets up
// to 3 attempts, then abstains.
AiCollection collect_ai_ballots(const Session& session, const SubmitFn& submit,
                                const agents::AgentClient& client, const agents::PromptLibrary& prompts,
                                const std::vector<agents::AgentEndpoint>& endpoints,
                                const std::function<std::int64_t()>& clock = {});
AiCollection collect_ai_ballots(Session& session, const agents::AgentClient& client,
                                const agents::PromptLibrary& prompts,
                                const std::vector<agents::AgentEndpoint>& endpoints);

// ---- persistent store ----

// One directory per session: session.json plus an append-only ballots.jsonl.
// Submissions to one session are serialized; sessions are independent.
class SessionStore {
 public:
  // Replays every session found under dir.
  explicit SessionStore(std::filesystem::path dir);

  Session create(Category category, Domain domain, Stage stage, propose::CandidatePool pool,
                 std::vector<agents::VoterProfile> panel, VotingRule rule, const CreateOptions& options = {});
  // Throws NotFoundError.
  Session get(std::string_view session_id) const;
  bool contains(std::string_view session_id) const;
  std::vector<std::string> list() const;

  // Stamps submitted_at from the clock.
  SubmitResult submit(std::string_view session_id, Ballot ballot);
  void close(std::string_view session_id);
  Tally tally(std::string_view session_id) const;

  void set_clock(std::function<std::int64_t()> clock);
  const std::filesystem::path& dir() const { return dir_; }

  // Reads a session directory and replays its ballot log.
  static Session load_session(const std::filesystem::path& session_dir);

 private:
  struct Entry {
    mutable std::mutex mu;
    Session session;
  };
  Entry& entry(std::string_view session_id) const;
  void persist_meta(const Session& s) const;

  std::filesystem::path dir_;
  mutable std::shared_mutex map_mu_;
  std::map<std::string, std::unique_ptr<Entry>, std::less<>> entries_;
  std::function<std::int64_t()> clock_;
};

std::int64_t unix_millis_now();

}  // namespace trendscope::ballot
