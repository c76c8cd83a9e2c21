#pragma once

#include "trendscope/agents.hpp"
#include "trendscope/corpus.hpp"
#include "trendscope/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace trendscope::propose {

enum class StageTag { Raw600, Pool100, Short30, Final10, Inducted2 };
std::string_view to_string(StageTag t);
std::optional<StageTag> parse_stage_tag(std::string_view s);
// 600 / 100 / 30 / 10 / 2
std::size_t nominal_size(StageTag t);

// Hash key for dedup: case kept, whitespace collapsed, trailing punctuation dropped.
std::string normalize_candidate_text(std::string_view text);
std::string candidate_id_for(std::string_view text);

struct Candidate {
  std::string candidate_id;
  std::string text;
  Category category = Category::Breakthrough;
  Domain domain = Domain::ArtificialIntelligence;
  std::string source_model;
  std::vector<std::string> seed_keywords;
  std::vector<std::string> cited_work_ids;

  nlohmann::json to_json() const;
  static Candidate from_json(const nlohmann::json& j);
  bool operator==(const Candidate&) const = default;
};

Candidate make_candidate(std::string text, Category category, Domain domain, std::string source_model,
                         std::vector<std::string> seed_keywords = {},
                         std::vector<std::string> cited_work_ids = {});

struct CandidatePool {
  Category category = Category::Breakthrough;
  Domain domain = Domain::ArtificialIntelligence;
  StageTag stage_tag = StageTag::Raw600;
  std::vector<Candidate> candidates;
  // Fewer candidates than the tag's nominal size.
  bool undersized = false;
  std::string source_session;
  std::vector<std::string> notes;

  std::size_t size() const { return candidates.size(); }
  const Candidate* find(std::string_view id) const;
};

nlohmann::json to_json(const CandidatePool& pool);
CandidatePool pool_from_json(const nlohmann::json& j);

// First line is pool metadata, then one candidate per line.
void write_pool_jsonl(std::ostream& out, const CandidatePool& pool);
CandidatePool read_pool_jsonl(std::istream& in);

// Merges per-model lists into one pool, first occurrence of an id wins.
// Throws Error on an id collision between different normalized texts.
CandidatePool merge_raw_pool(const std::vector<std::vector<Candidate>>& per_model, Category category,
                             Domain domain);

// ---- prompts ----

struct Prompt {
  std::string text;
  std::string template_name;
  std::string template_hash;
  std::string keyword;
  std::vector<std::string> cited_work_ids;
  std::size_t request_count = 0;

  std::string hash() const;
};

inline constexpr std::string_view kNoLiteratureMarker = "[NO LITERATURE FOUND]";

Prompt assemble_breakthrough_prompt(const agents::PromptLibrary& prompts, Domain domain,
                                    const std::string& keyword,
                                    const std::vector<corpus::WorkRecord>& works_2025,
                                    const agents::ContextDocument& context, std::size_t request_count);

Prompt assemble_question_prompt(const agents::PromptLibrary& prompts, Domain domain,
                                const std::string& keyword,
                                const std::vector<corpus::WorkRecord>& works_2025,
                                const std::vector<corpus::WorkRecord>& works_foundational,
                                const agents::ContextDocument& context, std::size_t request_count);

// Splits target evenly over n keywords; the remainder goes to the first
// (hottest) keywords.
std::vector<std::size_t> distribute_quota(std::size_t target, std::size_t n_keywords);

// ---- proposal ----

struct ProposalResult {
  std::vector<Candidate> candidates;
  bool shortfall = false;
  std::vector<std::string> warnings;
};

// Throws ContractViolation when prompts is empty.
ProposalResult propose_candidates(const agents::AgentClient& client, const agents::AgentEndpoint& endpoint,
                                  const std::vector<Prompt>& prompts, std::size_t target_count,
                                  Category category, Domain domain);

// Parses {"candidates": [{"text": ...}]} or a bare array of strings/objects.
std::optional<std::vector<std::string>> parse_candidate_texts(std::string_view reply);

// Parses {"selections": [...]} or a bare array of ids.
std::optional<std::vector<std::string>> parse_selections(std::string_view reply);

// Empty when valid; otherwise the reason.
std::optional<std::string> check_approval_ballot(const std::vector<std::string>& selections,
                                                 const std::set<std::string>& known_ids,
                                                 std::size_t required);

// ---- cross-model voting ----

struct EnsembleVote {
  std::map<std::string, std::size_t> counts;  // every pool id, 0 if unvoted
  std::size_t valid_ballots = 0;
  std::size_t votes_per_ballot = 0;
  std::map<std::string, std::vector<std::string>> ballots;  // endpoint -> selections
  std::vector<std::string> dropped_endpoints;
  std::vector<std::string> warnings;
};

// Each endpoint sees the pool in its own seeded order and must return exactly
// min(votes_per_model, pool size) distinct known ids. Invalid ballots are
// re-requested; after 3 failed attempts that model is dropped. Throws
// EnsembleFailure when every ballot is dropped.
EnsembleVote cross_model_vote(const agents::AgentClient& client, const agents::PromptLibrary& prompts,
                              const CandidatePool& pool,
                              const std::vector<agents::AgentEndpoint>& endpoints,
                              std::size_t votes_per_model, std::uint64_t seed);

nlohmann::json to_json(const EnsembleVote& vote);

// Top k by (count desc, candidate_id asc).
CandidatePool select_top_pool(const CandidatePool& pool, const std::map<std::string, std::size_t>& counts,
                              std::size_t k = 100);

}  // namespace trendscope::propose
