#include "trendscope/propose.hpp"

#include "trendscope/errors.hpp"
#include "trendscope/hash.hpp"
#include "trendscope/rng.hpp"
#include "trendscope/text.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace trendscope::propose {

using nlohmann::json;

std::string_view to_string(StageTag t) {
  switch (t) {
    case StageTag::Raw600: return "raw600";
    case StageTag::Pool100: return "pool100";
    case StageTag::Short30: return "short30";
    case StageTag::Final10: return "final10";
    case StageTag::Inducted2: return "inducted2";
  }
  return "?";
}

std::optional<StageTag> parse_stage_tag(std::string_view s) {
  for (StageTag t : {StageTag::Raw600, StageTag::Pool100, StageTag::Short30, StageTag::Final10,
                     StageTag::Inducted2}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

std::size_t nominal_size(StageTag t) {
  switch (t) {
    case StageTag::Raw600: return 600;
    case StageTag::Pool100: return 100;
    case StageTag::Short30: return 30;
    case StageTag::Final10: return 10;
    case StageTag::Inducted2: return 2;
  }
  return 0;
}

std::string normalize_candidate_text(std::string_view text) {
  std::string s = collapse_whitespace(text);
  while (!s.empty() && std::ispunct(static_cast<unsigned char>(s.back()))) s.pop_back();
  return trim(s);
}

std::string candidate_id_for(std::string_view text) {
  return sha256_hex(normalize_candidate_text(text)).substr(0, 16);
}

json Candidate::to_json() const {
  return {{"candidate_id", candidate_id},
          {"text", text},
          {"category", std::string(trendscope::to_string(category))},
          {"domain", std::string(trendscope::to_string(domain))},
          {"source_model", source_model},
          {"seed_keywords", seed_keywords},
          {"cited_work_ids", cited_work_ids}};
}

Candidate Candidate::from_json(const json& j) {
  Candidate c;
  c.text = j.at("text").get<std::string>();
  c.candidate_id = j.value("candidate_id", candidate_id_for(c.text));
  auto cat = parse_category(j.value("category", "breakthrough"));
  auto dom = parse_domain(j.value("domain", "ArtificialIntelligence"));
  if (!cat || !dom) throw IoError("candidate: bad category or domain");
  c.category = *cat;
  c.domain = *dom;
  c.source_model = j.value("source_model", "");
  c.seed_keywords = j.value("seed_keywords", std::vector<std::string>{});
  c.cited_work_ids = j.value("cited_work_ids", std::vector<std::string>{});
  return c;
}

Candidate make_candidate(std::string text, Category category, Domain domain, std::string source_model,
                         std::vector<std::string> seed_keywords, std::vector<std::string> cited_work_ids) {
  if (trim(text).empty()) throw ContractViolation("candidate text must be non-empty");
  Candidate c;
  c.candidate_id = candidate_id_for(text);
  c.text = std::move(text);
  c.category = category;
  c.domain = domain;
  c.source_model = std::move(source_model);
  c.seed_keywords = std::move(seed_keywords);
  c.cited_work_ids = std::move(cited_work_ids);
  return c;
}

const Candidate* CandidatePool::find(std::string_view id) const {
  for (const auto& c : candidates) {
    if (c.candidate_id == id) return &c;
  }
  return nullptr;
}

namespace {

json pool_meta(const CandidatePool& pool) {
  return {{"category", std::string(to_string(pool.category))},
          {"domain", std::string(to_string(pool.domain))},
          {"stage_tag", std::string(to_string(pool.stage_tag))},
          {"size", pool.candidates.size()},
          {"undersized", pool.undersized},
          {"source_session", pool.source_session},
          {"notes", pool.notes}};
}

CandidatePool pool_from_meta(const json& m) {
  CandidatePool pool;
  auto cat = parse_category(m.value("category", ""));
  auto dom = parse_domain(m.value("domain", ""));
  auto tag = parse_stage_tag(m.value("stage_tag", ""));
  if (!cat || !dom || !tag) throw IoError("pool: bad metadata");
  pool.category = *cat;
  pool.domain = *dom;
  pool.stage_tag = *tag;
  pool.undersized = m.value("undersized", false);
  pool.source_session = m.value("source_session", "");
  pool.notes = m.value("notes", std::vector<std::string>{});
  return pool;
}

}  // namespace

json to_json(const CandidatePool& pool) {
  json j = pool_meta(pool);
  j["candidates"] = json::array();
  for (const auto& c : pool.candidates) j["candidates"].push_back(c.to_json());
  return j;
}

CandidatePool pool_from_json(const json& j) {
  if (!j.is_object()) throw IoError("pool: expected an object");
  CandidatePool pool = pool_from_meta(j);
  for (const auto& c : j.value("candidates", json::array())) pool.candidates.push_back(Candidate::from_json(c));
  return pool;
}

void write_pool_jsonl(std::ostream& out, const CandidatePool& pool) {
  out << json{{"pool", pool_meta(pool)}}.dump() << '\n';
  for (const auto& c : pool.candidates) out << c.to_json().dump() << '\n';
}

CandidatePool read_pool_jsonl(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("pool file is empty");
  json meta = json::parse(line, nullptr, false);
  if (meta.is_discarded() || !meta.contains("pool")) throw IoError("pool file: missing metadata line");
  CandidatePool pool = pool_from_meta(meta["pool"]);
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw IoError("pool file: malformed candidate line");
    pool.candidates.push_back(Candidate::from_json(j));
  }
  return pool;
}

CandidatePool merge_raw_pool(const std::vector<std::vector<Candidate>>& per_model, Category category,
                             Domain domain) {
  CandidatePool pool;
  pool.category = category;
  pool.domain = domain;
  pool.stage_tag = StageTag::Raw600;
  std::map<std::string, std::string> seen;  // id -> normalized text
  for (const auto& list : per_model) {
    for (const auto& c : list) {
      const std::string norm = normalize_candidate_text(c.text);
      auto [it, inserted] = seen.emplace(c.candidate_id, norm);
      if (!inserted) {
        if (it->second != norm) throw Error("candidate id collision between different texts: " + c.candidate_id);
        continue;
      }
      pool.candidates.push_back(c);
    }
  }
  pool.undersized = pool.candidates.size() < nominal_size(StageTag::Raw600);
  return pool;
}

// ---- prompts ----

std::string Prompt::hash() const { return sha256_hex(text); }

namespace {

std::string literature_block(const std::vector<corpus::WorkRecord>& works) {
  if (works.empty()) return std::string(kNoLiteratureMarker);
  std::ostringstream out;
  for (const auto& w : works) {
    out << "- " << (w.title.empty() ? "(untitled)" : w.title) << " (cited_by_count: " << w.cited_by_count
        << "; year: " << w.year << "; id: " << w.work_id << ")\n";
  }
  std::string s = out.str();
  if (!s.empty()) s.pop_back();
  return s;
}

void append_ids(std::vector<std::string>& ids, const std::vector<corpus::WorkRecord>& works) {
  for (const auto& w : works) ids.push_back(w.work_id);
}

}  // namespace

Prompt assemble_breakthrough_prompt(const agents::PromptLibrary& prompts, Domain domain,
                                    const std::string& keyword,
                                    const std::vector<corpus::WorkRecord>& works_2025,
                                    const agents::ContextDocument& context, std::size_t request_count) {
  const auto& tmpl = prompts.get("propose_breakthrough");
  Prompt p;
  p.text = tmpl.render({{"domain", std::string(display_name(domain))},
                        {"keyword", keyword},
                        {"count", std::to_string(request_count)},
                        {"literature", literature_block(works_2025)},
                        {"context", context.text}});
  p.template_name = tmpl.name;
  p.template_hash = tmpl.hash;
  p.keyword = keyword;
  p.request_count = request_count;
  append_ids(p.cited_work_ids, works_2025);
  return p;
}

Prompt assemble_question_prompt(const agents::PromptLibrary& prompts, Domain domain,
                                const std::string& keyword,
                                const std::vector<corpus::WorkRecord>& works_2025,
                                const std::vector<corpus::WorkRecord>& works_foundational,
                                const agents::ContextDocument& context, std::size_t request_count) {
  const auto& tmpl = prompts.get("propose_question");
  Prompt p;
  p.text = tmpl.render({{"domain", std::string(display_name(domain))},
                        {"keyword", keyword},
                        {"count", std::to_string(request_count)},
                        {"literature_recent", literature_block(works_2025)},
                        {"literature_foundational", literature_block(works_foundational)},
                        {"context", context.text}});
  p.template_name = tmpl.name;
  p.template_hash = tmpl.hash;
  p.keyword = keyword;
  p.request_count = request_count;
  append_ids(p.cited_work_ids, works_2025);
  append_ids(p.cited_work_ids, works_foundational);
  return p;
}

std::vector<std::size_t> distribute_quota(std::size_t target, std::size_t n_keywords) {
  if (n_keywords == 0) return {};
  std::vector<std::size_t> out(n_keywords, target / n_keywords);
  for (std::size_t i = 0; i < target % n_keywords; ++i) ++out[i];
  return out;
}

// ---- parsing ----

std::optional<std::vector<std::string>> parse_candidate_texts(std::string_view reply) {
  json j = json::parse(strip_code_fence(reply), nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  const json* arr = &j;
  if (j.is_object()) {
    if (!j.contains("candidates")) return std::nullopt;
    arr = &j["candidates"];
  }
  if (!arr->is_array()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& item : *arr) {
    if (item.is_string()) out.push_back(item.get<std::string>());
    else if (item.is_object() && item.contains("text") && item["text"].is_string()) out.push_back(item["text"].get<std::string>());
    else return std::nullopt;
  }
  return out;
}

std::optional<std::vector<std::string>> parse_selections(std::string_view reply) {
  json j = json::parse(strip_code_fence(reply), nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  const json* arr = &j;
  if (j.is_object()) {
    if (!j.contains("selections")) return std::nullopt;
    arr = &j["selections"];
  }
  if (!arr->is_array()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& item : *arr) {
    if (!item.is_string()) return std::nullopt;
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::optional<std::string> check_approval_ballot(const std::vector<std::string>& selections,
                                                 const std::set<std::string>& known_ids,
                                                 std::size_t required) {
  if (selections.size() != required) {
    return "expected " + std::to_string(required) + " selections, got " + std::to_string(selections.size());
  }
  std::set<std::string> seen;
  for (const auto& s : selections) {
    if (!known_ids.count(s)) return "unknown candidate id " + s;
    if (!seen.insert(s).second) return "duplicate selection " + s;
  }
  return std::nullopt;
}

// ---- proposal ----

ProposalResult propose_candidates(const agents::AgentClient& client, const agents::AgentEndpoint& endpoint,
                                  const std::vector<Prompt>& prompts, std::size_t target_count,
                                  Category category, Domain domain) {
  if (prompts.empty()) throw ContractViolation("propose_candidates: at least one prompt is required");
  ProposalResult result;
  std::map<std::string, std::string> seen;
  for (std::size_t i = 0; i < prompts.size() && result.candidates.size() < target_count; ++i) {
    const auto& prompt = prompts[i];
    const std::string reply = client.complete(endpoint, prompt.text);
    auto texts = parse_candidate_texts(reply);
    if (!texts) {
      result.warnings.push_back(endpoint.endpoint_id + ": unparseable reply to prompt " + std::to_string(i + 1) +
                                " (keyword '" + prompt.keyword + "')");
      continue;
    }
    for (auto& text : *texts) {
      if (result.candidates.size() >= target_count) break;
      if (trim(text).empty()) continue;
      Candidate c = make_candidate(text, category, domain, endpoint.endpoint_id, {prompt.keyword},
                                   prompt.cited_work_ids);
      const std::string norm = normalize_candidate_text(c.text);
      auto [it, inserted] = seen.emplace(c.candidate_id, norm);
      if (!inserted) {
        if (it->second != norm) throw Error("candidate id collision between different texts: " + c.candidate_id);
        continue;
      }
      result.candidates.push_back(std::move(c));
    }
  }
  result.shortfall = result.candidates.size() < target_count;
  if (result.shortfall) {
    result.warnings.push_back(endpoint.endpoint_id + ": shortfall, " + std::to_string(result.candidates.size()) +
                              " of " + std::to_string(target_count) + " candidates");
  }
  return result;
}

// ---- ensemble ----

EnsembleVote cross_model_vote(const agents::AgentClient& client, const agents::PromptLibrary& prompts,
                              const CandidatePool& pool,
                              const std::vector<agents::AgentEndpoint>& endpoints,
                              std::size_t votes_per_model, std::uint64_t seed) {
  std::set<std::string> ids;
  for (const auto& c : pool.candidates) {
    if (!ids.insert(c.candidate_id).second) {
      throw ContractViolation("cross_model_vote: pool is not deduplicated (" + c.candidate_id + ")");
    }
  }
  if (ids.empty()) throw ContractViolation("cross_model_vote: empty pool");

  EnsembleVote vote;
  for (const auto& id : ids) vote.counts[id] = 0;
  vote.votes_per_ballot = std::min(votes_per_model, ids.size());
  const auto& tmpl = prompts.get("ensemble_vote");

  for (const auto& ep : endpoints) {
    std::vector<std::size_t> order(pool.candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, "ensemble-order/" + ep.endpoint_id));
    rng.shuffle(order);
    std::string listing;
    for (std::size_t i : order) {
      listing += "[" + pool.candidates[i].candidate_id + "] " + pool.candidates[i].text + "\n";
    }

    std::optional<std::vector<std::string>> accepted;
    std::string last_error;
    for (int attempt = 1; attempt <= agents::kMaxAttempts && !accepted; ++attempt) {
      std::string retry_note;
      if (attempt > 1) retry_note = "ATTEMPT: " + std::to_string(attempt) + "\nYour previous ballot was invalid: " + last_error + "\n";
      const std::string prompt = tmpl.render({{"category", std::string(to_string(pool.category))},
                                              {"domain", std::string(display_name(pool.domain))},
                                              {"votes", std::to_string(vote.votes_per_ballot)},
                                              {"retry_note", retry_note},
                                              {"candidates", listing}});
      auto selections = parse_selections(client.complete(ep, prompt));
      if (!selections) {
        last_error = "reply is not a JSON selection list";
        continue;
      }
      if (auto err = check_approval_ballot(*selections, ids, vote.votes_per_ballot)) {
        last_error = *err;
        continue;
      }
      accepted = std::move(selections);
    }
    if (!accepted) {
      vote.dropped_endpoints.push_back(ep.endpoint_id);
      vote.warnings.push_back(ep.endpoint_id + ": ballot dropped after " + std::to_string(agents::kMaxAttempts) +
                              " invalid attempts (" + last_error + ")");
      continue;
    }
    for (const auto& id : *accepted) ++vote.counts[id];
    ++vote.valid_ballots;
    vote.ballots[ep.endpoint_id] = std::move(*accepted);
  }
  if (vote.valid_ballots == 0) throw EnsembleFailure("cross_model_vote: every model ballot was dropped");
  return vote;
}

json to_json(const EnsembleVote& vote) {
  return {{"valid_ballots", vote.valid_ballots},
          {"votes_per_ballot", vote.votes_per_ballot},
          {"counts", vote.counts},
          {"ballots", vote.ballots},
          {"dropped_endpoints", vote.dropped_endpoints},
          {"warnings", vote.warnings}};
}

CandidatePool select_top_pool(const CandidatePool& pool, const std::map<std::string, std::size_t>& counts,
                              std::size_t k) {
  if (counts.empty()) throw ContractViolation("select_top_pool: empty tally");
  std::vector<const Candidate*> order;
  for (const auto& c : pool.candidates) order.push_back(&c);
  auto count_of = [&](const Candidate* c) {
    auto it = counts.find(c->candidate_id);
    return it == counts.end() ? std::size_t{0} : it->second;
  };
  std::sort(order.begin(), order.end(), [&](const Candidate* a, const Candidate* b) {
    const auto ca = count_of(a), cb = count_of(b);
    if (ca != cb) return ca > cb;
    return a->candidate_id < b->candidate_id;
  });
  CandidatePool out;
  out.category = pool.category;
  out.domain = pool.domain;
  out.stage_tag = StageTag::Pool100;
  const std::size_t n = std::min(k, order.size());
  for (std::size_t i = 0; i < n; ++i) out.candidates.push_back(*order[i]);
  if (k >= order.size()) {
    out.undersized = order.size() < k;
    out.notes.push_back("k=" + std::to_string(k) + " covers the whole pool of " + std::to_string(order.size()));
  } else if (count_of(order[k - 1]) == count_of(order[k])) {
    out.notes.push_back("boundary tie at rank " + std::to_string(k) + " (count " +
                        std::to_string(count_of(order[k])) + ") resolved by candidate_id");
  }
  return out;
}

}  // namespace trendscope::propose
