#include "trendscope/ballot.hpp"

#include "trendscope/csv.hpp"
#include "trendscope/errors.hpp"
#include "trendscope/hash.hpp"
#include "trendscope/rng.hpp"
#include "trendscope/text.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace trendscope::ballot {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(RuleKind k) {
  return k == RuleKind::ApprovalUnlimited ? "approval_unlimited" : "limited_exact";
}

std::optional<RuleKind> parse_rule_kind(std::string_view s) {
  if (s == "approval_unlimited") return RuleKind::ApprovalUnlimited;
  if (s == "limited_exact") return RuleKind::LimitedExact;
  return std::nullopt;
}

VotingRule VotingRule::screening() { return {RuleKind::ApprovalUnlimited, 0, 1.0, 1.0, 30, 0}; }
VotingRule VotingRule::refinement() { return {RuleKind::LimitedExact, 10, 7.0, 1.0, 10, 2}; }
VotingRule VotingRule::for_stage(Stage stage) {
  return stage == Stage::Screening ? screening() : refinement();
}

void VotingRule::validate() const {
  if (!(weight_human > 0.0) || !(weight_ai > 0.0) || !std::isfinite(weight_human) || !std::isfinite(weight_ai)) {
    throw ContractViolation("voting rule: weights must be positive and finite");
  }
  if (advance_count < induct_count) throw ContractViolation("voting rule: advance_count < induct_count");
  if (kind == RuleKind::LimitedExact && votes_per_voter < 1) {
    throw ContractViolation("voting rule: limited_exact needs votes_per_voter >= 1");
  }
}

std::string VotingRule::rule_text() const {
  if (kind == RuleKind::ApprovalUnlimited) {
    return "Approval voting: cast one vote for each candidate you consider significant. Select at least one "
           "candidate; each candidate at most once.";
  }
  return "Limited voting: you hold exactly " + std::to_string(votes_per_voter) +
         " votes. Select exactly " + std::to_string(votes_per_voter) + " distinct candidates.";
}

json VotingRule::to_json() const {
  return {{"kind", std::string(to_string(kind))},
          {"votes_per_voter", votes_per_voter},
          {"weight_human", weight_human},
          {"weight_ai", weight_ai},
          {"advance_count", advance_count},
          {"induct_count", induct_count}};
}

VotingRule VotingRule::from_json(const json& j) {
  VotingRule r;
  auto kind = parse_rule_kind(j.at("kind").get<std::string>());
  if (!kind) throw ContractViolation("voting rule: unknown kind");
  r.kind = *kind;
  r.votes_per_voter = j.value("votes_per_voter", std::size_t{0});
  r.weight_human = j.value("weight_human", 1.0);
  r.weight_ai = j.value("weight_ai", 1.0);
  r.advance_count = j.value("advance_count", std::size_t{0});
  r.induct_count = j.value("induct_count", std::size_t{0});
  r.validate();
  return r;
}

json Ballot::to_json() const {
  return {{"voter_id", voter_id}, {"selections", selections}, {"submitted_at", submitted_at}};
}

Ballot Ballot::from_json(const json& j) {
  Ballot b;
  b.voter_id = j.at("voter_id").get<std::string>();
  b.selections = j.at("selections").get<std::vector<std::string>>();
  b.submitted_at = j.value("submitted_at", std::int64_t{0});
  return b;
}

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::SessionClosed: return "session_closed";
    case RejectReason::UnknownVoter: return "unknown_voter";
    case RejectReason::DuplicateVoter: return "duplicate_voter";
    case RejectReason::DuplicateSelection: return "duplicate_selection";
    case RejectReason::WrongSelectionCount: return "wrong_selection_count";
    case RejectReason::UnknownCandidate: return "unknown_candidate";
  }
  return "?";
}

std::string_view to_string(SessionStatus s) { return s == SessionStatus::Open ? "open" : "closed"; }

// ---- session ----

const agents::VoterProfile* Session::voter(std::string_view voter_id) const {
  for (const auto& p : panel) {
    if (p.voter_id == voter_id) return &p;
  }
  return nullptr;
}

bool Session::has_voted(std::string_view voter_id) const {
  return std::any_of(ballots_.begin(), ballots_.end(), [&](const Ballot& b) { return b.voter_id == voter_id; });
}

std::size_t Session::count(agents::VoterKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(panel.begin(), panel.end(), [&](const agents::VoterProfile& p) { return p.kind == kind; }));
}

SubmitResult Session::validate(const Ballot& ballot) const {
  if (status != SessionStatus::Open) return SubmitResult::rejected(RejectReason::SessionClosed, "session is closed");
  if (!voter(ballot.voter_id)) {
    return SubmitResult::rejected(RejectReason::UnknownVoter, "voter '" + ballot.voter_id + "' is not on the panel");
  }
  if (has_voted(ballot.voter_id)) {
    return SubmitResult::rejected(RejectReason::DuplicateVoter, "voter '" + ballot.voter_id + "' already voted");
  }
  std::set<std::string_view> seen;
  for (const auto& s : ballot.selections) {
    if (!seen.insert(s).second) return SubmitResult::rejected(RejectReason::DuplicateSelection, "duplicate selection " + s);
  }
  const std::size_t n = ballot.selections.size();
  if (rule.kind == RuleKind::LimitedExact && n != rule.votes_per_voter) {
    return SubmitResult::rejected(RejectReason::WrongSelectionCount, "expected exactly " +
                                                                         std::to_string(rule.votes_per_voter) +
                                                                         " selections, got " + std::to_string(n));
  }
  if (rule.kind == RuleKind::ApprovalUnlimited && n < 1) {
    return SubmitResult::rejected(RejectReason::WrongSelectionCount, "approval ballot needs at least one selection");
  }
  for (const auto& s : ballot.selections) {
    if (!pool.find(s)) return SubmitResult::rejected(RejectReason::UnknownCandidate, "unknown candidate " + s);
  }
  return SubmitResult::ok();
}

SubmitResult Session::submit(Ballot ballot) {
  SubmitResult r = validate(ballot);
  if (r.accepted) ballots_.push_back(std::move(ballot));
  return r;
}

json Session::to_json() const {
  json panel_json = json::array();
  for (const auto& p : panel) panel_json.push_back(p.to_json());
  return {{"format", "trendscope-session/1"},
          {"session_id", session_id},
          {"category", std::string(trendscope::to_string(category))},
          {"domain", std::string(trendscope::to_string(domain))},
          {"stage", std::string(trendscope::to_string(stage))},
          {"status", std::string(to_string(status))},
          {"seed", seed},
          {"rule", rule.to_json()},
          {"presentation_order", presentation_order},
          {"panel", panel_json},
          {"pool", propose::to_json(pool)}};
}

Session Session::from_json(const json& j) {
  if (j.value("format", "") != "trendscope-session/1") throw IoError("session: unsupported format tag");
  Session s;
  s.session_id = j.at("session_id").get<std::string>();
  auto cat = parse_category(j.at("category").get<std::string>());
  auto dom = parse_domain(j.at("domain").get<std::string>());
  auto st = parse_stage(j.at("stage").get<std::string>());
  if (!cat || !dom || !st) throw IoError("session: bad category/domain/stage");
  s.category = *cat;
  s.domain = *dom;
  s.stage = *st;
  s.status = j.at("status").get<std::string>() == "closed" ? SessionStatus::Closed : SessionStatus::Open;
  s.seed = j.value("seed", std::uint64_t{0});
  s.rule = VotingRule::from_json(j.at("rule"));
  s.presentation_order = j.at("presentation_order").get<std::vector<std::string>>();
  for (const auto& p : j.at("panel")) s.panel.push_back(agents::VoterProfile::from_json(p));
  s.pool = propose::pool_from_json(j.at("pool"));
  return s;
}

std::string_view expected_pool_tag(Stage stage) {
  return propose::to_string(stage == Stage::Screening ? propose::StageTag::Pool100 : propose::StageTag::Short30);
}

Session create_session(Category category, Domain domain, Stage stage, propose::CandidatePool pool,
                       std::vector<agents::VoterProfile> panel, VotingRule rule, const CreateOptions& options) {
  const auto want = stage == Stage::Screening ? propose::StageTag::Pool100 : propose::StageTag::Short30;
  if (pool.stage_tag != want) {
    throw ContractViolation("create_session: " + std::string(trendscope::to_string(stage)) + " expects a " +
                            std::string(propose::to_string(want)) + " pool, got " +
                            std::string(propose::to_string(pool.stage_tag)));
  }
  if (pool.candidates.empty()) throw ContractViolation("create_session: empty candidate pool");
  rule.validate();
  std::set<std::string> ids;
  for (const auto& c : pool.candidates) {
    if (!ids.insert(c.candidate_id).second) throw ContractViolation("create_session: duplicate candidate " + c.candidate_id);
  }
  std::set<std::string> voters;
  for (const auto& p : panel) {
    if (p.voter_id.empty()) throw ContractViolation("create_session: voter with empty id");
    if (!voters.insert(p.voter_id).second) throw ContractViolation("create_session: duplicate voter " + p.voter_id);
  }

  Session s;
  s.category = category;
  s.domain = domain;
  s.stage = stage;
  s.panel = std::move(panel);
  s.rule = rule;
  s.seed = options.seed;
  if (!options.allow_panel_override) {
    const auto spec = agents::PanelSpec::defaults(stage);
    const auto humans = s.count(agents::VoterKind::Human), ais = s.count(agents::VoterKind::Ai);
    if (humans != spec.human_count || ais != spec.ai_count) {
      throw ContractViolation("create_session: panel has " + std::to_string(humans) + " human / " +
                              std::to_string(ais) + " ai voters, stage default is " +
                              std::to_string(spec.human_count) + " / " + std::to_string(spec.ai_count));
    }
  }
  s.session_id = options.session_id;
  if (s.session_id.empty()) {
    std::string key = std::to_string(options.seed);
    for (const auto& c : pool.candidates) key += "\n" + c.candidate_id;
    s.session_id = std::string(trendscope::to_string(category)) + "-" +
                   ascii_lower(trendscope::to_string(domain)) + "-" + std::string(trendscope::to_string(stage)) +
                   "-" + sha256_hex(key).substr(0, 8);
  }
  for (const auto& c : pool.candidates) s.presentation_order.push_back(c.candidate_id);
  Rng rng(derive_seed(options.seed, "presentation/" + s.session_id));
  rng.shuffle(s.presentation_order);
  s.pool = std::move(pool);
  return s;
}

// ---- tally ----

const TallyRow* Tally::find(std::string_view candidate_id) const {
  for (const auto& r : rows) {
    if (r.candidate_id == candidate_id) return &r;
  }
  return nullptr;
}

json Tally::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"candidate_id", r.candidate_id},
                         {"raw_human", r.raw_human},
                         {"raw_ai", r.raw_ai},
                         {"weighted", r.weighted},
                         {"final_rank", r.final_rank},
                         {"advanced", r.advanced},
                         {"inducted", r.inducted}});
  }
  return {{"session_id", session_id},
          {"category", std::string(trendscope::to_string(category))},
          {"domain", std::string(trendscope::to_string(domain))},
          {"stage", std::string(trendscope::to_string(stage))},
          {"rule", rule.to_json()},
          {"candidate_order", candidate_order},
          {"rows", rows_json},
          {"turnout",
           {{"human_panel", turnout.human_panel},
            {"ai_panel", turnout.ai_panel},
            {"human_ballots", turnout.human_ballots},
            {"ai_ballots", turnout.ai_ballots}}},
          {"notes", notes}};
}

Tally Tally::from_json(const json& j) {
  Tally t;
  t.session_id = j.at("session_id").get<std::string>();
  auto cat = parse_category(j.at("category").get<std::string>());
  auto dom = parse_domain(j.at("domain").get<std::string>());
  auto st = parse_stage(j.at("stage").get<std::string>());
  if (!cat || !dom || !st) throw IoError("tally: bad category/domain/stage");
  t.category = *cat;
  t.domain = *dom;
  t.stage = *st;
  t.rule = VotingRule::from_json(j.at("rule"));
  t.candidate_order = j.at("candidate_order").get<std::vector<std::string>>();
  for (const auto& r : j.at("rows")) {
    TallyRow row;
    row.candidate_id = r.at("candidate_id").get<std::string>();
    row.raw_human = r.at("raw_human").get<std::size_t>();
    row.raw_ai = r.at("raw_ai").get<std::size_t>();
    row.weighted = r.at("weighted").get<double>();
    row.final_rank = r.at("final_rank").get<std::size_t>();
    row.advanced = r.at("advanced").get<bool>();
    row.inducted = r.at("inducted").get<bool>();
    t.rows.push_back(std::move(row));
  }
  const auto& to = j.at("turnout");
  t.turnout = {to.at("human_panel").get<std::size_t>(), to.at("ai_panel").get<std::size_t>(),
               to.at("human_ballots").get<std::size_t>(), to.at("ai_ballots").get<std::size_t>()};
  t.notes = j.value("notes", std::vector<std::string>{});
  return t;
}

void Tally::write_csv(std::ostream& out) const {
  write_csv_row(out, {"candidate_id", "raw_human", "raw_ai", "weighted", "final_rank", "advanced", "inducted"});
  for (const auto& r : rows) {
    write_csv_row(out, {r.candidate_id, std::to_string(r.raw_human), std::to_string(r.raw_ai),
                        format_double(r.weighted), std::to_string(r.final_rank), r.advanced ? "true" : "false",
                        r.inducted ? "true" : "false"});
  }
}

namespace {

// Relative comparison so that rescaled weights produce the same ties.
bool same_score(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

Tally tally(const Session& session) {
  if (session.status != SessionStatus::Closed) throw ContractViolation("tally: session " + session.session_id + " is still open");
  if (session.ballots().empty()) throw EmptyTallyError("tally: session " + session.session_id + " has no ballots");

  Tally t;
  t.session_id = session.session_id;
  t.category = session.category;
  t.domain = session.domain;
  t.stage = session.stage;
  t.rule = session.rule;
  t.candidate_order = session.presentation_order;
  t.turnout.human_panel = session.count(agents::VoterKind::Human);
  t.turnout.ai_panel = session.count(agents::VoterKind::Ai);

  std::map<std::string, TallyRow> rows;
  for (const auto& id : session.presentation_order) rows[id].candidate_id = id;
  for (const auto& b : session.ballots()) {
    const auto* v = session.voter(b.voter_id);
    const bool human = v->kind == agents::VoterKind::Human;
    ++(human ? t.turnout.human_ballots : t.turnout.ai_ballots);
    for (const auto& s : b.selections) ++(human ? rows[s].raw_human : rows[s].raw_ai);
  }
  for (auto& [id, r] : rows) {
    r.weighted = session.rule.weight_human * static_cast<double>(r.raw_human) +
                 session.rule.weight_ai * static_cast<double>(r.raw_ai);
    t.rows.push_back(r);
  }
  std::sort(t.rows.begin(), t.rows.end(), [](const TallyRow& a, const TallyRow& b) {
    if (!same_score(a.weighted, b.weighted)) return a.weighted > b.weighted;
    if (a.raw_human != b.raw_human) return a.raw_human > b.raw_human;
    return a.candidate_id < b.candidate_id;
  });
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    auto& r = t.rows[i];
    r.final_rank = i + 1;
    r.advanced = r.final_rank <= session.rule.advance_count;
    r.inducted = r.final_rank <= session.rule.induct_count;
  }
  auto note_boundary = [&](std::size_t k, const char* what) {
    if (k == 0 || k >= t.rows.size()) return;
    const auto& a = t.rows[k - 1];
    const auto& b = t.rows[k];
    if (same_score(a.weighted, b.weighted)) {
      t.notes.push_back(std::string("boundary tie at ") + what + " rank " + std::to_string(k) + ": " +
                        a.candidate_id + " over " + b.candidate_id + " by " +
                        (a.raw_human != b.raw_human ? "raw_human" : "candidate_id"));
    }
  };
  note_boundary(session.rule.advance_count, "advance");
  note_boundary(session.rule.induct_count, "induct");
  return t;
}

AdvanceResult advance(const Session& session, const Tally& tally) {
  if (tally.session_id != session.session_id) throw ContractViolation("advance: tally belongs to another session");
  auto make = [&](propose::StageTag tag, bool inducted_only) {
    propose::CandidatePool pool;
    pool.category = session.category;
    pool.domain = session.domain;
    pool.stage_tag = tag;
    pool.source_session = session.session_id;
    for (const auto& r : tally.rows) {
      if (inducted_only ? r.inducted : r.advanced) pool.candidates.push_back(*session.pool.find(r.candidate_id));
    }
    pool.undersized = pool.candidates.size() < propose::nominal_size(tag);
    pool.notes = tally.notes;
    return pool;
  };
  AdvanceResult out;
  if (session.stage == Stage::Screening) {
    out.next = make(propose::StageTag::Short30, false);
  } else {
    out.next = make(propose::StageTag::Final10, false);
    out.inducted = make(propose::StageTag::Inducted2, true);
  }
  return out;
}

// ---- AI ballots ----

std::string build_ballot_prompt(const agents::PromptLibrary& prompts, const Session& session,
                                const agents::VoterProfile& voter, const std::string& retry_note) {
  std::string listing;
  for (const auto& id : session.presentation_order) {
    listing += "[" + id + "] " + session.pool.find(id)->text + "\n";
  }
  const bool limited = session.rule.kind == RuleKind::LimitedExact;
  return prompts.get("cast_ballot")
      .render({{"stage", std::string(trendscope::to_string(session.stage))},
               {"rule_kind", std::string(to_string(session.rule.kind))},
               {"votes", limited ? std::to_string(session.rule.votes_per_voter) : std::string("any")},
               {"voter_id", voter.voter_id},
               {"role", voter.role},
               {"specialization", voter.specialization},
               {"background", voter.background},
               {"level", std::string(agents::to_string(voter.level))},
               {"category", std::string(trendscope::to_string(session.category))},
               {"domain", std::string(display_name(session.domain))},
               {"rule_text", session.rule.rule_text()},
               {"retry_note", retry_note},
               {"candidates", listing}});
}

AiCollection collect_ai_ballots(const Session& session, const SubmitFn& submit, const agents::AgentClient& client,
                                const agents::PromptLibrary& prompts,
                                const std::vector<agents::AgentEndpoint>& endpoints,
                                const std::function<std::int64_t()>& clock) {
  AiCollection out;
  std::size_t ai_index = 0;
  for (const auto& voter : session.panel) {
    if (voter.kind != agents::VoterKind::Ai) continue;
    const std::size_t slot = ai_index++;
    if (endpoints.empty()) throw ContractViolation("collect_ai_ballots: no endpoints for AI voters");
    if (session.has_voted(voter.voter_id)) {
      out.log.push_back(voter.voter_id + ": already voted, skipped");
      continue;
    }
    const auto& ep = endpoints[slot % endpoints.size()];
    std::string retry_note;
    bool done = false;
    for (int attempt = 1; attempt <= agents::kMaxAttempts && !done; ++attempt) {
      ++out.calls;
      const std::string reply = client.complete(ep, build_ballot_prompt(prompts, session, voter, retry_note));
      std::string problem;
      if (auto sel = propose::parse_selections(reply)) {
        Ballot b{voter.voter_id, std::move(*sel), clock ? clock() : 0};
        SubmitResult r = session.validate(b);
        if (r.accepted) r = submit(b);
        if (r.accepted) {
          ++out.accepted;
          done = true;
          break;
        }
        problem = std::string(to_string(*r.reason)) + ": " + r.detail;
        if (*r.reason == RejectReason::SessionClosed || *r.reason == RejectReason::UnknownVoter ||
            *r.reason == RejectReason::DuplicateVoter) {
          out.log.push_back(voter.voter_id + ": " + problem);
          break;
        }
      } else {
        problem = "reply is not a JSON selection list";
      }
      out.log.push_back(voter.voter_id + " attempt " + std::to_string(attempt) + " invalid (" + problem + ")");
      retry_note = "ATTEMPT: " + std::to_string(attempt + 1) + "\nYour previous ballot was rejected: " + problem + "\n";
    }
    if (!done) {
      out.abstentions.push_back(voter.voter_id);
      out.log.push_back(voter.voter_id + ": abstains");
    }
  }
  return out;
}

AiCollection collect_ai_ballots(Session& session, const agents::AgentClient& client,
                                const agents::PromptLibrary& prompts,
                                const std::vector<agents::AgentEndpoint>& endpoints) {
  return collect_ai_ballots(
      session, [&](const Ballot& b) { return session.submit(b); }, client, prompts, endpoints);
}

// ---- store ----

std::int64_t unix_millis_now() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

SessionStore::SessionStore(fs::path dir) : dir_(std::move(dir)), clock_(unix_millis_now) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError("session store: cannot create " + dir_.string() + ": " + ec.message());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(dir_)) {
    if (e.is_directory() && fs::exists(e.path() / "session.json")) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    auto entry = std::make_unique<Entry>();
    entry->session = load_session(d);
    const std::string id = entry->session.session_id;
    entries_.emplace(id, std::move(entry));
  }
}

Session SessionStore::load_session(const fs::path& session_dir) {
  json meta = json::parse(read_file((session_dir / "session.json").string()), nullptr, false);
  if (meta.is_discarded()) throw IoError("session store: malformed " + (session_dir / "session.json").string());
  Session s = Session::from_json(meta);
  const SessionStatus status = s.status;
  s.status = SessionStatus::Open;
  std::ifstream log(session_dir / "ballots.jsonl");
  std::string line;
  std::size_t n = 0;
  while (std::getline(log, line)) {
    ++n;
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw IoError("session store: malformed ballot log line " + std::to_string(n));
    auto r = s.submit(Ballot::from_json(j));
    if (!r.accepted) throw IoError("session store: ballot log line " + std::to_string(n) + " no longer valid: " + r.detail);
  }
  s.status = status;
  return s;
}

void SessionStore::persist_meta(const Session& s) const {
  const fs::path d = dir_ / s.session_id;
  fs::create_directories(d);
  const fs::path tmp = d / "session.json.tmp";
  write_file(tmp.string(), s.to_json().dump(2) + "\n");
  fs::rename(tmp, d / "session.json");
}

Session SessionStore::create(Category category, Domain domain, Stage stage, propose::CandidatePool pool,
                             std::vector<agents::VoterProfile> panel, VotingRule rule, const CreateOptions& options) {
  Session s = create_session(category, domain, stage, std::move(pool), std::move(panel), rule, options);
  std::unique_lock lock(map_mu_);
  if (entries_.count(s.session_id)) throw ContractViolation("session store: session " + s.session_id + " already exists");
  persist_meta(s);
  { std::ofstream touch(dir_ / s.session_id / "ballots.jsonl", std::ios::app); }
  auto entry = std::make_unique<Entry>();
  entry->session = s;
  entries_.emplace(s.session_id, std::move(entry));
  return s;
}

SessionStore::Entry& SessionStore::entry(std::string_view session_id) const {
  std::shared_lock lock(map_mu_);
  auto it = entries_.find(session_id);
  if (it == entries_.end()) throw NotFoundError("unknown session " + std::string(session_id));
  return *it->second;
}

Session SessionStore::get(std::string_view session_id) const {
  Entry& e = entry(session_id);
  std::lock_guard lock(e.mu);
  return e.session;
}

bool SessionStore::contains(std::string_view session_id) const {
  std::shared_lock lock(map_mu_);
  return entries_.find(session_id) != entries_.end();
}

std::vector<std::string> SessionStore::list() const {
  std::shared_lock lock(map_mu_);
  std::vector<std::string> out;
  for (const auto& [id, e] : entries_) out.push_back(id);
  return out;
}

SubmitResult SessionStore::submit(std::string_view session_id, Ballot ballot) {
  Entry& e = entry(session_id);
  std::lock_guard lock(e.mu);
  ballot.submitted_at = clock_();
  SubmitResult r = e.session.validate(ballot);
  if (!r.accepted) return r;
  std::ofstream log(dir_ / e.session.session_id / "ballots.jsonl", std::ios::app);
  log << ballot.to_json().dump() << '\n';
  log.flush();
  if (!log) throw IoError("session store: cannot append ballot for " + e.session.session_id);
  return e.session.submit(std::move(ballot));
}

void SessionStore::close(std::string_view session_id) {
  Entry& e = entry(session_id);
  std::lock_guard lock(e.mu);
  if (e.session.status == SessionStatus::Closed) return;
  e.session.close();
  persist_meta(e.session);
}

Tally SessionStore::tally(std::string_view session_id) const {
  Entry& e = entry(session_id);
  std::lock_guard lock(e.mu);
  return ballot::tally(e.session);
}

void SessionStore::set_clock(std::function<std::int64_t()> clock) {
  std::unique_lock lock(map_mu_);
  clock_ = std::move(clock);
}

}  // namespace trendscope::ballot
