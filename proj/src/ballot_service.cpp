#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "trendscope/ballot_service.hpp"

#include "trendscope/csv.hpp"
#include "trendscope/errors.hpp"
#include "trendscope/text.hpp"

#include <httplib.h>

#include <fstream>
#include <thread>

namespace trendscope::ballot {

using nlohmann::json;

Roster Roster::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("roster: cannot open " + path.string());
  return from_csv(in);
}

Roster Roster::from_csv(std::istream& in) {
  Roster r;
  auto rows = read_csv(in);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.empty() || (row.size() == 1 && trim(row[0]).empty())) continue;
    if (i == 0 && !row.empty() && row[0] == "token") continue;
    if (row.size() < 2) throw ConfigError("roster: line " + std::to_string(i + 1) + " needs token,voter_id[,role]");
    RosterEntry e{trim(row[0]), trim(row[1]), RosterRole::Voter};
    if (row.size() >= 3) {
      const std::string role = ascii_lower(trim(row[2]));
      if (role == "admin") e.role = RosterRole::Admin;
      else if (role != "voter" && !role.empty()) throw ConfigError("roster: unknown role '" + role + "'");
    }
    if (e.token.empty()) throw ConfigError("roster: empty token on line " + std::to_string(i + 1));
    r.add(std::move(e));
  }
  return r;
}

void Roster::add(RosterEntry entry) {
  const std::string token = entry.token;
  if (!entries_.emplace(token, std::move(entry)).second) throw ConfigError("roster: duplicate token");
}

std::optional<RosterEntry> Roster::find(const std::string& token) const {
  auto it = entries_.find(token);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void error(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, {{"error", message}});
}

json session_summary(const Session& s) {
  return {{"session_id", s.session_id},
          {"category", std::string(trendscope::to_string(s.category))},
          {"domain", std::string(trendscope::to_string(s.domain))},
          {"stage", std::string(trendscope::to_string(s.stage))},
          {"status", std::string(to_string(s.status))},
          {"rule", s.rule.to_json()},
          {"candidate_count", s.pool.size()},
          {"panel", {{"human", s.count(agents::VoterKind::Human)}, {"ai", s.count(agents::VoterKind::Ai)}}},
          {"ballots_received", s.ballots().size()}};
}

int status_for(RejectReason r) {
  switch (r) {
    case RejectReason::SessionClosed:
    case RejectReason::DuplicateVoter: return 409;
    case RejectReason::UnknownVoter: return 403;
    default: return 422;
  }
}

}  // namespace

struct BallotService::Impl {
  SessionStore& store;
  Roster roster;
  ServiceOptions options;
  httplib::Server server;
  std::thread thread;
  int port = -1;

  Impl(SessionStore& s, Roster r, ServiceOptions o) : store(s), roster(std::move(r)), options(std::move(o)) {}

  std::optional<RosterEntry> authenticate(const httplib::Request& req, httplib::Response& res) const {
    const std::string header = req.get_header_value("Authorization");
    const std::string prefix = "Bearer ";
    if (header.size() <= prefix.size() || header.compare(0, prefix.size(), prefix) != 0) {
      error(res, 401, "missing bearer token");
      return std::nullopt;
    }
    auto who = roster.find(trim(header.substr(prefix.size())));
    if (!who) {
      error(res, 401, "invalid token");
      return std::nullopt;
    }
    return who;
  }

  template <class F>
  void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const NotFoundError& e) {
      error(res, 404, e.what());
    } catch (const json::exception& e) {
      error(res, 400, std::string("bad request body: ") + e.what());
    } catch (const ContractViolation& e) {
      error(res, 422, e.what());
    } catch (const EmptyTallyError& e) {
      error(res, 422, e.what());
    } catch (const IoError& e) {
      error(res, 400, e.what());
    } catch (const std::exception& e) {
      error(res, 500, e.what());
    }
  }

  void routes() {
    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      auto who = authenticate(req, res);
      if (!who) return;
      if (who->role != RosterRole::Admin) return error(res, 403, "admin token required");
      guarded(res, [&] {
        json body = json::parse(req.body);
        auto cat = parse_category(body.at("category").get<std::string>());
        auto dom = parse_domain(body.at("domain").get<std::string>());
        auto st = parse_stage(body.at("stage").get<std::string>());
        if (!cat || !dom || !st) return error(res, 400, "bad category, domain or stage");
        auto pool = propose::pool_from_json(body.at("pool"));
        std::vector<agents::VoterProfile> panel;
        for (const auto& p : body.at("panel")) panel.push_back(agents::VoterProfile::from_json(p));
        VotingRule rule = body.contains("rule") ? VotingRule::from_json(body["rule"]) : VotingRule::for_stage(*st);
        CreateOptions opts;
        opts.seed = body.value("seed", std::uint64_t{0});
        opts.allow_panel_override = body.value("allow_panel_override", false);
        opts.session_id = body.value("session_id", "");
        if (!opts.session_id.empty() && store.contains(opts.session_id)) {
          return error(res, 409, "session " + opts.session_id + " already exists");
        }
        Session s = store.create(*cat, *dom, *st, std::move(pool), std::move(panel), rule, opts);
        reply(res, 201, session_summary(s));
      });
    });

    server.Get("/sessions/:id", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authenticate(req, res)) return;
      guarded(res, [&] { reply(res, 200, session_summary(store.get(req.path_params.at("id")))); });
    });

    server.Get("/sessions/:id/candidates", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authenticate(req, res)) return;
      guarded(res, [&] {
        Session s = store.get(req.path_params.at("id"));
        json list = json::array();
        for (const auto& id : s.presentation_order) {
          list.push_back({{"candidate_id", id}, {"text", s.pool.find(id)->text}});
        }
        reply(res, 200,
              {{"session_id", s.session_id},
               {"status", std::string(to_string(s.status))},
               {"rule", s.rule.to_json()},
               {"candidates", list}});
      });
    });

    server.Post("/sessions/:id/ballots", [this](const httplib::Request& req, httplib::Response& res) {
      auto who = authenticate(req, res);
      if (!who) return;
      guarded(res, [&] {
        json body = json::parse(req.body);
        Ballot b;
        b.voter_id = who->voter_id;
        b.selections = body.at("selections").get<std::vector<std::string>>();
        SubmitResult r = store.submit(req.path_params.at("id"), std::move(b));
        if (r.accepted) return reply(res, 200, {{"status", "accepted"}, {"voter_id", who->voter_id}});
        reply(res, status_for(*r.reason),
              {{"status", "rejected"}, {"reason", std::string(to_string(*r.reason))}, {"detail", r.detail}});
      });
    });

    server.Post("/sessions/:id/close", [this](const httplib::Request& req, httplib::Response& res) {
      auto who = authenticate(req, res);
      if (!who) return;
      if (who->role != RosterRole::Admin) return error(res, 403, "admin token required");
      guarded(res, [&] {
        store.close(req.path_params.at("id"));
        reply(res, 200, session_summary(store.get(req.path_params.at("id"))));
      });
    });

    server.Get("/sessions/:id/tally", [this](const httplib::Request& req, httplib::Response& res) {
      if (!authenticate(req, res)) return;
      guarded(res, [&] {
        const std::string id = req.path_params.at("id");
        if (store.get(id).status != SessionStatus::Closed) return error(res, 409, "tally is hidden until the session closes");
        reply(res, 200, store.tally(id).to_json());
      });
    });

    if (!options.static_dir.empty()) {
      if (!server.set_mount_point("/", options.static_dir.string())) {
        throw IoError("ballot service: cannot serve " + options.static_dir.string());
      }
    }
  }

  void bind() {
    if (options.port == 0) {
      port = server.bind_to_any_port(options.host);
    } else {
      port = server.bind_to_port(options.host, options.port) ? options.port : -1;
    }
    if (port < 0) throw IoError("ballot service: cannot bind " + options.host + ":" + std::to_string(options.port));
  }
};

BallotService::BallotService(SessionStore& store, Roster roster, ServiceOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(roster), std::move(options))) {
  impl_->routes();
}

BallotService::~BallotService() { stop(); }

int BallotService::start() {
  impl_->bind();
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void BallotService::run() {
  impl_->bind();
  impl_->server.listen_after_bind();
}

void BallotService::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int BallotService::port() const { return impl_->port; }

}  // namespace trendscope::ballot
