#pragma once

#include "trendscope/ballot.hpp"

#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace trendscope::ballot {

enum class RosterRole { Voter, Admin };

struct RosterEntry {
  std::string token;
  std::string voter_id;
  RosterRole role = RosterRole::Voter;
};

// Maps bearer tokens to identities. CSV columns: token,voter_id,role.
class Roster {
 public:
  static Roster load_csv(const std::filesystem::path& path);
  static Roster from_csv(std::istream& in);
  void add(RosterEntry entry);
  std::optional<RosterEntry> find(const std::string& token) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, RosterEntry> entries_;
};

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  std::filesystem::path static_dir;
};

// JSON HTTP API over a SessionStore:
//   POST /sessions                  admin
//   GET  /sessions/{id}
//   GET  /sessions/{id}/candidates
//   POST /sessions/{id}/ballots     voter
//   POST /sessions/{id}/close       admin
//   GET  /sessions/{id}/tally       closed sessions only
class BallotService {
 public:
  BallotService(SessionStore& store, Roster roster, ServiceOptions options = {});
  ~BallotService();
  BallotService(const BallotService&) = delete;
  BallotService& operator=(const BallotService&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  int start();
  // Binds and serves on the calling thread until stop().
  void run();
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace trendscope::ballot
