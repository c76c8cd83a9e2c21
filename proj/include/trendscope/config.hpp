#pragma once

#include "trendscope/agents.hpp"
#include "trendscope/ballot.hpp"
#include "trendscope/graph_embed.hpp"
#include "trendscope/hotness.hpp"
#include "trendscope/trends.hpp"
#include "trendscope/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace trendscope {

enum class EndpointRole { Proposal, Research, Consolidator, Chair, Voter };
std::string_view to_string(EndpointRole r);
std::optional<EndpointRole> parse_endpoint_role(std::string_view s);

struct RoledEndpoint {
  EndpointRole role = EndpointRole::Proposal;
  agents::AgentEndpoint endpoint;
};

struct PipelineConfig {
  // paths; relative ones resolve against base_dir
  std::filesystem::path base_dir;
  std::filesystem::path corpus_input;
  std::filesystem::path domain_map;
  std::filesystem::path prompts_dir;
  std::filesystem::path mock_dir;  // optional canned responses
  std::filesystem::path output_dir;
  std::filesystem::path roster;  // optional; generated when empty

  std::vector<Domain> domains{kAllDomains.begin(), kAllDomains.end()};
  int year_from = 2015;
  int year_to = 2025;
  int prev_year = 2024;
  int curr_year = 2025;
  double min_concept_score = 0.0;

  std::uint64_t rng_seed = 20250101;
  bool mock = true;
  std::string mock_timestamp = "2026-01-01T00:00:00Z";
  std::int64_t mock_epoch_ms = 1767225600000;

  graph::TrainConfig train;
  hotness::HotnessParams hotness;
  hotness::HotnessOptions hotness_options;
  trends::SelectionThresholds selection;

  std::size_t candidates_per_model = 100;
  std::size_t literature_limit = 5;
  std::size_t votes_per_model = 100;
  std::size_t pool_size = 100;
  // used when a domain yields no selected keywords
  std::size_t fallback_keywords = 5;

  agents::PanelSpec screening_panel = agents::PanelSpec::defaults(Stage::Screening);
  agents::PanelSpec refinement_panel = agents::PanelSpec::defaults(Stage::Refinement);
  ballot::VotingRule screening_rule = ballot::VotingRule::screening();
  ballot::VotingRule refinement_rule = ballot::VotingRule::refinement();

  std::string service_host = "127.0.0.1";
  int service_port = 8080;
  std::filesystem::path static_dir;

  std::vector<RoledEndpoint> endpoints;

  std::vector<agents::AgentEndpoint> endpoints_for(EndpointRole role) const;
  const agents::PanelSpec& panel_for(Stage s) const { return s == Stage::Screening ? screening_panel : refinement_panel; }
  const ballot::VotingRule& rule_for(Stage s) const { return s == Stage::Screening ? screening_rule : refinement_rule; }

  std::filesystem::path resolve(const std::filesystem::path& p) const;

  // Throws ConfigError on a broken invariant (paths, roster roles, thresholds).
  void validate() const;
  // Canonical form; the config hash is sha256 of its dump.
  nlohmann::json to_json() const;
  std::string hash() const;

  // The built-in roster: 6 proposal, 2 research, 1 consolidator, 1 chair, 1 voter endpoint.
  static std::vector<RoledEndpoint> default_endpoints();
};

// Reads a TOML file; relative paths resolve against the file's directory.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir);

}  // namespace trendscope
