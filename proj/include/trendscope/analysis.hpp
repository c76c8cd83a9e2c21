#pragma once

#include "trendscope/agents.hpp"
#include "trendscope/ballot.hpp"
#include "trendscope/types.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace trendscope::analysis {

struct VoteDistribution {
  std::vector<std::string> candidate_order;
  std::vector<double> probabilities;
  agents::VoterKind kind = agents::VoterKind::Human;
};

// Raw votes of one voter kind normalized over the tally's candidate order.
// Throws UndefinedDistributionError when that kind cast no votes.
VoteDistribution vote_distribution(const ballot::Tally& tally, agents::VoterKind kind);

// Square root of the base-2 Jensen-Shannon divergence, in [0, 1].
// Throws ContractViolation on a length mismatch or an invalid distribution.
double js_distance(std::span<const double> p, std::span<const double> q);
double js_distance(const VoteDistribution& p, const VoteDistribution& q);

struct AlignmentRow {
  std::string session_id;
  Category category = Category::Breakthrough;
  Stage stage = Stage::Screening;
  Domain domain = Domain::ArtificialIntelligence;
  std::size_t candidate_count = 0;
  std::optional<double> js;  // empty when unavailable
  std::string note;
};

std::string category_label(Category c);  // "Breakthrough"
std::string phase_label(Stage s);        // "Stage 1"

// One row per tally, ordered by (category, stage).
std::vector<AlignmentRow> alignment_report(const std::vector<ballot::Tally>& tallies);

// category,phase,js_distance
void write_alignment_csv(std::ostream& out, const std::vector<AlignmentRow>& rows);
nlohmann::json alignment_json(const std::vector<AlignmentRow>& rows);

}  // namespace trendscope::analysis
