#pragma once

#include "trendscope/agents.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace trendscope::sim {

// Deterministic stand-in for every prompt family the pipeline issues. Reads
// the header lines of a rendered template (TASK, COUNT, KEYWORD, ...) and
// answers in the requested JSON shape. Returns nullopt for unknown tasks.
agents::MockResponder make_responder(std::uint64_t seed);

// Shared latent quality of a candidate in [0, 1).
double candidate_quality(std::string_view candidate_id);

// Approval picks every candidate scoring above 0.55 (at least one); a
// positive votes count picks exactly the top min(votes, n).
std::vector<std::string> simulate_selections(const std::vector<std::string>& candidate_ids, std::size_t votes,
                                             std::string_view judge, std::uint64_t seed);

// Unit interval value from a hash of the parts.
double unit_hash(std::string_view a, std::string_view b, std::uint64_t seed);

}  // namespace trendscope::sim
