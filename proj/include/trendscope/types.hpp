#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace trendscope {

enum class Domain { ArtificialIntelligence, Physics, Chemistry, Biology, Economics };

inline constexpr std::array<Domain, 5> kAllDomains = {
    Domain::ArtificialIntelligence, Domain::Physics, Domain::Chemistry, Domain::Biology,
    Domain::Economics};

std::string_view to_string(Domain d);
std::string_view display_name(Domain d);
// Accepts enum spellings and display names, case and whitespace insensitive.
std::optional<Domain> parse_domain(std::string_view s);

enum class Category { Breakthrough, Question };
std::string_view to_string(Category c);
std::optional<Category> parse_category(std::string_view s);

enum class Stage { Screening, Refinement };
std::string_view to_string(Stage s);
std::optional<Stage> parse_stage(std::string_view s);

}  // namespace trendscope
