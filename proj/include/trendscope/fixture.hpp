#pragma once

#include "trendscope/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace trendscope::fixture {

struct FixtureOptions {
  std::size_t works = 1000;
  std::size_t keywords_per_domain = 40;
  std::uint64_t seed = 7;
  int prev_year = 2024;
  int curr_year = 2025;
  int first_year = 2015;
};

// Ground truth written next to the generated corpus.
struct FixtureManifest {
  std::size_t works = 0;
  std::map<std::string, std::size_t> per_domain;
  std::map<std::string, std::size_t> per_slice;  // "<Domain>/<year>"
  std::map<std::string, std::size_t> keywords_per_domain;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static FixtureManifest from_json(const nlohmann::json& j);
};

// Writes works.ndjson (OpenAlex shape), domain_map.csv and manifest.json.
FixtureManifest generate_fixture(const std::filesystem::path& dir, const FixtureOptions& options = {});

}  // namespace trendscope::fixture
