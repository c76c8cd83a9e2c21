#include "trendscope/config.hpp"
#include "trendscope/errors.hpp"

#include "test_support.hpp"

#include <doctest.h>

using namespace trendscope;

TEST_CASE("shipped default config loads and validates") {
  const auto c = load_config(testing::source_dir() / "config" / "default.toml");
  CHECK_NOTHROW(c.validate());
  CHECK(c.rng_seed == 20250101);
  CHECK(c.mock);
  CHECK(c.domains.size() == 5);
  CHECK(c.prev_year == 2024);
  CHECK(c.curr_year == 2025);
  CHECK(c.train.embedding_dim == 128);
  CHECK(c.train.walk_length == 20);
  CHECK(c.train.num_walks == 10);
  CHECK(c.train.window_size == 3);
  CHECK(c.train.num_negatives == 5);
  CHECK(c.hotness.sigma_perc_1 == 0.0005);
  CHECK(c.hotness.sample_size == 1000000);
  CHECK(c.selection.sigma_perc_2 == 0.0005);
  CHECK(c.selection.kw_hotness_threshold == 0.05);
  CHECK(c.selection.kw_breakthrough_threshold == 50);
  CHECK(c.selection.cluster_hotness_threshold == 5);
  CHECK(c.selection.kw_question_threshold == 5);
  CHECK(c.candidates_per_model == 100);
  CHECK(c.pool_size == 100);
  CHECK(c.screening_panel.human_count == 30);
  CHECK(c.screening_panel.ai_count == 70);
  CHECK(c.refinement_panel.human_count == 10);
  CHECK(c.refinement_panel.ai_count == 30);
  CHECK(c.refinement_rule.weight_human == 7.0);
  CHECK(c.endpoints_for(EndpointRole::Proposal).size() == 6);
  CHECK(c.endpoints_for(EndpointRole::Research).size() == 2);
  CHECK(c.resolve(c.output_dir).is_absolute());
}

TEST_CASE("empty document takes the built-in defaults") {
  const auto c = parse_config("", "/tmp");
  CHECK(c.rng_seed == 20250101);
  CHECK(c.endpoints.size() == PipelineConfig::default_endpoints().size());
  CHECK(c.screening_rule == ballot::VotingRule::screening());
}

TEST_CASE("unknown keys and wrong types are rejected") {
  CHECK_THROWS_AS(parse_config("bogus = 1\n", "/tmp"), ConfigError);
  CHECK_THROWS_AS(parse_config("[embedding]\ndimension = 64\n", "/tmp"), ConfigError);
  CHECK_THROWS_AS(parse_config("seed = \"x\"\n", "/tmp"), ConfigError);
  CHECK_THROWS_AS(parse_config("[embedding]\ndim = -3\n", "/tmp"), ConfigError);
  CHECK_THROWS_AS(parse_config("[corpus]\ndomains = [\"Astrology\"]\n", "/tmp"), ConfigError);
  CHECK_THROWS_AS(parse_config("not toml [[[", "/tmp"), ConfigError);
  CHECK_THROWS_AS(parse_config("[panels.screening]\nlevel = \"wizard\"\n", "/tmp"), ConfigError);
}

TEST_CASE("values override defaults") {
  const auto c = parse_config(R"(
seed = 7
[embedding]
dim = 16
p = 0.5
[voting.refinement]
weight_human = 3.0
[[endpoints]]
id = "solo"
role = "proposal"
)",
                              "/base");
  CHECK(c.rng_seed == 7);
  CHECK(c.train.embedding_dim == 16);
  CHECK(c.train.p == 0.5);
  CHECK(c.refinement_rule.weight_human == 3.0);
  REQUIRE(c.endpoints.size() == 1);
  CHECK(c.endpoints[0].endpoint.endpoint_id == "solo");
  CHECK(c.resolve("x/y") == std::filesystem::path("/base/x/y"));
}

TEST_CASE("validation catches broken invariants") {
  auto c = load_config(testing::source_dir() / "config" / "default.toml");
  auto bad = c;
  bad.domains.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.prev_year = bad.curr_year;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.corpus_input = "does/not/exist.ndjson";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.train.embedding_dim = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.endpoints = {bad.endpoints.front()};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.endpoints.push_back(bad.endpoints.front());
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("config hash is stable and sensitive") {
  const auto a = parse_config("seed = 1\n", "/tmp");
  const auto b = parse_config("seed = 1\n", "/tmp");
  const auto c = parse_config("seed = 2\n", "/tmp");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
  CHECK(a.hash().size() == 64);
}
