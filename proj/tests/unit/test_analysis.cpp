#include "trendscope/analysis.hpp"
#include "trendscope/errors.hpp"
#include "trendscope/rng.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace trendscope;
using namespace trendscope::analysis;

namespace {

// Natural-log divergence converted to bits, written independently of the library.
double js_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) d += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0) d += 0.5 * q[i] * std::log(q[i] / m);
  }
  return std::sqrt(std::max(0.0, d / std::log(2.0)));
}

std::vector<double> random_dist(Rng& rng, std::size_t n, bool sparse) {
  std::vector<double> v(n);
  double s = 0;
  for (auto& x : v) {
    x = (sparse && rng.below(3) == 0) ? 0.0 : rng.uniform();
    s += x;
  }
  if (s == 0) {
    v[0] = 1;
    s = 1;
  }
  for (auto& x : v) x /= s;
  return v;
}

double js(const std::vector<double>& p, const std::vector<double>& q) {
  return js_distance(std::span<const double>(p), std::span<const double>(q));
}

ballot::Session fixture_session(std::size_t humans, std::size_t ais) {
  ballot::CreateOptions o;
  o.seed = 2;
  o.allow_panel_override = true;
  return ballot::create_session(Category::Question, Domain::Chemistry, Stage::Screening,
                                testing::make_pool(5, propose::StageTag::Pool100), testing::make_panel(humans, ais),
                                ballot::VotingRule::screening(), o);
}

}  // namespace

TEST_CASE("identical distributions are at distance zero") {
  CHECK(js({0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("disjoint supports are at distance one") {
  CHECK(js({1, 0}, {0, 1}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(js({0.5, 0.5, 0, 0}, {0, 0, 0.25, 0.75}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("half-half against a point mass") {
  CHECK(js({0.5, 0.5}, {1, 0}) == doctest::Approx(0.55793).epsilon(1e-5));
  CHECK(js({0.5, 0.5}, {1, 0}) == doctest::Approx(js_oracle({0.5, 0.5}, {1, 0})).epsilon(1e-12));
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS_AS(js({0.5, 0.5}, {1.0}), ContractViolation);
  CHECK_THROWS_AS(js({}, {}), ContractViolation);
  CHECK_THROWS_AS(js({0.5, 0.6}, {0.5, 0.5}), ContractViolation);
  CHECK_THROWS_AS(js({1.5, -0.5}, {0.5, 0.5}), ContractViolation);
}

TEST_CASE("symmetry, bounds and agreement with the oracle") {
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(40);
    const auto p = random_dist(rng, n, t % 2 == 0), q = random_dist(rng, n, t % 3 == 0);
    const double a = js(p, q), b = js(q, p);
    CHECK(a == b);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    CHECK(a == doctest::Approx(js_oracle(p, q)).epsilon(1e-9));
  }
}

TEST_CASE("triangle inequality on random triples") {
  Rng rng(32);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng.below(20);
    const auto p = random_dist(rng, n, true), q = random_dist(rng, n, true), r = random_dist(rng, n, true);
    CHECK(js(p, r) <= js(p, q) + js(q, r) + 1e-12);
  }
}

TEST_CASE("distance is invariant under a shared permutation of candidates") {
  Rng rng(33);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng.below(30);
    const auto p = random_dist(rng, n, true), q = random_dist(rng, n, true);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    rng.shuffle(idx);
    std::vector<double> pp(n), qq(n);
    for (std::size_t i = 0; i < n; ++i) {
      pp[i] = p[idx[i]];
      qq[i] = q[idx[i]];
    }
    CHECK(js(pp, qq) == doctest::Approx(js(p, q)).epsilon(1e-12));
  }
}

TEST_CASE("ballot fixture with three shared approvals of four gives one half") {
  auto s = fixture_session(1, 1);
  std::vector<std::string> ids;
  for (const auto& c : s.pool.candidates) ids.push_back(c.candidate_id);
  REQUIRE(s.submit({"h0", {ids[0], ids[1], ids[2], ids[3]}, 0}).accepted);
  REQUIRE(s.submit({"a0", {ids[0], ids[1], ids[2], ids[4]}, 0}).accepted);
  s.close();
  const auto t = ballot::tally(s);
  const auto human = vote_distribution(t, agents::VoterKind::Human);
  const auto ai = vote_distribution(t, agents::VoterKind::Ai);
  CHECK(human.candidate_order == s.presentation_order);
  double sum = 0;
  for (double x : human.probabilities) sum += x;
  CHECK(sum == doctest::Approx(1.0));
  CHECK(js_distance(human, ai) == doctest::Approx(0.5).epsilon(1e-12));

  const auto rows = alignment_report({t});
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].js.has_value());
  CHECK(*rows[0].js == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rows[0].candidate_count == 5);
}

TEST_CASE("a phase where the agents abstained reports unavailable") {
  auto s = fixture_session(1, 1);
  REQUIRE(s.submit({"h0", {s.pool.candidates[0].candidate_id}, 0}).accepted);
  s.close();
  const auto t = ballot::tally(s);
  CHECK_THROWS_AS(vote_distribution(t, agents::VoterKind::Ai), UndefinedDistributionError);
  const auto rows = alignment_report({t});
  REQUIRE(rows.size() == 1);
  CHECK_FALSE(rows[0].js.has_value());
  std::stringstream csv;
  write_alignment_csv(csv, rows);
  CHECK(csv.str() == "category,phase,js_distance\nQuestion,Stage 1,unavailable\n");
  CHECK(alignment_json(rows)["rows"][0]["js_distance"] == "unavailable");
}

TEST_CASE("report orders rows by category then phase") {
  std::vector<ballot::Tally> tallies;
  for (auto cat : {Category::Question, Category::Breakthrough})
    for (auto st : {Stage::Refinement, Stage::Screening}) {
      ballot::Tally t;
      t.category = cat;
      t.stage = st;
      t.candidate_order = {"x", "y"};
      t.rows = {{"x", 1, 0, 1, 1, true, false}, {"y", 0, 1, 1, 2, true, false}};
      tallies.push_back(t);
    }
  const auto rows = alignment_report(tallies);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].category == Category::Breakthrough);
  CHECK(rows[0].stage == Stage::Screening);
  CHECK(rows[3].category == Category::Question);
  CHECK(rows[3].stage == Stage::Refinement);
  for (const auto& r : rows) CHECK(*r.js == doctest::Approx(1.0));
  std::stringstream csv;
  write_alignment_csv(csv, rows);
  std::string line;
  std::getline(csv, line);
  std::getline(csv, line);
  CHECK(line.rfind("Breakthrough,Stage 1,", 0) == 0);
}
