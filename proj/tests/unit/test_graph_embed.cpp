#include "trendscope/errors.hpp"
#include "trendscope/fixture.hpp"
#include "trendscope/graph_embed.hpp"
#include "trendscope/sgns.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace trendscope;
using namespace trendscope::graph;

namespace {

corpus::WorkRecord work(const std::string& id, const std::vector<std::string>& kws, int year = 2024) {
  corpus::WorkRecord w;
  w.work_id = id;
  w.year = year;
  w.domain = Domain::Physics;
  for (const auto& k : kws) w.keywords.push_back({k, std::nullopt});
  return w;
}

CoocGraph graph_from_edges(const std::vector<std::string>& nodes,
                           const std::vector<std::tuple<std::string, std::string, std::uint32_t>>& edges) {
  CoocGraph g;
  g.domain = Domain::Physics;
  g.year = 2024;
  g.nodes = nodes;
  std::sort(g.nodes.begin(), g.nodes.end());
  for (const auto& [a, b, w] : edges) {
    NodeId x = *g.id_of(a), y = *g.id_of(b);
    g.edges[{std::min(x, y), std::max(x, y)}] = w;
  }
  return g;
}

double cosine(const EmbeddingTable& t, const std::string& a, const std::string& b) {
  return 1.0 - testing::cosine_distance_oracle(t, *t.find(a), *t.find(b));
}

}  // namespace

TEST_CASE("co-occurrence edges count shared works") {
  const std::vector<corpus::WorkRecord> works = {work("w1", {"a", "b", "c"}), work("w2", {"a", "b"})};
  const auto g = build_cooccurrence_graph(works);
  CHECK(g.nodes == std::vector<std::string>{"a", "b", "c"});
  CHECK(g.edges.size() == 3);
  CHECK(g.weight(*g.id_of("a"), *g.id_of("b")) == 2);
  CHECK(g.weight(*g.id_of("a"), *g.id_of("c")) == 1);
  CHECK(g.weight(*g.id_of("c"), *g.id_of("b")) == 1);
}

TEST_CASE("single keyword work gives an isolated node") {
  const std::vector<corpus::WorkRecord> works = {work("w1", {"solo"})};
  const auto g = build_cooccurrence_graph(works);
  CHECK(g.nodes.size() == 1);
  CHECK(g.edges.empty());
  CHECK(g.non_isolated() == std::vector<bool>{false});
}

TEST_CASE("mixed slices and empty input are contract violations") {
  const std::vector<corpus::WorkRecord> mixed = {work("w1", {"a", "b"}, 2024), work("w2", {"a"}, 2025)};
  CHECK_THROWS_AS(build_cooccurrence_graph(mixed), ContractViolation);
  CHECK_THROWS_AS(build_cooccurrence_graph(std::span<const corpus::WorkRecord>{}), ContractViolation);
}

TEST_CASE("graph matches a brute-force pair counter on the fixture corpus") {
  testing::TempDir dir("graph-fixture");
  fixture::generate_fixture(dir.path());
  corpus::CorpusStore store;
  store.ingest_file(dir.path() / "works.ndjson", corpus::DomainMap::load_csv(dir.path() / "domain_map.csv"));
  for (auto d : {Domain::Physics, Domain::Economics}) {
    const auto works = store.slice(d, 2025);
    const auto g = build_cooccurrence_graph(works);
    std::map<std::pair<std::string, std::string>, std::uint32_t> oracle;
    for (const auto& w : works) {
      for (std::size_t i = 0; i < w.keywords.size(); ++i)
        for (std::size_t j = 0; j < w.keywords.size(); ++j) {
          const auto& a = w.keywords[i].name;
          const auto& b = w.keywords[j].name;
          if (a < b) ++oracle[{a, b}];
        }
    }
    CHECK(g.edges.size() == oracle.size());
    for (const auto& [pair, n] : oracle) CHECK(g.weight(*g.id_of(pair.first), *g.id_of(pair.second)) == n);
  }
}

TEST_CASE("graph serialization and merge") {
  const std::vector<corpus::WorkRecord> a = {work("w1", {"a", "b", "c"})};
  const std::vector<corpus::WorkRecord> b = {work("w2", {"b", "c", "d"})};
  const auto ga = build_cooccurrence_graph(a);
  const auto gb = build_cooccurrence_graph(b);
  const auto ab = merge_graphs(ga, gb);
  const auto ba = merge_graphs(gb, ga);
  CHECK(ab.serialize() == ba.serialize());
  CHECK(ab.weight(*ab.id_of("b"), *ab.id_of("c")) == 2);
  const auto round = CoocGraph::deserialize(ab.serialize());
  CHECK(round.nodes == ab.nodes);
  CHECK(round.edges == ab.edges);
}

TEST_CASE("walks on a two-node path alternate") {
  const auto g = graph_from_edges({"a", "b"}, {{"a", "b", 3}});
  TrainConfig cfg;
  cfg.walk_length = 9;
  cfg.num_walks = 4;
  for (const auto& w : generate_walks(g, cfg)) {
    CHECK(w.size() == 9);
    for (std::size_t i = 1; i < w.size(); ++i) CHECK(w[i] != w[i - 1]);
  }
}

TEST_CASE("walks are deterministic for a fixed seed") {
  const auto g = graph_from_edges({"a", "b", "c"}, {{"a", "b", 1}, {"b", "c", 1}, {"a", "c", 1}});
  TrainConfig cfg;
  cfg.rng_seed = 99;
  CHECK(generate_walks(g, cfg) == generate_walks(g, cfg));
  cfg.rng_seed = 100;
  auto other = generate_walks(g, cfg);
  cfg.rng_seed = 99;
  CHECK(other != generate_walks(g, cfg));
}

TEST_CASE("isolated nodes start no walks") {
  const auto g = graph_from_edges({"a", "b", "lonely"}, {{"a", "b", 1}});
  TrainConfig cfg;
  cfg.num_walks = 3;
  const auto walks = generate_walks(g, cfg);
  CHECK(walks.size() == 6);
  for (const auto& w : walks) CHECK(w.front() != *g.id_of("lonely"));
}

TEST_CASE("star graph leaf visits are uniform within 3 sigma") {
  const std::size_t leaves = 8;
  std::vector<std::string> nodes = {"center"};
  std::vector<std::tuple<std::string, std::string, std::uint32_t>> edges;
  for (std::size_t i = 0; i < leaves; ++i) {
    nodes.push_back("leaf" + std::to_string(i));
    edges.emplace_back("center", nodes.back(), 1);
  }
  const auto g = graph_from_edges(nodes, edges);
  WalkSampler sampler(g, 1.0, 1.0, false);
  Rng rng(2024);
  const NodeId c = *g.id_of("center");
  std::map<NodeId, std::size_t> visits;
  const std::size_t steps = 10000;
  for (std::size_t i = 0; i < steps; ++i) ++visits[sampler.first_step(c, rng)];
  const double p = 1.0 / leaves;
  const double expected = steps * p;
  const double sd = std::sqrt(steps * p * (1 - p));
  CHECK(visits.size() == leaves);
  for (const auto& [id, n] : visits) CHECK(std::abs(static_cast<double>(n) - expected) <= 3 * sd);
}

TEST_CASE("second-order bias follows p and q") {
  // step a -> b: returning to a weighs 1/p, d (adjacent to a) 1, c 1/q
  const auto g = graph_from_edges({"a", "b", "c", "d"}, {{"a", "b", 1}, {"b", "c", 1}, {"a", "d", 1}, {"b", "d", 1}});
  WalkSampler sampler(g, 0.5, 2.0, false);
  Rng rng(5);
  const NodeId a = *g.id_of("a"), b = *g.id_of("b"), cc = *g.id_of("c"), d = *g.id_of("d");
  std::map<NodeId, double> counts;
  const int n = 70000;
  for (int i = 0; i < n; ++i) counts[sampler.step(a, b, rng)] += 1.0;
  CHECK(counts[a] / n == doctest::Approx(2.0 / 3.5).epsilon(0.03));
  CHECK(counts[d] / n == doctest::Approx(1.0 / 3.5).epsilon(0.03));
  CHECK(counts[cc] / n == doctest::Approx(0.5 / 3.5).epsilon(0.05));
}

TEST_CASE("sgns gradient matches central finite differences") {
  Rng rng(11);
  const std::size_t dim = 6, negs = 3;
  for (int point = 0; point < 10; ++point) {
    std::vector<std::vector<double>> vecs(2 + negs);
    for (auto& v : vecs) v = testing::gaussian_vector(rng, dim);
    auto loss = [&](const std::vector<std::vector<double>>& v) {
      std::vector<std::span<const double>> n;
      for (std::size_t k = 0; k < negs; ++k) n.emplace_back(v[2 + k]);
      return sgns_loss<double>(v[0], v[1], n);
    };
    std::vector<std::vector<double>> grads(2 + negs, std::vector<double>(dim));
    std::vector<std::span<const double>> n;
    std::vector<std::span<double>> gn;
    for (std::size_t k = 0; k < negs; ++k) {
      n.emplace_back(vecs[2 + k]);
      gn.emplace_back(grads[2 + k]);
    }
    sgns_gradient<double>(vecs[0], vecs[1], n, grads[0], grads[1], gn);
    const double h = 1e-6;
    for (std::size_t v = 0; v < vecs.size(); ++v) {
      for (std::size_t i = 0; i < dim; ++i) {
        auto plus = vecs, minus = vecs;
        plus[v][i] += h;
        minus[v][i] -= h;
        const double fd = (loss(plus) - loss(minus)) / (2 * h);
        const double an = grads[v][i];
        CHECK(std::abs(fd - an) <= 1e-4 * std::max(1.0, std::max(std::abs(fd), std::abs(an))));
      }
    }
  }
}

TEST_CASE("neg_log_sigmoid is stable") {
  CHECK(neg_log_sigmoid(800.0) == doctest::Approx(0.0));
  CHECK(neg_log_sigmoid(-800.0) == doctest::Approx(800.0));
  CHECK(std::isfinite(neg_log_sigmoid(-800.0)));
}

TEST_CASE("two-node path trains attracting vectors") {
  const auto g = graph_from_edges({"a", "b"}, {{"a", "b", 1}});
  TrainConfig cfg;
  cfg.embedding_dim = 16;
  const auto walks = generate_walks(g, cfg);
  const auto t = train_skipgram(g, walks, cfg);
  CHECK(cosine(t, "a", "b") > 0.0);
}

TEST_CASE("training is bitwise deterministic and round trips") {
  const auto g = graph_from_edges({"a", "b", "c", "d"}, {{"a", "b", 2}, {"b", "c", 1}, {"c", "d", 1}});
  TrainConfig cfg;
  cfg.embedding_dim = 8;
  cfg.epochs = 3;
  const auto walks = generate_walks(g, cfg);
  const auto t1 = train_skipgram(g, walks, cfg);
  const auto t2 = train_skipgram(g, walks, cfg);
  CHECK(t1 == t2);
  CHECK(EmbeddingTable::deserialize(t1.serialize()) == t1);
  CHECK(t1.serialize() == t2.serialize());
}

TEST_CASE("degenerate training inputs are rejected") {
  const auto g = graph_from_edges({"a", "b"}, {{"a", "b", 1}});
  TrainConfig cfg;
  CHECK_THROWS_AS(train_skipgram(g, {}, cfg), ContractViolation);
  CHECK_THROWS_AS(train_skipgram(g, {{0}, {0}}, cfg), ContractViolation);
  TrainConfig bad;
  bad.embedding_dim = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.p = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("barbell cliques separate after training") {
  std::vector<std::string> nodes;
  std::vector<std::tuple<std::string, std::string, std::uint32_t>> edges;
  auto name = [](char side, int i) { return std::string(1, side) + std::to_string(i); };
  for (char side : {'l', 'r'}) {
    for (int i = 0; i < 10; ++i) {
      nodes.push_back(name(side, i));
      for (int j = 0; j < i; ++j) edges.emplace_back(name(side, i), name(side, j), 1);
    }
  }
  edges.emplace_back("l0", "r0", 1);
  const auto g = graph_from_edges(nodes, edges);
  TrainConfig cfg;
  const auto walks = generate_walks(g, cfg);
  const auto t = train_skipgram(g, walks, cfg);
  double within = 0, cross = 0;
  int nw = 0, nc = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      const double c = cosine(t, nodes[i], nodes[j]);
      if (nodes[i][0] == nodes[j][0]) within += c, ++nw;
      else cross += c, ++nc;
    }
  CHECK(within / nw - cross / nc >= 0.2);
}
