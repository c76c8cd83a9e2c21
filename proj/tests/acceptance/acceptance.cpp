#include "trendscope/analysis.hpp"
#include "trendscope/ballot.hpp"
#include "trendscope/config.hpp"
#include "trendscope/errors.hpp"
#include "trendscope/fixture.hpp"
#include "trendscope/graph_embed.hpp"
#include "trendscope/hash.hpp"
#include "trendscope/hotness.hpp"
#include "trendscope/pipeline.hpp"
#include "trendscope/propose.hpp"
#include "trendscope/sgns.hpp"
#include "trendscope/simulator.hpp"
#include "trendscope/text.hpp"
#include "trendscope/trends.hpp"

#include "test_support.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace trendscope;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Check {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (!ok && first_failure_.empty()) first_failure_ = what;
    failures_ += !ok;
  }
  bool passed() const { return failures_ == 0; }
  std::string summary() const {
    if (passed()) return std::to_string(checks_) + " checks";
    return std::to_string(failures_) + "/" + std::to_string(checks_) + " checks failed, first: " + first_failure_;
  }

 private:
  std::size_t checks_ = 0, failures_ = 0;
  std::string first_failure_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string secs(double s) {
  std::ostringstream o;
  o.precision(3);
  o << std::fixed << s << " s";
  return o.str();
}

// ---- hotness ----

void hotness_oracle(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t sizes[] = {50, 80, 120, 160, 200};
  for (std::size_t f = 0; f < 5; ++f) {
    Rng rng(9000 + f);
    const auto t = testing::random_table(rng, sizes[f], 32);
    std::map<std::string, std::uint32_t> freq;
    std::vector<double> fv;
    for (const auto& k : t.keys) {
      const auto v = static_cast<std::uint32_t>(1 + rng.below(50));
      freq[k] = v;
      fv.push_back(v);
    }
    const double sigma = 0.2 + 0.3 * rng.uniform();
    const auto h = hotness::compute_hotness(t, freq, sigma);
    for (std::size_t k = 0; k < t.size(); ++k) {
      double expect = 0;
      for (std::size_t j = 0; j < t.size(); ++j) {
        if (j == k) continue;
        const double d = testing::cosine_distance_oracle(t, k, j);
        expect += fv[j] * std::exp(-d * d / (2 * sigma * sigma));
      }
      const double got = h.find(t.keys[k])->score;
      c.expect(std::abs(got - expect) <= 1e-9 * std::max(1.0, std::abs(expect)),
               "fixture " + std::to_string(f) + " keyword " + t.keys[k]);
    }
  }
  const double s = seconds_since(t0);
  c.expect(s < 5.0, "runtime " + secs(s) + " >= 5 s");
}

void bandwidth_exactness(Check& c) {
  Rng rng(4242);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = trial < 60 ? 1 + rng.below(20) : 21 + rng.below(2000);
    std::vector<double> sample(n);
    for (auto& x : sample) x = 0.05 * static_cast<double>(rng.below(12));
    std::sort(sample.begin(), sample.end());
    const std::uint64_t b = 1 + rng.below(1000);
    const std::uint64_t a = 1 + rng.below(b > 1 ? b - 1 : 1);
    if (a >= b) continue;
    const double q = static_cast<double>(a) / static_cast<double>(b);
    const std::uint64_t rank = std::max<std::uint64_t>(1, (a * n + b - 1) / b);
    const double expect = sample[rank - 1];
    c.expect(hotness::nearest_rank_quantile(sample, q) == expect,
             "n=" + std::to_string(n) + " q=" + std::to_string(a) + "/" + std::to_string(b));
  }
  std::vector<double> big(1'000'000);
  for (std::size_t i = 0; i < big.size(); ++i) big[i] = static_cast<double>(i + 1);
  c.expect(hotness::nearest_rank_quantile(big, 0.0005) == 500.0, "1e6 sample at 0.0005");
}

// ---- embedding ----

graph::CoocGraph graph_from_edges(const std::vector<std::string>& nodes,
                                  const std::vector<std::tuple<std::string, std::string, std::uint32_t>>& edges) {
  graph::CoocGraph g;
  g.nodes = nodes;
  std::sort(g.nodes.begin(), g.nodes.end());
  for (const auto& [a, b, w] : edges) {
    const auto x = *g.id_of(a), y = *g.id_of(b);
    g.edges[{std::min(x, y), std::max(x, y)}] = w;
  }
  return g;
}

void sgns_check(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1234);
  const std::size_t dim = 8, negs = 5;
  for (int point = 0; point < 10; ++point) {
    std::vector<std::vector<double>> v(2 + negs);
    for (auto& x : v) x = testing::gaussian_vector(rng, dim);
    auto loss = [&](const std::vector<std::vector<double>>& w) {
      std::vector<std::span<const double>> n;
      for (std::size_t k = 0; k < negs; ++k) n.emplace_back(w[2 + k]);
      return graph::sgns_loss<double>(w[0], w[1], n);
    };
    std::vector<std::vector<double>> g(2 + negs, std::vector<double>(dim));
    std::vector<std::span<const double>> n;
    std::vector<std::span<double>> gn;
    for (std::size_t k = 0; k < negs; ++k) {
      n.emplace_back(v[2 + k]);
      gn.emplace_back(g[2 + k]);
    }
    graph::sgns_gradient<double>(v[0], v[1], n, g[0], g[1], gn);
    const double h = 1e-6;
    for (std::size_t a = 0; a < v.size(); ++a)
      for (std::size_t i = 0; i < dim; ++i) {
        auto plus = v, minus = v;
        plus[a][i] += h;
        minus[a][i] -= h;
        const double fd = (loss(plus) - loss(minus)) / (2 * h);
        c.expect(std::abs(fd - g[a][i]) <= 1e-4 * std::max(1.0, std::max(std::abs(fd), std::abs(g[a][i]))),
                 "gradient point " + std::to_string(point));
      }
  }

  std::vector<std::string> nodes;
  std::vector<std::tuple<std::string, std::string, std::uint32_t>> edges;
  auto name = [](char side, int i) { return std::string(1, side) + std::to_string(i); };
  for (char side : {'l', 'r'})
    for (int i = 0; i < 10; ++i) {
      nodes.push_back(name(side, i));
      for (int j = 0; j < i; ++j) edges.emplace_back(name(side, i), name(side, j), 1);
    }
  edges.emplace_back("l0", "r0", 1);
  const auto graph = graph_from_edges(nodes, edges);
  graph::TrainConfig cfg;
  c.expect(cfg.epochs == 25, "default epochs");
  const auto table = graph::train_skipgram(graph, graph::generate_walks(graph, cfg), cfg);
  double within = 0, cross = 0;
  int nw = 0, nc = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      const double cs = 1.0 - testing::cosine_distance_oracle(table, *table.find(nodes[i]), *table.find(nodes[j]));
      if (nodes[i][0] == nodes[j][0]) within += cs, ++nw;
      else cross += cs, ++nc;
    }
  const double gap = within / nw - cross / nc;
  c.expect(gap >= 0.2, "barbell gap " + std::to_string(gap) + " < 0.2");
  const double s = seconds_since(t0);
  c.expect(s < 30.0, "runtime " + secs(s) + " >= 30 s");
}

// ---- trends ----

void clustering_properties(Check& c) {
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(7000 + trial);
    const std::size_t n = 30 + rng.below(80);
    const auto emb = testing::random_table(rng, n, 2 + rng.below(6));
    auto order = emb.keys;
    rng.shuffle(order);
    const auto hot = testing::table_from_order(order);
    trends::SelectionThresholds thr;
    thr.kw_hotness_threshold = 0.05 + 0.9 * rng.uniform();
    const double threshold = 0.05 + 0.9 * rng.uniform();
    const auto cs = trends::cluster_by_hotness_priority(hot, emb, thr, threshold);
    auto dist = [&](const std::string& a, const std::string& b) {
      return testing::cosine_distance_oracle(emb, *emb.find(a), *emb.find(b));
    };
    const std::string tag = "fixture " + std::to_string(trial);
    for (const auto& cl : cs.clusters) {
      c.expect(!cl.members.empty() && cl.members.front() == cl.seed, tag + " seed first");
      for (std::size_t i = 1; i < cl.members.size(); ++i) {
        c.expect(dist(cl.members[i], cl.seed) < threshold + 1e-12, tag + " member " + cl.members[i]);
      }
    }
    for (std::size_t i = 0; i < cs.clusters.size(); ++i)
      for (std::size_t j = 0; j < i; ++j) {
        c.expect(dist(cs.clusters[i].seed, cs.clusters[j].seed) >= threshold - 1e-12, tag + " seed separation");
      }
  }

  const double cb = 0.9, cx = 0.1;
  const std::vector<double> a = {1, 0, 0}, b = {cb, std::sqrt(1 - cb * cb), 0};
  const double cy = (0.1 - cb * cx) / b[1];
  const std::vector<double> cc = {cx, cy, std::sqrt(1 - cx * cx - cy * cy)};
  const auto emb = testing::make_table({"A", "B", "C"}, {a, b, cc});
  trends::SelectionThresholds all;
  all.kw_hotness_threshold = 0.99;
  const auto cs = trends::cluster_by_hotness_priority(testing::table_from_order({"A", "B", "C"}), emb, all, 0.2);
  c.expect(cs.clusters.size() == 2 && cs.clusters[0].members == std::vector<std::string>{"A", "B"} &&
               cs.clusters[1].members == std::vector<std::string>{"C"} && cs.unassigned.empty(),
           "hand trace");
}

void selection_rules(Check& c) {
  using trends::SelectionThresholds;
  SelectionThresholds thr;
  thr.kw_breakthrough_threshold = 50;
  const hotness::RankMap prev = {{"A", 3}, {"B", 60}, {"C", 10}}, curr = {{"A", 2}, {"B", 40}, {"C", 15}};
  c.expect(trends::select_breakthrough_keywords(prev, curr, thr) == std::set<std::string>{"A"}, "breakthrough {A}");
  c.expect(trends::select_breakthrough_keywords({{"A", 1}}, {{"B", 1}}, thr).empty(), "empty overlap");
  c.expect(trends::select_breakthrough_keywords({{"A", 5}}, {{"A", 5}}, thr).empty(), "unchanged rank");

  trends::ClusterSet one;
  one.clusters.push_back({"A", {"A", "B", "C"}});
  SelectionThresholds q2;
  q2.kw_question_threshold = 2;
  const auto s1 = trends::select_question_keywords(one, {{"A", 1}, {"B", 8}, {"C", 3}}, {{"A", 0}, {"B", 0}, {"C", 0}}, q2);
  c.expect(s1.question_keywords_1 == std::set<std::string>{"A", "C"}, "question set 1 {A,C}");
  c.expect(s1.question_keywords_2 == std::set<std::string>{"A", "B"}, "question set 2 name tie-break");
  trends::ClusterSet late;
  late.clusters.push_back({"x", {"x", "y"}});
  const auto s3 = trends::select_question_keywords(late, {{"x", 9}, {"y", 10}}, {}, SelectionThresholds{});
  c.expect(s3.question_keywords_1.empty() && s3.question_keywords_2.empty() && s3.no_eligible_clusters,
           "no eligible cluster");

  Rng rng(555);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 20 + rng.below(100);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back(testing::keyword_name(i));
    auto po = names, co = names;
    rng.shuffle(po);
    rng.shuffle(co);
    const auto rp = testing::table_from_order(po).ranks(), rc = testing::table_from_order(co).ranks();
    SelectionThresholds lo, hi;
    lo.kw_breakthrough_threshold = 1 + static_cast<int>(rng.below(n));
    hi.kw_breakthrough_threshold = lo.kw_breakthrough_threshold + static_cast<int>(rng.below(n));
    const auto A = trends::select_breakthrough_keywords(rp, rc, lo);
    const auto B = trends::select_breakthrough_keywords(rp, rc, hi);
    c.expect(std::includes(B.begin(), B.end(), A.begin(), A.end()), "monotonicity table " + std::to_string(trial));
  }
}

// ---- ensemble ----

void ensemble_conservation(Check& c) {
  const auto prompts = testing::repo_prompts();
  std::vector<agents::AgentEndpoint> eps;
  for (const char* id : {"us-a", "us-b", "us-c", "cn-a", "cn-b", "cn-c"}) eps.push_back(testing::mock_endpoint(id));
  for (std::size_t size : {600, 250, 100}) {
    const auto pool = testing::make_pool(size, propose::StageTag::Raw600, Category::Breakthrough, Domain::Physics,
                                         "pool" + std::to_string(size));
    std::string first_dump;
    for (int run = 0; run < 2; ++run) {
      agents::AgentClient client;
      client.set_mock_responder(sim::make_responder(77));
      const auto vote = propose::cross_model_vote(client, prompts, pool, eps, 100, 13);
      std::size_t total = 0;
      for (const auto& [id, n] : vote.counts) total += n;
      c.expect(total == vote.valid_ballots * 100, "conservation on pool " + std::to_string(size));
      c.expect(vote.valid_ballots == eps.size(), "all ballots valid on pool " + std::to_string(size));

      std::vector<std::pair<long, std::string>> order;
      for (const auto& [id, n] : vote.counts) order.emplace_back(-static_cast<long>(n), id);
      std::sort(order.begin(), order.end());
      const auto top = propose::select_top_pool(pool, vote.counts, 100);
      bool same = top.size() == 100;
      for (std::size_t i = 0; same && i < 100; ++i) same = top.candidates[i].candidate_id == order[i].second;
      c.expect(same, "top-100 equals full sort on pool " + std::to_string(size));

      const std::string dump = propose::to_json(vote).dump() + propose::to_json(top).dump();
      if (run == 0) first_dump = dump;
      else c.expect(dump == first_dump, "deterministic rerun on pool " + std::to_string(size));
    }
  }
}

// ---- voting ----

std::vector<std::string> pool_ids(const propose::CandidatePool& p) {
  std::vector<std::string> out;
  for (const auto& x : p.candidates) out.push_back(x.candidate_id);
  return out;
}

void voting_engine(Check& c) {
  ballot::CreateOptions o;
  o.allow_panel_override = true;
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(800 + trial);
    const bool limited = trial % 2 == 1;
    o.seed = trial;
    auto s = limited ? ballot::create_session(Category::Question, Domain::Biology, Stage::Refinement,
                                              testing::make_pool(30, propose::StageTag::Short30),
                                              testing::make_panel(10, 30), ballot::VotingRule::refinement(), o)
                     : ballot::create_session(Category::Question, Domain::Biology, Stage::Screening,
                                              testing::make_pool(100, propose::StageTag::Pool100),
                                              testing::make_panel(30, 70), ballot::VotingRule::screening(), o);
    const auto ids = pool_ids(s.pool);
    std::map<std::string, std::pair<std::size_t, std::size_t>> brute;
    for (const auto& v : s.panel) {
      if (rng.below(6) == 0) continue;
      auto pick = ids;
      rng.shuffle(pick);
      pick.resize(limited ? 10 : 1 + rng.below(ids.size()));
      if (!s.submit({v.voter_id, pick, 0}).accepted) c.expect(false, "scripted ballot rejected");
      for (const auto& id : pick) (v.kind == agents::VoterKind::Human ? brute[id].first : brute[id].second)++;
    }
    s.close();
    const auto t = ballot::tally(s);
    for (const auto& r : t.rows) {
      const auto e = brute[r.candidate_id];
      c.expect(r.raw_human == e.first && r.raw_ai == e.second, "recount set " + std::to_string(trial));
      if (limited) {
        c.expect(r.weighted == 7.0 * static_cast<double>(e.first) + 1.0 * static_cast<double>(e.second),
                 "7h+1a set " + std::to_string(trial));
      }
    }

    std::vector<std::string> reference;
    for (double scale : {1.0, 0.25, 10.0, 12345.0}) {
      auto rule = s.rule;
      rule.weight_human *= scale;
      rule.weight_ai *= scale;
      auto copy = ballot::create_session(s.category, s.domain, s.stage, s.pool, s.panel, rule, o);
      for (const auto& bl : s.ballots()) copy.submit(bl);
      copy.close();
      std::vector<std::string> order;
      for (const auto& r : ballot::tally(copy).rows) order.push_back(r.candidate_id);
      if (reference.empty()) reference = order;
      c.expect(order == reference, "scale invariance set " + std::to_string(trial));
    }
  }

  testing::TempDir dir("acceptance-replay");
  std::string id, dump, meta;
  {
    ballot::SessionStore store(dir.path());
    std::int64_t clock = 5;
    store.set_clock([&clock] { return clock++; });
    o.seed = 99;
    const auto s = store.create(Category::Breakthrough, Domain::Physics, Stage::Refinement,
                                testing::make_pool(30, propose::StageTag::Short30), testing::make_panel(10, 30),
                                ballot::VotingRule::refinement(), o);
    id = s.session_id;
    Rng rng(99);
    auto ids = pool_ids(s.pool);
    for (const auto& v : s.panel) {
      rng.shuffle(ids);
      store.submit(id, {v.voter_id, std::vector<std::string>(ids.begin(), ids.begin() + 10), 0});
    }
    store.close(id);
    dump = store.tally(id).to_json().dump();
    meta = store.get(id).to_json().dump();
  }
  ballot::SessionStore replay(dir.path());
  c.expect(replay.tally(id).to_json().dump() == dump, "replayed tally byte-identical");
  c.expect(replay.get(id).to_json().dump() == meta, "replayed session byte-identical");
  c.expect(replay.get(id).ballots().size() == 40, "replayed ballot count");
}

// ---- JS ----

double jsd(const std::vector<double>& p, const std::vector<double>& q) {
  return analysis::js_distance(std::span<const double>(p), std::span<const double>(q));
}

std::vector<double> random_dist(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  double s = 0;
  for (auto& x : v) s += (x = rng.below(4) == 0 ? 0.0 : rng.uniform());
  if (s == 0) v[0] = s = 1;
  for (auto& x : v) x /= s;
  return v;
}

void js_distance(Check& c) {
  c.expect(std::abs(jsd({0.1, 0.2, 0.7}, {0.1, 0.2, 0.7})) <= 1e-12, "identical");
  c.expect(std::abs(jsd({1, 0}, {0, 1}) - 1.0) <= 1e-12, "disjoint");
  c.expect(std::abs(jsd({0.5, 0.5}, {1, 0}) - 0.5579) <= 1e-3, "worked example");
  Rng rng(2718);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng.below(30);
    const auto p = random_dist(rng, n), q = random_dist(rng, n), r = random_dist(rng, n);
    c.expect(jsd(p, q) == jsd(q, p), "symmetry");
    c.expect(jsd(p, r) <= jsd(p, q) + jsd(q, r) + 1e-12, "triangle");
    c.expect(jsd(p, q) >= 0 && jsd(p, q) <= 1, "bounds");
  }
}

// ---- end to end ----

std::map<std::string, std::string> tree_hashes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel.rfind("manifests/", 0) == 0) continue;
    out[rel] = sha256_hex(read_file(e.path().string()));
  }
  return out;
}

void end_to_end(Check& c, std::string& detail) {
  testing::TempDir root("acceptance-e2e");
  const auto manifest = fixture::generate_fixture(root.path() / "data");
  std::size_t keywords = 0;
  for (const auto& [d, n] : manifest.keywords_per_domain) keywords += n;
  c.expect(manifest.works == 1000 && manifest.per_domain.size() == 5, "fixture has 1000 works in 5 domains");
  c.expect(keywords >= 150 && keywords <= 250, "fixture has about 200 keywords");

  double worst = 0;
  for (const char* out : {"run-a", "run-b"}) {
    auto cfg = load_config(testing::source_dir() / "config" / "default.toml");
    cfg.corpus_input = root.path() / "data" / "works.ndjson";
    cfg.domain_map = root.path() / "data" / "domain_map.csv";
    cfg.prompts_dir = testing::prompts_dir();
    cfg.output_dir = root.path() / out;
    cfg.mock = true;
    const auto t0 = std::chrono::steady_clock::now();
    pipeline::Pipeline p(cfg);
    p.set_log([](const std::string&) {});
    p.run_all();
    worst = std::max(worst, seconds_since(t0));
  }
  detail = "slowest run " + secs(worst);
  c.expect(worst < 60.0, "runtime " + secs(worst) + " >= 60 s");

  const auto ha = tree_hashes(root.path() / "run-a"), hb = tree_hashes(root.path() / "run-b");
  c.expect(ha == hb, "two runs byte-identical outside manifests");

  const fs::path out = root.path() / "run-a";
  auto size_of = [&](const std::string& rel) {
    std::ifstream in(out / rel);
    if (!in) return std::size_t(-1);
    return propose::read_pool_jsonl(in).size();
  };
  for (auto d : kAllDomains)
    for (auto cat : {Category::Breakthrough, Category::Question}) {
      const std::string tag = std::string(to_string(d)) + "/" + std::string(to_string(cat));
      c.expect(size_of(pipeline::pool_file("ensemble", d, cat, ".pool100.jsonl")) == 100, tag + " pool100");
      c.expect(size_of(pipeline::pool_file("vote/screening", d, cat, ".short30.jsonl")) == 30, tag + " short30");
      c.expect(size_of(pipeline::pool_file("vote/refinement", d, cat, ".final10.jsonl")) == 10, tag + " final10");
      c.expect(size_of(pipeline::pool_file("vote/refinement", d, cat, ".inducted2.jsonl")) == 2, tag + " inducted2");
    }
  for (auto d : kAllDomains) {
    std::ifstream in(out / "analysis" / (std::string(to_string(d)) + ".alignment.csv"));
    std::string line;
    std::getline(in, line);
    c.expect(line == "category,phase,js_distance", "alignment header");
    std::set<std::string> keys;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      ++rows;
      keys.insert(line.substr(0, line.rfind(',')));
    }
    c.expect(rows == 4 && keys == std::set<std::string>{"Breakthrough,Stage 1", "Breakthrough,Stage 2",
                                                        "Question,Stage 1", "Question,Stage 2"},
             std::string(to_string(d)) + " alignment rows");
  }
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void(Check&, std::string&)> run;
  };
  const std::vector<Criterion> criteria = {
      {"hotness-oracle", [](Check& c, std::string&) { hotness_oracle(c); }},
      {"bandwidth-exactness", [](Check& c, std::string&) { bandwidth_exactness(c); }},
      {"sgns-gradient-and-barbell", [](Check& c, std::string&) { sgns_check(c); }},
      {"clustering-properties", [](Check& c, std::string&) { clustering_properties(c); }},
      {"selection-rules", [](Check& c, std::string&) { selection_rules(c); }},
      {"ensemble-conservation", [](Check& c, std::string&) { ensemble_conservation(c); }},
      {"voting-engine", [](Check& c, std::string&) { voting_engine(c); }},
      {"js-distance", [](Check& c, std::string&) { js_distance(c); }},
      {"end-to-end-mock-pipeline", end_to_end},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    std::string detail;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(c, detail);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    const double s = seconds_since(t0);
    std::cout << (c.passed() ? "PASS " : "FAIL ") << cr.name << " [" << secs(s) << "] " << c.summary()
              << (detail.empty() ? "" : "; " + detail) << std::endl;
    failed += !c.passed();
  }
  std::cout << (failed ? "FAIL" : "PASS") << " acceptance: " << criteria.size() - failed << "/" << criteria.size()
            << " criteria" << std::endl;
  return failed ? 1 : 0;
}
