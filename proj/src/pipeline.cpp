#include "trendscope/pipeline.hpp"

#include "trendscope/analysis.hpp"
#include "trendscope/ballot.hpp"
#include "trendscope/ballot_service.hpp"
#include "trendscope/corpus.hpp"
#include "trendscope/csv.hpp"
#include "trendscope/errors.hpp"
#include "trendscope/graph_embed.hpp"
#include "trendscope/hash.hpp"
#include "trendscope/hotness.hpp"
#include "trendscope/propose.hpp"
#include "trendscope/rng.hpp"
#include "trendscope/simulator.hpp"
#include "trendscope/text.hpp"
#include "trendscope/trends.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace trendscope::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"ingest",  "graph",    "embed",      "hotness",    "cluster",
                                                 "select",  "context",  "propose",    "ensemble",   "vote-serve",
                                                 "vote-tally", "analyze", "export"};
  return names;
}

bool is_phased(std::string_view stage) { return stage == "vote-serve" || stage == "vote-tally"; }

std::string manifest_name(std::string_view stage, std::optional<Stage> phase) {
  std::string n(stage);
  if (phase) n += "-" + std::string(to_string(*phase));
  return n;
}

std::string slice_file(std::string_view dir, Domain d, int year, std::string_view ext) {
  return std::string(dir) + "/" + std::string(to_string(d)) + "_" + std::to_string(year) + std::string(ext);
}

std::string pool_file(std::string_view dir, Domain d, Category c, std::string_view ext) {
  return std::string(dir) + "/" + std::string(to_string(d)) + "_" + std::string(to_string(c)) + std::string(ext);
}

json Manifest::to_json() const {
  return {{"format", "trendscope-manifest/1"},
          {"stage", stage},
          {"config_hash", config_hash},
          {"seed", seed},
          {"mock", mock},
          {"inputs", inputs},
          {"outputs", outputs},
          {"seconds", seconds},
          {"transport_calls", transport_calls},
          {"warnings", warnings}};
}

Manifest Manifest::from_json(const json& j) {
  Manifest m;
  m.stage = j.at("stage").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.value("seed", std::uint64_t{0});
  m.mock = j.value("mock", true);
  m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
  m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
  m.seconds = j.value("seconds", 0.0);
  m.transport_calls = j.value("transport_calls", std::size_t{0});
  m.warnings = j.value("warnings", std::vector<std::string>{});
  return m;
}

struct Pipeline::Work {
  fs::path out;
  std::vector<std::string> outputs;     // relative to out, hashed
  std::vector<std::string> state;       // relative to out, must exist to skip
  std::vector<std::string> warnings;

  fs::path path(const std::string& rel) const { return out / rel; }
  void write(const std::string& rel, std::string_view contents) {
    fs::create_directories((out / rel).parent_path());
    write_file((out / rel).string(), contents);
    outputs.push_back(rel);
  }
  void write_json(const std::string& rel, const json& j) { write(rel, j.dump(2) + "\n"); }
};

namespace {

std::string hash_path(const fs::path& p) {
  if (fs::is_directory(p)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(p)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::string acc;
    for (const auto& f : files) acc += fs::relative(f, p).generic_string() + "=" + sha256_file(f) + "\n";
    return sha256_hex(acc);
  }
  return sha256_file(p);
}

std::string dump_to_string(const std::function<void(std::ostream&)>& f) {
  std::ostringstream s;
  f(s);
  return s.str();
}

json cluster_json(const trends::ClusterSet& cs) {
  json clusters = json::array();
  for (const auto& c : cs.clusters) clusters.push_back({{"seed", c.seed}, {"members", c.members}});
  return {{"distance_threshold", cs.distance_threshold}, {"clusters", clusters}, {"unassigned", cs.unassigned}};
}

trends::ClusterSet cluster_from_json(const json& j) {
  trends::ClusterSet cs;
  cs.distance_threshold = j.at("distance_threshold").get<double>();
  for (const auto& c : j.at("clusters")) {
    cs.clusters.push_back({c.at("seed").get<std::string>(), c.at("members").get<std::vector<std::string>>()});
  }
  cs.unassigned = j.at("unassigned").get<std::vector<std::string>>();
  return cs;
}

json read_json(const fs::path& p) {
  json j = json::parse(read_file(p.string()), nullptr, false);
  if (j.is_discarded()) throw IoError("malformed JSON artifact: " + p.string());
  return j;
}

hotness::HotnessTable read_hotness(const fs::path& p, Domain d, int year) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  return hotness::HotnessTable::read_csv(in, d, year);
}

propose::CandidatePool read_pool(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  return propose::read_pool_jsonl(in);
}

std::string pool_text(const propose::CandidatePool& pool) {
  return dump_to_string([&](std::ostream& o) { propose::write_pool_jsonl(o, pool); });
}

std::vector<std::string> ordered_by_rank(const std::set<std::string>& keys, const hotness::RankMap& ranks) {
  std::vector<std::string> v(keys.begin(), keys.end());
  auto rank_of = [&](const std::string& k) {
    auto it = ranks.find(k);
    return it == ranks.end() ? INT32_MAX : it->second;
  };
  std::stable_sort(v.begin(), v.end(), [&](const std::string& a, const std::string& b) { return rank_of(a) < rank_of(b); });
  return v;
}

constexpr std::array<Category, 2> kCategories = {Category::Breakthrough, Category::Question};
constexpr std::array<Stage, 2> kPhases = {Stage::Screening, Stage::Refinement};

std::string random_token() {
  std::random_device rd;
  std::string t;
  static const char* hex = "0123456789abcdef";
  for (int i = 0; i < 32; ++i) t.push_back(hex[rd() % 16]);
  return t;
}

}  // namespace

// ---- pipeline ----

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
  if (config_.mock) {
    for (auto& e : config_.endpoints) e.endpoint.provider_kind = agents::ProviderKind::Mock;
  }
  config_.validate();
  out_ = config_.resolve(config_.output_dir);
  fs::create_directories(out_);
  client_ = std::make_unique<agents::AgentClient>(std::make_shared<agents::HttpTransport>());
  if (!config_.mock_dir.empty()) client_->set_mock_table(agents::MockTable::load_dir(config_.resolve(config_.mock_dir)));
  if (config_.mock) {
    client_->set_mock_responder(sim::make_responder(config_.rng_seed));
    const std::string ts = config_.mock_timestamp;
    client_->set_clock([ts] { return ts; });
  }
}

Pipeline::~Pipeline() = default;

const agents::AgentClient& Pipeline::client() const { return *client_; }

fs::path Pipeline::manifest_path(const std::string& name) const { return out_ / "manifests" / (name + ".json"); }

void Pipeline::log(const std::string& line) const {
  if (log_) log_(line);
}

std::string Pipeline::session_id(Domain d, Category c, Stage phase) const {
  return std::string(to_string(c)) + "-" + ascii_lower(to_string(d)) + "-" + std::string(to_string(phase));
}

std::vector<std::pair<fs::path, std::string>> Pipeline::deps_for(std::string_view stage,
                                                                std::optional<Stage> phase) const {
  std::vector<std::pair<fs::path, std::string>> deps;
  auto add = [&](const std::string& rel, const std::string& producer) { deps.emplace_back(out_ / rel, producer); };
  const std::vector<int> years = {config_.prev_year, config_.curr_year};
  const fs::path prompts = config_.resolve(config_.prompts_dir);
  auto prompt = [&](const std::string& file) { deps.emplace_back(prompts / file, "prompts"); };

  if (stage == "ingest") {
    deps.emplace_back(config_.resolve(config_.corpus_input), "fixture gen");
    deps.emplace_back(config_.resolve(config_.domain_map), "fixture gen");
  } else if (stage == "graph") {
    add("corpus/works.ndjson", "ingest");
    add("corpus/keyword_index.bin", "ingest");
  } else if (stage == "embed") {
    for (auto d : config_.domains)
      for (int y : years) add(slice_file("graph", d, y, ".graph"), "graph");
  } else if (stage == "hotness") {
    add("corpus/keyword_index.bin", "ingest");
    for (auto d : config_.domains)
      for (int y : years) add(slice_file("embed", d, y, ".emb"), "embed");
  } else if (stage == "cluster") {
    for (auto d : config_.domains) {
      add(slice_file("hotness", d, config_.curr_year, ".csv"), "hotness");
      add(slice_file("hotness", d, config_.curr_year, ".json"), "hotness");
      add(slice_file("embed", d, config_.curr_year, ".emb"), "embed");
    }
  } else if (stage == "select") {
    for (auto d : config_.domains) {
      for (int y : years) add(slice_file("hotness", d, y, ".csv"), "hotness");
      add("cluster/" + std::string(to_string(d)) + ".json", "cluster");
    }
  } else if (stage == "context") {
    prompt("deep_research_breakthrough.v1.txt");
    prompt("deep_research_question.v1.txt");
    prompt("consolidate_contexts.v1.txt");
  } else if (stage == "propose") {
    add("corpus/works.ndjson", "ingest");
    add("context/breakthrough_2025.json", "context");
    add("context/question_2026.json", "context");
    for (auto d : config_.domains) {
      add("select/" + std::string(to_string(d)) + ".csv", "select");
      add(slice_file("hotness", d, config_.curr_year, ".csv"), "hotness");
    }
    prompt("propose_breakthrough.v1.txt");
    prompt("propose_question.v1.txt");
  } else if (stage == "ensemble") {
    for (auto d : config_.domains)
      for (auto c : kCategories) add(pool_file("propose", d, c, ".raw.jsonl"), "propose");
    prompt("ensemble_vote.v1.txt");
  } else if (stage == "vote-serve") {
    for (auto d : config_.domains)
      for (auto c : kCategories) {
        if (*phase == Stage::Screening) add(pool_file("ensemble", d, c, ".pool100.jsonl"), "ensemble");
        else add(pool_file("vote/screening", d, c, ".short30.jsonl"), "vote tally --phase screening");
      }
    prompt("chair_panel.v1.txt");
    prompt("cast_ballot.v1.txt");
  } else if (stage == "vote-tally") {
    for (auto d : config_.domains)
      for (auto c : kCategories) {
        const std::string dir = "sessions/" + session_id(d, c, *phase);
        add(dir + "/session.json", "vote serve --phase " + std::string(to_string(*phase)));
        add(dir + "/ballots.jsonl", "vote serve --phase " + std::string(to_string(*phase)));
      }
  } else if (stage == "analyze") {
    for (auto d : config_.domains)
      for (auto c : kCategories)
        for (auto p : kPhases) {
          add(pool_file("vote/" + std::string(to_string(p)), d, c, ".tally.json"),
              "vote tally --phase " + std::string(to_string(p)));
        }
  } else if (stage == "export") {
    for (auto d : config_.domains)
      for (auto c : kCategories) {
        add(pool_file("vote/refinement", d, c, ".inducted2.jsonl"), "vote tally --phase refinement");
        add(pool_file("vote/refinement", d, c, ".tally.json"), "vote tally --phase refinement");
      }
  } else {
    throw ContractViolation("unknown stage '" + std::string(stage) + "'");
  }
  return deps;
}

StageOutcome Pipeline::execute(const std::string& name, const std::vector<std::pair<fs::path, std::string>>& deps,
                               const Body& body, bool force) {
  for (const auto& [p, producer] : deps) {
    if (!fs::exists(p)) {
      throw DependencyError("stage '" + name + "' needs " + p.string() + "; run '" + producer + "' first", producer);
    }
  }
  Manifest m;
  m.stage = name;
  m.config_hash = config_.hash();
  m.seed = config_.rng_seed;
  m.mock = config_.mock;
  for (const auto& [p, producer] : deps) {
    std::error_code ec;
    const fs::path rel = fs::relative(p, out_, ec);
    const std::string key = (!ec && !rel.empty() && *rel.begin() != "..") ? rel.generic_string() : p.generic_string();
    m.inputs[key] = hash_path(p);
  }

  StageOutcome outcome;
  outcome.stage = name;
  const fs::path mpath = manifest_path(name);
  if (!force && fs::exists(mpath)) {
    json j = json::parse(read_file(mpath.string()), nullptr, false);
    if (!j.is_discarded()) {
      Manifest prev = Manifest::from_json(j);
      bool fresh = prev.config_hash == m.config_hash && prev.inputs == m.inputs;
      for (const auto& [rel, h] : prev.outputs) {
        if (!fresh) break;
        fresh = fs::exists(out_ / rel) && hash_path(out_ / rel) == h;
      }
      for (const auto& rel : j.value("state", std::vector<std::string>{})) {
        fresh = fresh && fs::exists(out_ / rel);
      }
      if (fresh) {
        outcome.skipped = true;
        for (const auto& [rel, h] : prev.outputs) outcome.outputs.push_back(rel);
        log(name + ": up-to-date");
        return outcome;
      }
    }
  }

  Work w;
  w.out = out_;
  const std::size_t calls_before = client_->transport_calls();
  const auto t0 = std::chrono::steady_clock::now();
  body(w);
  outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  m.seconds = outcome.seconds;
  m.transport_calls = client_->transport_calls() - calls_before;
  m.warnings = w.warnings;
  for (const auto& rel : w.outputs) m.outputs[rel] = hash_path(out_ / rel);
  json mj = m.to_json();
  mj["state"] = w.state;
  fs::create_directories(mpath.parent_path());
  write_file(mpath.string(), mj.dump(2) + "\n");
  outcome.outputs = w.outputs;
  outcome.warnings = w.warnings;
  for (const auto& warn : w.warnings) log(name + ": warning: " + warn);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", outcome.seconds);
  log(name + ": done in " + buf + " s, " + std::to_string(w.outputs.size()) + " artifacts");
  return outcome;
}

StageOutcome Pipeline::run(std::string_view stage, std::optional<Stage> phase, bool force) {
  const auto& names = stage_names();
  if (std::find(names.begin(), names.end(), stage) == names.end()) {
    throw ContractViolation("unknown stage '" + std::string(stage) + "'");
  }
  if (is_phased(stage) && !phase) throw ContractViolation("stage '" + std::string(stage) + "' needs a phase");
  if (!is_phased(stage)) phase.reset();
  const std::string name = manifest_name(stage, phase);
  const auto deps = deps_for(stage, phase);
  Body body;
  if (stage == "ingest") body = [this](Work& w) { stage_ingest(w); };
  else if (stage == "graph") body = [this](Work& w) { stage_graph(w); };
  else if (stage == "embed") body = [this](Work& w) { stage_embed(w); };
  else if (stage == "hotness") body = [this](Work& w) { stage_hotness(w); };
  else if (stage == "cluster") body = [this](Work& w) { stage_cluster(w); };
  else if (stage == "select") body = [this](Work& w) { stage_select(w); };
  else if (stage == "context") body = [this](Work& w) { stage_context(w); };
  else if (stage == "propose") body = [this](Work& w) { stage_propose(w); };
  else if (stage == "ensemble") body = [this](Work& w) { stage_ensemble(w); };
  else if (stage == "vote-serve") body = [this, phase](Work& w) { stage_vote_serve(w, *phase); };
  else if (stage == "vote-tally") body = [this, phase](Work& w) { stage_vote_tally(w, *phase); };
  else if (stage == "analyze") body = [this](Work& w) { stage_analyze(w); };
  else if (stage == "export") body = [this](Work& w) { stage_export(w); };
  return execute(name, deps, body, force);
}

std::vector<StageOutcome> Pipeline::run_all(bool force) {
  std::vector<StageOutcome> out;
  for (const auto& s : stage_names()) {
    if (s == "vote-serve" || s == "vote-tally") continue;
    if (s == "analyze") {
      for (auto p : kPhases) {
        out.push_back(run("vote-serve", p, force));
        out.push_back(run("vote-tally", p, force));
      }
    }
    out.push_back(run(s, std::nullopt, force));
  }
  return out;
}

// ---- stages ----

void Pipeline::stage_ingest(Work& w) {
  const auto domains = corpus::DomainMap::load_csv(config_.resolve(config_.domain_map));
  corpus::CorpusStore store;
  corpus::IngestOptions opts;
  opts.min_concept_score = config_.min_concept_score;
  const auto report = store.ingest_file(config_.resolve(config_.corpus_input), domains, opts);
  store.save(out_ / "corpus");
  w.outputs.push_back("corpus/works.ndjson");
  w.outputs.push_back("corpus/keyword_index.bin");

  json per_slice = json::object();
  json per_domain = json::object();
  for (const auto& [key, n] : report.accepted_per_slice) {
    per_slice[std::string(to_string(key.first)) + "/" + std::to_string(key.second)] = n;
    const std::string d(to_string(key.first));
    per_domain[d] = per_domain.value(d, std::size_t{0}) + n;
  }
  json rejects = json::array();
  std::map<std::string, std::size_t> reasons;
  for (const auto& r : report.rejects) {
    rejects.push_back({{"line", r.line}, {"reason", r.reason}});
    ++reasons[r.reason];
  }
  w.write_json("corpus/ingest_report.json", {{"accepted", report.accepted},
                                             {"rejected", report.rejected},
                                             {"replaced", report.replaced},
                                             {"store_size", store.size()},
                                             {"per_domain", per_domain},
                                             {"per_slice", per_slice},
                                             {"reject_reasons", reasons},
                                             {"rejects", rejects}});
  if (report.rejected > 0) w.warnings.push_back(std::to_string(report.rejected) + " records rejected");
}

void Pipeline::stage_graph(Work& w) {
  const auto store = corpus::CorpusStore::load(out_ / "corpus");
  for (auto d : config_.domains) {
    for (int y : {config_.prev_year, config_.curr_year}) {
      const auto works = store.slice(d, y);
      if (works.empty()) throw EmptySliceError("graph: no works for " + std::string(to_string(d)) + " " + std::to_string(y));
      const auto g = graph::build_cooccurrence_graph(works);
      w.write(slice_file("graph", d, y, ".graph"), g.serialize());
    }
  }
}

void Pipeline::stage_embed(Work& w) {
  for (auto d : config_.domains) {
    for (int y : {config_.prev_year, config_.curr_year}) {
      const auto g = graph::CoocGraph::deserialize(read_file((out_ / slice_file("graph", d, y, ".graph")).string()));
      graph::TrainConfig cfg = config_.train;
      cfg.rng_seed = derive_seed(config_.rng_seed, "embed/" + std::string(to_string(d)) + "/" + std::to_string(y));
      const auto walks = graph::generate_walks(g, cfg);
      graph::TrainStats stats;
      const auto table = graph::train_skipgram(g, walks, cfg, &stats);
      w.write(slice_file("embed", d, y, ".emb"), table.serialize());
      w.write(slice_file("embed", d, y, ".csv"), dump_to_string([&](std::ostream& o) { table.write_csv(o); }));
      w.write_json(slice_file("embed", d, y, ".stats.json"), {{"walks", walks.size()},
                                                               {"pairs_per_epoch", stats.pairs_per_epoch},
                                                               {"epoch_mean_loss", stats.epoch_mean_loss},
                                                               {"vocabulary", table.size()},
                                                               {"nodes", g.nodes.size()}});
    }
  }
}

void Pipeline::stage_hotness(Work& w) {
  const auto store = corpus::CorpusStore::load(out_ / "corpus");
  for (auto d : config_.domains) {
    for (int y : {config_.prev_year, config_.curr_year}) {
      const auto table = graph::EmbeddingTable::deserialize(read_file((out_ / slice_file("embed", d, y, ".emb")).string()));
      hotness::HotnessParams params = config_.hotness;
      params.rng_seed = derive_seed(config_.rng_seed, "hotness/" + std::string(to_string(d)) + "/" + std::to_string(y));
      const auto sample = hotness::sample_pairwise_distances(table, params);
      const double sigma = hotness::bandwidth_from_percentile(sample, params.sigma_perc_1);
      const double threshold = hotness::nearest_rank_quantile(sample, config_.selection.sigma_perc_2);
      const auto& freq = store.keyword_frequencies(d, y);
      const auto hot = hotness::compute_hotness(table, freq, sigma, config_.hotness_options);
      w.write(slice_file("hotness", d, y, ".csv"), dump_to_string([&](std::ostream& o) { hot.write_csv(o); }));
      std::size_t embedded = 0;
      for (const auto& e : hot.entries) embedded += e.embedded ? 1 : 0;
      w.write_json(slice_file("hotness", d, y, ".json"), {{"sigma", sigma},
                                                          {"distance_threshold", threshold},
                                                          {"sample_size", sample.size()},
                                                          {"keywords", hot.entries.size()},
                                                          {"embedded", embedded}});
    }
  }
}

void Pipeline::stage_cluster(Work& w) {
  const int y = config_.curr_year;
  for (auto d : config_.domains) {
    const auto hot = read_hotness(out_ / slice_file("hotness", d, y, ".csv"), d, y);
    const auto meta = read_json(out_ / slice_file("hotness", d, y, ".json"));
    const auto emb = graph::EmbeddingTable::deserialize(read_file((out_ / slice_file("embed", d, y, ".emb")).string()));
    const auto cs = trends::cluster_by_hotness_priority(hot, emb, config_.selection, meta.at("distance_threshold").get<double>());
    const std::string base = "cluster/" + std::string(to_string(d));
    w.write(base + ".csv", dump_to_string([&](std::ostream& o) { cs.write_csv(o, hot.ranks()); }));
    w.write_json(base + ".json", cluster_json(cs));
  }
}

void Pipeline::stage_select(Work& w) {
  for (auto d : config_.domains) {
    const auto prev = read_hotness(out_ / slice_file("hotness", d, config_.prev_year, ".csv"), d, config_.prev_year);
    const auto curr = read_hotness(out_ / slice_file("hotness", d, config_.curr_year, ".csv"), d, config_.curr_year);
    const auto cs = cluster_from_json(read_json(out_ / ("cluster/" + std::string(to_string(d)) + ".json")));
    const auto delta = hotness::rank_change(prev, curr);
    trends::KeywordSelections sel;
    sel.breakthrough_keywords = trends::select_breakthrough_keywords(prev.ranks(), curr.ranks(), config_.selection);
    const auto q = trends::select_question_keywords(cs, curr.ranks(), delta, config_.selection);
    sel.question_keywords_1 = q.question_keywords_1;
    sel.question_keywords_2 = q.question_keywords_2;
    const std::string base = "select/" + std::string(to_string(d));
    w.write(base + ".csv", dump_to_string([&](std::ostream& o) { sel.write_csv(o); }));
    w.write_json(base + ".json", {{"breakthrough_keywords", sel.breakthrough_keywords},
                                  {"question_keywords_1", sel.question_keywords_1},
                                  {"question_keywords_2", sel.question_keywords_2},
                                  {"no_eligible_clusters", q.no_eligible_clusters},
                                  {"question_pool", q.pool},
                                  {"rank_delta", delta},
                                  {"score_delta", hotness::score_change(prev, curr)}});
    if (q.no_eligible_clusters) w.warnings.push_back(std::string(to_string(d)) + ": no eligible clusters for question keywords");
    if (sel.breakthrough_keywords.empty()) w.warnings.push_back(std::string(to_string(d)) + ": no breakthrough keywords");
  }
}

void Pipeline::stage_context(Work& w) {
  const auto prompts = agents::PromptLibrary::load_dir(config_.resolve(config_.prompts_dir));
  const auto research = config_.endpoints_for(EndpointRole::Research);
  const auto consolidator = config_.endpoints_for(EndpointRole::Consolidator).front();
  for (auto mode : {agents::ResearchMode::Breakthrough2025, agents::ResearchMode::Question2026}) {
    const auto a = agents::run_deep_research(*client_, prompts, research[0], mode);
    const auto b = agents::run_deep_research(*client_, prompts, research[1], mode);
    const auto merged = agents::consolidate_contexts(*client_, prompts, a, b, consolidator);
    for (const auto* doc : {&a, &b, &merged}) {
      if (agents::is_mock_fallback(doc->text)) w.warnings.push_back(std::string(to_string(mode)) + ": mock fallback text in " + doc->doc_id);
    }
    w.write_json("context/" + std::string(to_string(mode)) + ".json",
                 {{"mode", std::string(to_string(mode))},
                  {"documents", json::array({a.to_json(), b.to_json()})},
                  {"consolidated", merged.to_json()}});
  }
}

void Pipeline::stage_propose(Work& w) {
  const auto prompts = agents::PromptLibrary::load_dir(config_.resolve(config_.prompts_dir));
  const auto store = corpus::CorpusStore::load(out_ / "corpus");
  const auto proposers = config_.endpoints_for(EndpointRole::Proposal);
  const auto ctx_b = agents::ContextDocument::from_json(read_json(out_ / "context/breakthrough_2025.json").at("consolidated"));
  const auto ctx_q = agents::ContextDocument::from_json(read_json(out_ / "context/question_2026.json").at("consolidated"));
  const int y = config_.curr_year;

  for (auto d : config_.domains) {
    std::ifstream sel_in(out_ / ("select/" + std::string(to_string(d)) + ".csv"));
    const auto sel = trends::KeywordSelections::read_csv(sel_in);
    const auto curr = read_hotness(out_ / slice_file("hotness", d, y, ".csv"), d, y);
    const auto ranks = curr.ranks();

    for (auto cat : kCategories) {
      std::set<std::string> chosen = sel.breakthrough_keywords;
      if (cat == Category::Question) {
        chosen = sel.question_keywords_1;
        chosen.insert(sel.question_keywords_2.begin(), sel.question_keywords_2.end());
      }
      std::vector<std::string> keywords = ordered_by_rank(chosen, ranks);
      json report_warnings = json::array();
      if (keywords.empty()) {
        for (std::size_t i = 0; i < std::min(config_.fallback_keywords, curr.entries.size()); ++i) {
          keywords.push_back(curr.entries[i].keyword);
        }
        const std::string msg = std::string(to_string(d)) + "/" + std::string(to_string(cat)) +
                                ": no selected keywords, using the top " + std::to_string(keywords.size()) +
                                " by hotness";
        w.warnings.push_back(msg);
        report_warnings.push_back(msg);
      }
      const auto quotas = propose::distribute_quota(config_.candidates_per_model, keywords.size());

      std::vector<propose::Prompt> prompt_list;
      for (std::size_t i = 0; i < keywords.size(); ++i) {
        if (quotas[i] == 0) continue;
        const auto& kw = keywords[i];
        if (cat == Category::Breakthrough) {
          const auto works = store.top_cited_works(d, kw, y, y, config_.literature_limit);
          prompt_list.push_back(propose::assemble_breakthrough_prompt(prompts, d, kw, works, ctx_b, quotas[i]));
        } else {
          const auto recent = store.top_cited_works(d, kw, y, y, config_.literature_limit);
          const auto found = store.top_cited_works(d, kw, config_.year_from, y - 1, config_.literature_limit);
          prompt_list.push_back(propose::assemble_question_prompt(prompts, d, kw, recent, found, ctx_q, quotas[i]));
        }
      }

      std::vector<std::vector<propose::Candidate>> per_model;
      json per_model_report = json::object();
      for (const auto& ep : proposers) {
        auto res = propose::propose_candidates(*client_, ep, prompt_list, config_.candidates_per_model, cat, d);
        per_model_report[ep.endpoint_id] = {{"candidates", res.candidates.size()}, {"shortfall", res.shortfall}};
        for (const auto& msg : res.warnings) {
          report_warnings.push_back(msg);
          w.warnings.push_back(std::string(to_string(d)) + "/" + std::string(to_string(cat)) + ": " + msg);
        }
        per_model.push_back(std::move(res.candidates));
      }
      auto raw = propose::merge_raw_pool(per_model, cat, d);
      json prompt_hashes = json::array();
      for (const auto& p : prompt_list) {
        prompt_hashes.push_back({{"keyword", p.keyword},
                                 {"request_count", p.request_count},
                                 {"template", p.template_name},
                                 {"template_hash", p.template_hash},
                                 {"prompt_hash", p.hash()},
                                 {"cited_work_ids", p.cited_work_ids}});
      }
      w.write(pool_file("propose", d, cat, ".raw.jsonl"), pool_text(raw));
      w.write_json(pool_file("propose", d, cat, ".report.json"), {{"keywords", keywords},
                                                                  {"quotas", quotas},
                                                                  {"prompts", prompt_hashes},
                                                                  {"per_model", per_model_report},
                                                                  {"raw_size", raw.size()},
                                                                  {"undersized", raw.undersized},
                                                                  {"warnings", report_warnings}});
    }
  }
}

void Pipeline::stage_ensemble(Work& w) {
  const auto prompts = agents::PromptLibrary::load_dir(config_.resolve(config_.prompts_dir));
  const auto proposers = config_.endpoints_for(EndpointRole::Proposal);
  for (auto d : config_.domains) {
    for (auto cat : kCategories) {
      const auto raw = read_pool(out_ / pool_file("propose", d, cat, ".raw.jsonl"));
      const auto seed = derive_seed(config_.rng_seed, "ensemble/" + std::string(to_string(d)) + "/" + std::string(to_string(cat)));
      const auto vote = propose::cross_model_vote(*client_, prompts, raw, proposers, config_.votes_per_model, seed);
      auto top = propose::select_top_pool(raw, vote.counts, config_.pool_size);
      for (const auto& msg : vote.warnings) w.warnings.push_back(std::string(to_string(d)) + "/" + std::string(to_string(cat)) + ": " + msg);
      w.write(pool_file("ensemble", d, cat, ".pool100.jsonl"), pool_text(top));
      w.write_json(pool_file("ensemble", d, cat, ".votes.json"), propose::to_json(vote));
    }
  }
}

void Pipeline::stage_vote_serve(Work& w, Stage phase) {
  const auto prompts = agents::PromptLibrary::load_dir(config_.resolve(config_.prompts_dir));
  const auto chair = config_.endpoints_for(EndpointRole::Chair).front();
  auto voters = config_.endpoints_for(EndpointRole::Voter);
  if (voters.empty()) voters.push_back(chair);
  const auto spec = config_.panel_for(phase);
  const auto rule = config_.rule_for(phase);
  const std::string ph(to_string(phase));

  // sessions of this phase are rebuilt from scratch in mock mode
  if (config_.mock) {
    for (auto d : config_.domains)
      for (auto c : kCategories) fs::remove_all(out_ / "sessions" / session_id(d, c, phase));
  }
  ballot::SessionStore store(out_ / "sessions");
  if (config_.mock) {
    const std::int64_t epoch = config_.mock_epoch_ms;
    store.set_clock([epoch] { return epoch; });
  }

  std::vector<agents::VoterProfile> humans;
  for (std::size_t i = 0; i < spec.human_count; ++i) {
    agents::VoterProfile h;
    char id[64];
    std::snprintf(id, sizeof id, "human-%s-%03zu", ph.c_str(), i + 1);
    h.voter_id = id;
    h.kind = agents::VoterKind::Human;
    h.level = spec.level;
    h.role = "human panelist";
    humans.push_back(std::move(h));
  }

  std::vector<std::string> ids;
  for (auto d : config_.domains) {
    json panel_json = json::array();
    std::vector<agents::VoterProfile> panel = humans;
    if (spec.ai_count > 0) {
      auto ai = agents::instantiate_panel(*client_, prompts, chair, spec, d);
      panel.insert(panel.end(), ai.begin(), ai.end());
    }
    for (const auto& p : panel) panel_json.push_back(p.to_json());
    w.write_json("vote/" + ph + "/" + std::string(to_string(d)) + ".panel.json", panel_json);

    for (auto cat : kCategories) {
      const std::string sid = session_id(d, cat, phase);
      ids.push_back(sid);
      const auto pool = read_pool(out_ / (phase == Stage::Screening ? pool_file("ensemble", d, cat, ".pool100.jsonl")
                                                                   : pool_file("vote/screening", d, cat, ".short30.jsonl")));
      if (store.contains(sid)) {
        w.warnings.push_back(sid + ": reusing the existing session");
      } else {
        ballot::CreateOptions opts;
        opts.seed = derive_seed(config_.rng_seed, "session/" + sid);
        opts.session_id = sid;
        opts.allow_panel_override = spec.human_count != agents::PanelSpec::defaults(phase).human_count ||
                                    spec.ai_count != agents::PanelSpec::defaults(phase).ai_count;
        store.create(cat, d, phase, pool, panel, rule, opts);
      }
      const ballot::Session snapshot = store.get(sid);
      auto submit = [&](const ballot::Ballot& b) { return store.submit(sid, b); };
      const auto ai = ballot::collect_ai_ballots(snapshot, submit, *client_, prompts, voters);

      std::size_t human_accepted = 0;
      if (config_.mock) {
        const std::size_t votes = rule.kind == ballot::RuleKind::LimitedExact ? rule.votes_per_voter : 0;
        const auto seed = derive_seed(config_.rng_seed, "human-ballots/" + sid);
        for (const auto& h : humans) {
          ballot::Ballot b{h.voter_id, sim::simulate_selections(snapshot.presentation_order, votes, h.voter_id, seed), 0};
          if (store.submit(sid, b).accepted) ++human_accepted;
        }
        store.close(sid);
      }
      for (const auto& a : ai.abstentions) w.warnings.push_back(sid + ": " + a + " abstained");
      w.write_json(pool_file("vote/" + ph, d, cat, ".collection.json"), {{"session_id", sid},
                                                                         {"ai_accepted", ai.accepted},
                                                                         {"ai_calls", ai.calls},
                                                                         {"abstentions", ai.abstentions},
                                                                         {"log", ai.log},
                                                                         {"human_simulated", config_.mock},
                                                                         {"human_accepted", human_accepted}});
      w.state.push_back("sessions/" + sid + "/session.json");
    }
  }

  if (!config_.mock) {
    ballot::Roster roster;
    if (!config_.roster.empty()) {
      roster = ballot::Roster::load_csv(config_.resolve(config_.roster));
    } else {
      std::ostringstream csv;
      write_csv_row(csv, {"token", "voter_id", "role"});
      const std::string admin = random_token();
      roster.add({admin, "admin", ballot::RosterRole::Admin});
      write_csv_row(csv, {admin, "admin", "admin"});
      for (const auto& h : humans) {
        const std::string t = random_token();
        roster.add({t, h.voter_id, ballot::RosterRole::Voter});
        write_csv_row(csv, {t, h.voter_id, "voter"});
      }
      const fs::path rpath = out_ / "vote" / ph / "roster.csv";
      write_file(rpath.string(), csv.str());
      log("vote-serve: generated roster at " + rpath.string());
    }
    ballot::ServiceOptions so;
    so.host = config_.service_host;
    so.port = config_.service_port;
    so.static_dir = config_.resolve(config_.static_dir);
    ballot::BallotService service(store, std::move(roster), so);
    const int port = service.start();
    log("vote-serve: serving " + std::to_string(ids.size()) + " sessions on " + so.host + ":" + std::to_string(port) +
        "; close them with POST /sessions/{id}/close");
    for (;;) {
      bool all_closed = true;
      for (const auto& sid : ids) all_closed = all_closed && store.get(sid).status == ballot::SessionStatus::Closed;
      if (all_closed) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(500));
    }
    service.stop();
  }
}

void Pipeline::close_phase(Stage phase) {
  ballot::SessionStore store(out_ / "sessions");
  for (auto d : config_.domains)
    for (auto c : kCategories) {
      const std::string sid = session_id(d, c, phase);
      if (!store.contains(sid)) {
        throw DependencyError("no session " + sid + "; run 'vote serve --phase " + std::string(to_string(phase)) + "' first",
                              "vote serve");
      }
      store.close(sid);
      log("closed " + sid);
    }
}

void Pipeline::stage_vote_tally(Work& w, Stage phase) {
  const std::string ph(to_string(phase));
  for (auto d : config_.domains) {
    for (auto cat : kCategories) {
      const std::string sid = session_id(d, cat, phase);
      const auto session = ballot::SessionStore::load_session(out_ / "sessions" / sid);
      if (session.status != ballot::SessionStatus::Closed) {
        throw DependencyError("session " + sid + " is still open; run 'vote close --phase " + ph + "' first", "vote close");
      }
      const auto t = ballot::tally(session);
      const auto adv = ballot::advance(session, t);
      for (const auto& n : t.notes) w.warnings.push_back(sid + ": " + n);
      w.write_json(pool_file("vote/" + ph, d, cat, ".tally.json"), t.to_json());
      w.write(pool_file("vote/" + ph, d, cat, ".tally.csv"), dump_to_string([&](std::ostream& o) { t.write_csv(o); }));
      if (phase == Stage::Screening) {
        w.write(pool_file("vote/" + ph, d, cat, ".short30.jsonl"), pool_text(adv.next));
      } else {
        w.write(pool_file("vote/" + ph, d, cat, ".final10.jsonl"), pool_text(adv.next));
        w.write(pool_file("vote/" + ph, d, cat, ".inducted2.jsonl"), pool_text(*adv.inducted));
      }
    }
  }
}

void Pipeline::stage_analyze(Work& w) {
  std::vector<analysis::AlignmentRow> all;
  for (auto d : config_.domains) {
    std::vector<ballot::Tally> tallies;
    for (auto cat : kCategories)
      for (auto p : kPhases) {
        tallies.push_back(ballot::Tally::from_json(
            read_json(out_ / pool_file("vote/" + std::string(to_string(p)), d, cat, ".tally.json"))));
      }
    const auto rows = analysis::alignment_report(tallies);
    for (const auto& r : rows) {
      if (!r.js) w.warnings.push_back(r.session_id + ": alignment unavailable (" + r.note + ")");
    }
    const std::string base = "analysis/" + std::string(to_string(d)) + ".alignment";
    w.write(base + ".csv", dump_to_string([&](std::ostream& o) { analysis::write_alignment_csv(o, rows); }));
    w.write_json(base + ".json", analysis::alignment_json(rows));
    all.insert(all.end(), rows.begin(), rows.end());
  }
  std::ostringstream csv;
  write_csv_row(csv, {"domain", "category", "phase", "js_distance"});
  for (const auto& r : all) {
    write_csv_row(csv, {std::string(to_string(r.domain)), analysis::category_label(r.category),
                        analysis::phase_label(r.stage), r.js ? format_double(*r.js) : "unavailable"});
  }
  w.write("analysis/alignment_all.csv", csv.str());
}

void Pipeline::stage_export(Work& w) {
  for (auto cat : kCategories) {
    json list = json::array();
    std::ostringstream csv;
    write_csv_row(csv, {"domain", "final_rank", "weighted_score", "candidate_id", "source_model", "text"});
    for (auto d : config_.domains) {
      const auto inducted = read_pool(out_ / pool_file("vote/refinement", d, cat, ".inducted2.jsonl"));
      const auto t = ballot::Tally::from_json(read_json(out_ / pool_file("vote/refinement", d, cat, ".tally.json")));
      for (const auto& c : inducted.candidates) {
        const auto* row = t.find(c.candidate_id);
        list.push_back({{"domain", std::string(to_string(d))},
                        {"final_rank", row->final_rank},
                        {"weighted_score", row->weighted},
                        {"candidate", c.to_json()}});
        write_csv_row(csv, {std::string(to_string(d)), std::to_string(row->final_rank), format_double(row->weighted),
                            c.candidate_id, c.source_model, c.text});
      }
    }
    const std::string base = "export/top10_" + std::string(to_string(cat));
    w.write_json(base + ".json", {{"category", std::string(to_string(cat))}, {"entries", list}});
    w.write(base + ".csv", csv.str());
  }
}

}  // namespace trendscope::pipeline
