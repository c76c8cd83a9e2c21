#include "trendscope/config.hpp"

#include "trendscope/errors.hpp"
#include "trendscope/hash.hpp"
#include "trendscope/text.hpp"

#include <toml.hpp>

#include <set>

namespace trendscope {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(EndpointRole r) {
  switch (r) {
    case EndpointRole::Proposal: return "proposal";
    case EndpointRole::Research: return "research";
    case EndpointRole::Consolidator: return "consolidator";
    case EndpointRole::Chair: return "chair";
    case EndpointRole::Voter: return "voter";
  }
  return "?";
}

std::optional<EndpointRole> parse_endpoint_role(std::string_view s) {
  for (auto r : {EndpointRole::Proposal, EndpointRole::Research, EndpointRole::Consolidator, EndpointRole::Chair,
                 EndpointRole::Voter}) {
    if (to_string(r) == ascii_lower(s)) return r;
  }
  return std::nullopt;
}

std::vector<agents::AgentEndpoint> PipelineConfig::endpoints_for(EndpointRole role) const {
  std::vector<agents::AgentEndpoint> out;
  for (const auto& e : endpoints) {
    if (e.role == role) out.push_back(e.endpoint);
  }
  return out;
}

fs::path PipelineConfig::resolve(const fs::path& p) const {
  if (p.empty() || p.is_absolute()) return p;
  return (base_dir / p).lexically_normal();
}

std::vector<RoledEndpoint> PipelineConfig::default_endpoints() {
  using agents::RegionTag;
  auto mk = [](EndpointRole role, std::string id, std::string model, RegionTag region) {
    RoledEndpoint e;
    e.role = role;
    e.endpoint.endpoint_id = std::move(id);
    e.endpoint.model_name = std::move(model);
    e.endpoint.region_tag = region;
    return e;
  };
  return {
      mk(EndpointRole::Proposal, "us-a", "mock-us-a", RegionTag::US),
      mk(EndpointRole::Proposal, "us-b", "mock-us-b", RegionTag::US),
      mk(EndpointRole::Proposal, "us-c", "mock-us-c", RegionTag::US),
      mk(EndpointRole::Proposal, "cn-a", "mock-cn-a", RegionTag::CN),
      mk(EndpointRole::Proposal, "cn-b", "mock-cn-b", RegionTag::CN),
      mk(EndpointRole::Proposal, "cn-c", "mock-cn-c", RegionTag::CN),
      mk(EndpointRole::Research, "research-us", "mock-research-us", RegionTag::US),
      mk(EndpointRole::Research, "research-cn", "mock-research-cn", RegionTag::CN),
      mk(EndpointRole::Consolidator, "consolidator", "mock-consolidator", RegionTag::US),
      mk(EndpointRole::Chair, "chair", "mock-chair", RegionTag::US),
      mk(EndpointRole::Voter, "voter", "mock-voter", RegionTag::US),
  };
}

void PipelineConfig::validate() const {
  auto must_exist = [&](const fs::path& p, const char* what) {
    if (p.empty()) throw ConfigError(std::string("config: ") + what + " is not set");
    if (!fs::exists(resolve(p))) throw ConfigError(std::string("config: ") + what + " does not exist: " + resolve(p).string());
  };
  must_exist(corpus_input, "paths.corpus_input");
  must_exist(domain_map, "paths.domain_map");
  must_exist(prompts_dir, "paths.prompts");
  if (!mock_dir.empty()) must_exist(mock_dir, "paths.mocks");
  if (!roster.empty()) must_exist(roster, "paths.roster");
  if (output_dir.empty()) throw ConfigError("config: paths.output is not set");
  if (domains.empty()) throw ConfigError("config: corpus.domains is empty");
  if (year_from > year_to || prev_year >= curr_year || prev_year < year_from || curr_year > year_to) {
    throw ConfigError("config: inconsistent year range");
  }
  try {
    train.validate();
    hotness.validate();
    selection.validate();
    screening_rule.validate();
    refinement_rule.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (candidates_per_model < 1 || votes_per_model < 1 || pool_size < 1) throw ConfigError("config: propose counts must be >= 1");
  std::set<std::string> ids;
  for (const auto& e : endpoints) {
    e.endpoint.validate();
    if (!ids.insert(e.endpoint.endpoint_id).second) throw ConfigError("config: duplicate endpoint " + e.endpoint.endpoint_id);
  }
  for (auto r : {EndpointRole::Proposal, EndpointRole::Research, EndpointRole::Consolidator, EndpointRole::Chair}) {
    if (endpoints_for(r).empty()) throw ConfigError("config: no endpoint with role " + std::string(to_string(r)));
  }
  if (endpoints_for(EndpointRole::Research).size() < 2) throw ConfigError("config: two research endpoints are required");
}

json PipelineConfig::to_json() const {
  json doms = json::array();
  for (auto d : domains) doms.push_back(std::string(trendscope::to_string(d)));
  json eps = json::array();
  for (const auto& e : endpoints) {
    eps.push_back({{"id", e.endpoint.endpoint_id},
                   {"role", std::string(to_string(e.role))},
                   {"provider", std::string(agents::to_string(e.endpoint.provider_kind))},
                   {"model", e.endpoint.model_name},
                   {"base_url", e.endpoint.base_url},
                   {"credential_ref", e.endpoint.credential_ref},
                   {"temperature", e.endpoint.temperature},
                   {"region", std::string(agents::to_string(e.endpoint.region_tag))}});
  }
  auto panel = [](const agents::PanelSpec& p) {
    return json{{"human_count", p.human_count}, {"ai_count", p.ai_count}, {"level", std::string(agents::to_string(p.level))}};
  };
  return {{"seed", rng_seed},
          {"mock", mock},
          {"mock_timestamp", mock_timestamp},
          {"mock_epoch_ms", mock_epoch_ms},
          {"paths",
           {{"corpus_input", corpus_input.generic_string()},
            {"domain_map", domain_map.generic_string()},
            {"prompts", prompts_dir.generic_string()},
            {"mocks", mock_dir.generic_string()},
            {"output", output_dir.generic_string()},
            {"roster", roster.generic_string()}}},
          {"corpus",
           {{"domains", doms},
            {"year_from", year_from},
            {"year_to", year_to},
            {"prev_year", prev_year},
            {"curr_year", curr_year},
            {"min_concept_score", min_concept_score}}},
          {"embedding",
           {{"dim", train.embedding_dim},
            {"walk_length", train.walk_length},
            {"num_walks", train.num_walks},
            {"window", train.window_size},
            {"p", train.p},
            {"q", train.q},
            {"negatives", train.num_negatives},
            {"epochs", train.epochs},
            {"learning_rate", train.learning_rate},
            {"min_learning_rate", train.min_learning_rate},
            {"uniform_weights", train.uniform_weights},
            {"parallel", train.parallel},
            {"threads", train.threads}}},
          {"hotness",
           {{"sigma_perc_1", hotness.sigma_perc_1},
            {"sample_size", hotness.sample_size},
            {"kernel_half_factor", hotness_options.kernel_half_factor},
            {"threads", hotness_options.threads}}},
          {"selection",
           {{"sigma_perc_2", selection.sigma_perc_2},
            {"kw_hotness_threshold", selection.kw_hotness_threshold},
            {"kw_breakthrough_threshold", selection.kw_breakthrough_threshold},
            {"cluster_hotness_threshold", selection.cluster_hotness_threshold},
            {"kw_question_threshold", selection.kw_question_threshold},
            {"global_rank_mode", selection.global_rank_mode}}},
          {"propose",
           {{"candidates_per_model", candidates_per_model},
            {"literature_limit", literature_limit},
            {"votes_per_model", votes_per_model},
            {"pool_size", pool_size},
            {"fallback_keywords", fallback_keywords}}},
          {"panels", {{"screening", panel(screening_panel)}, {"refinement", panel(refinement_panel)}}},
          {"voting", {{"screening", screening_rule.to_json()}, {"refinement", refinement_rule.to_json()}}},
          {"service", {{"host", service_host}, {"port", service_port}, {"static_dir", static_dir.generic_string()}}},
          {"endpoints", eps}};
}

std::string PipelineConfig::hash() const { return sha256_hex(to_json().dump()); }

namespace {

void check_keys(const toml::table& t, const std::string& where, std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, v] : t) {
    bool ok = false;
    for (auto a : allowed) ok = ok || k.str() == a;
    if (!ok) throw ConfigError("config: unknown key '" + std::string(k.str()) + "' in " + where);
  }
}

template <class T>
void read(const toml::table& t, std::string_view key, T& out) {
  const toml::node* n = t.get(key);
  if (!n) return;
  if constexpr (std::is_same_v<T, bool>) {
    if (!n->is_boolean()) throw ConfigError("config: " + std::string(key) + " must be a boolean");
    out = n->as_boolean()->get();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!n->is_string()) throw ConfigError("config: " + std::string(key) + " must be a string");
    out = n->as_string()->get();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (auto v = n->value<double>()) out = *v;
    else throw ConfigError("config: " + std::string(key) + " must be a number");
  } else {
    auto v = n->value<std::int64_t>();
    if (!v) throw ConfigError("config: " + std::string(key) + " must be an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (*v < 0) throw ConfigError("config: " + std::string(key) + " must be non-negative");
    }
    out = static_cast<T>(*v);
  }
}

void read_path(const toml::table& t, std::string_view key, fs::path& out) {
  std::string s;
  if (t.get(key)) {
    read(t, key, s);
    out = s;
  }
}

const toml::table* sub(const toml::table& t, std::string_view key) {
  const toml::node* n = t.get(key);
  if (!n) return nullptr;
  if (!n->is_table()) throw ConfigError("config: [" + std::string(key) + "] must be a table");
  return n->as_table();
}

void read_panel(const toml::table& t, agents::PanelSpec& p) {
  check_keys(t, "panels", {"human_count", "ai_count", "level"});
  read(t, "human_count", p.human_count);
  read(t, "ai_count", p.ai_count);
  std::string level(agents::to_string(p.level));
  read(t, "level", level);
  auto l = agents::parse_level(level);
  if (!l) throw ConfigError("config: unknown panel level '" + level + "'");
  p.level = *l;
}

void read_rule(const toml::table& t, ballot::VotingRule& r) {
  check_keys(t, "voting", {"kind", "votes_per_voter", "weight_human", "weight_ai", "advance_count", "induct_count"});
  std::string kind(ballot::to_string(r.kind));
  read(t, "kind", kind);
  auto k = ballot::parse_rule_kind(kind);
  if (!k) throw ConfigError("config: unknown voting kind '" + kind + "'");
  r.kind = *k;
  read(t, "votes_per_voter", r.votes_per_voter);
  read(t, "weight_human", r.weight_human);
  read(t, "weight_ai", r.weight_ai);
  read(t, "advance_count", r.advance_count);
  read(t, "induct_count", r.induct_count);
}

}  // namespace

PipelineConfig parse_config(std::string_view toml_text, const fs::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string("config: TOML parse error: ") + std::string(e.description()));
  }
  check_keys(root, "top level",
             {"seed", "mock", "mock_timestamp", "mock_epoch_ms", "paths", "corpus", "embedding", "hotness", "selection",
              "propose", "panels", "voting", "service", "endpoints"});
  PipelineConfig c;
  c.base_dir = base_dir;
  read(root, "seed", c.rng_seed);
  read(root, "mock", c.mock);
  read(root, "mock_timestamp", c.mock_timestamp);
  read(root, "mock_epoch_ms", c.mock_epoch_ms);

  if (auto t = sub(root, "paths")) {
    check_keys(*t, "paths", {"corpus_input", "domain_map", "prompts", "mocks", "output", "roster"});
    read_path(*t, "corpus_input", c.corpus_input);
    read_path(*t, "domain_map", c.domain_map);
    read_path(*t, "prompts", c.prompts_dir);
    read_path(*t, "mocks", c.mock_dir);
    read_path(*t, "output", c.output_dir);
    read_path(*t, "roster", c.roster);
  }
  if (auto t = sub(root, "corpus")) {
    check_keys(*t, "corpus", {"domains", "year_from", "year_to", "prev_year", "curr_year", "min_concept_score"});
    if (auto arr = t->get_as<toml::array>("domains")) {
      c.domains.clear();
      for (const auto& n : *arr) {
        auto s = n.value<std::string>();
        auto d = s ? parse_domain(*s) : std::nullopt;
        if (!d) throw ConfigError("config: unknown domain in corpus.domains");
        c.domains.push_back(*d);
      }
    }
    read(*t, "year_from", c.year_from);
    read(*t, "year_to", c.year_to);
    read(*t, "prev_year", c.prev_year);
    read(*t, "curr_year", c.curr_year);
    read(*t, "min_concept_score", c.min_concept_score);
  }
  if (auto t = sub(root, "embedding")) {
    check_keys(*t, "embedding",
               {"dim", "walk_length", "num_walks", "window", "p", "q", "negatives", "epochs", "learning_rate",
                "min_learning_rate", "uniform_weights", "parallel", "threads"});
    read(*t, "dim", c.train.embedding_dim);
    read(*t, "walk_length", c.train.walk_length);
    read(*t, "num_walks", c.train.num_walks);
    read(*t, "window", c.train.window_size);
    read(*t, "p", c.train.p);
    read(*t, "q", c.train.q);
    read(*t, "negatives", c.train.num_negatives);
    read(*t, "epochs", c.train.epochs);
    read(*t, "learning_rate", c.train.learning_rate);
    read(*t, "min_learning_rate", c.train.min_learning_rate);
    read(*t, "uniform_weights", c.train.uniform_weights);
    read(*t, "parallel", c.train.parallel);
    read(*t, "threads", c.train.threads);
  }
  if (auto t = sub(root, "hotness")) {
    check_keys(*t, "hotness", {"sigma_perc_1", "sample_size", "kernel_half_factor", "threads"});
    read(*t, "sigma_perc_1", c.hotness.sigma_perc_1);
    read(*t, "sample_size", c.hotness.sample_size);
    read(*t, "kernel_half_factor", c.hotness_options.kernel_half_factor);
    read(*t, "threads", c.hotness_options.threads);
  }
  if (auto t = sub(root, "selection")) {
    check_keys(*t, "selection",
               {"sigma_perc_2", "kw_hotness_threshold", "kw_breakthrough_threshold", "cluster_hotness_threshold",
                "kw_question_threshold", "global_rank_mode"});
    read(*t, "sigma_perc_2", c.selection.sigma_perc_2);
    read(*t, "kw_hotness_threshold", c.selection.kw_hotness_threshold);
    read(*t, "kw_breakthrough_threshold", c.selection.kw_breakthrough_threshold);
    read(*t, "cluster_hotness_threshold", c.selection.cluster_hotness_threshold);
    read(*t, "kw_question_threshold", c.selection.kw_question_threshold);
    read(*t, "global_rank_mode", c.selection.global_rank_mode);
  }
  if (auto t = sub(root, "propose")) {
    check_keys(*t, "propose",
               {"candidates_per_model", "literature_limit", "votes_per_model", "pool_size", "fallback_keywords"});
    read(*t, "candidates_per_model", c.candidates_per_model);
    read(*t, "literature_limit", c.literature_limit);
    read(*t, "votes_per_model", c.votes_per_model);
    read(*t, "pool_size", c.pool_size);
    read(*t, "fallback_keywords", c.fallback_keywords);
  }
  if (auto t = sub(root, "panels")) {
    check_keys(*t, "panels", {"screening", "refinement"});
    if (auto p = sub(*t, "screening")) read_panel(*p, c.screening_panel);
    if (auto p = sub(*t, "refinement")) read_panel(*p, c.refinement_panel);
  }
  if (auto t = sub(root, "voting")) {
    check_keys(*t, "voting", {"screening", "refinement"});
    if (auto r = sub(*t, "screening")) read_rule(*r, c.screening_rule);
    if (auto r = sub(*t, "refinement")) read_rule(*r, c.refinement_rule);
  }
  if (auto t = sub(root, "service")) {
    check_keys(*t, "service", {"host", "port", "static_dir"});
    read(*t, "host", c.service_host);
    read(*t, "port", c.service_port);
    read_path(*t, "static_dir", c.static_dir);
  }
  if (const toml::node* n = root.get("endpoints")) {
    const toml::array* arr = n->as_array();
    if (!arr) throw ConfigError("config: endpoints must be an array of tables");
    for (const auto& item : *arr) {
      const toml::table* t = item.as_table();
      if (!t) throw ConfigError("config: endpoints must be an array of tables");
      check_keys(*t, "endpoints",
                 {"id", "role", "provider", "model", "base_url", "credential_ref", "temperature", "region"});
      RoledEndpoint e;
      std::string role = "proposal", provider = "mock", region = "other";
      read(*t, "id", e.endpoint.endpoint_id);
      read(*t, "role", role);
      read(*t, "provider", provider);
      read(*t, "model", e.endpoint.model_name);
      read(*t, "base_url", e.endpoint.base_url);
      read(*t, "credential_ref", e.endpoint.credential_ref);
      read(*t, "temperature", e.endpoint.temperature);
      read(*t, "region", region);
      auto r = parse_endpoint_role(role);
      auto p = agents::parse_provider_kind(provider);
      auto g = agents::parse_region(region);
      if (!r || !p || !g) throw ConfigError("config: endpoint '" + e.endpoint.endpoint_id + "' has a bad role, provider or region");
      e.role = *r;
      e.endpoint.provider_kind = *p;
      e.endpoint.region_tag = *g;
      c.endpoints.push_back(std::move(e));
    }
  } else {
    c.endpoints = PipelineConfig::default_endpoints();
  }
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  const fs::path base = fs::absolute(path).parent_path();
  return parse_config(read_file(path.string()), base);
}

}  // namespace trendscope
