#include "trendscope/simulator.hpp"

#include "trendscope/hash.hpp"
#include "trendscope/rng.hpp"
#include "trendscope/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <map>
#include <cctype>
#include <set>

namespace trendscope::sim {

using nlohmann::json;

double unit_hash(std::string_view a, std::string_view b, std::uint64_t seed) {
  std::string key(a);
  key += '\x1f';
  key += b;
  const std::uint64_t h = splitmix64(fnv1a64(key) ^ splitmix64(seed));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double candidate_quality(std::string_view candidate_id) { return unit_hash("quality", candidate_id, 0); }

std::vector<std::string> simulate_selections(const std::vector<std::string>& candidate_ids, std::size_t votes,
                                             std::string_view judge, std::uint64_t seed) {
  std::vector<std::pair<double, std::string>> scored;
  for (const auto& id : candidate_ids) {
    scored.emplace_back(0.6 * candidate_quality(id) + 0.4 * unit_hash(judge, id, seed), id);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> out;
  if (votes > 0) {
    for (std::size_t i = 0; i < std::min(votes, scored.size()); ++i) out.push_back(scored[i].second);
  } else {
    for (const auto& [s, id] : scored) {
      if (s > 0.55) out.push_back(id);
    }
    if (out.empty() && !scored.empty()) out.push_back(scored.front().second);
  }
  return out;
}

namespace {

std::map<std::string, std::string> header_fields(std::string_view prompt) {
  std::map<std::string, std::string> out;
  for (const auto& line : split_lines(prompt)) {
    if (trim(line).empty()) break;
    const auto colon = line.find(':');
    if (colon == std::string::npos) break;
    out[trim(line.substr(0, colon))] = trim(line.substr(colon + 1));
  }
  return out;
}

std::vector<std::string> listed_ids(std::string_view prompt) {
  std::vector<std::string> ids;
  for (const auto& line : split_lines(prompt)) {
    if (line.size() < 19 || line[0] != '[' || line[17] != ']' || line[18] != ' ') continue;
    const std::string id = line.substr(1, 16);
    if (std::all_of(id.begin(), id.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); })) {
      ids.push_back(id);
    }
  }
  return ids;
}

std::size_t to_count(const std::string& s, std::size_t fallback) {
  try {
    return static_cast<std::size_t>(std::stoul(s));
  } catch (...) {
    return fallback;
  }
}

template <std::size_t N>
const char* pick(const std::array<const char*, N>& items, std::string_view a, std::string_view b) {
  return items[fnv1a64(std::string(a) + "|" + std::string(b)) % N];
}

constexpr std::array<const char*, 8> kAdvances = {
    "A scalable method", "A first experimental demonstration", "An open benchmark and dataset",
    "A unified theoretical account", "A low-cost fabrication route", "A reproducible large-scale study",
    "A precise measurement", "An end-to-end automated pipeline"};
constexpr std::array<const char*, 6> kEffects = {
    "cuts the error rate by an order of magnitude", "closes a long-standing open gap",
    "enables routine deployment outside the laboratory", "resolves conflicting earlier results",
    "generalizes across previously separate settings", "reaches a practical efficiency threshold"};
constexpr std::array<const char*, 6> kQuestions = {
    "What mechanism explains", "How far can we scale", "Can we reliably control",
    "What are the fundamental limits of", "How can we verify", "Which design principles govern"};
constexpr std::array<const char*, 5> kBackgrounds = {
    "academic research", "industrial research and development", "national laboratory",
    "clinical and applied practice", "science policy and funding"};
constexpr std::array<const char*, 4> kRoles = {"theorist", "experimentalist", "methodologist", "reviewer"};
constexpr std::array<const char*, 10> kFocus = {
    "foundations", "methods", "applications", "instrumentation", "data analysis",
    "modelling", "evaluation", "systems", "interdisciplinary links", "translation"};

std::string propose_reply(const agents::AgentEndpoint& ep, const std::map<std::string, std::string>& h) {
  const std::size_t n = to_count(h.count("REQUEST_COUNT") ? h.at("REQUEST_COUNT") : "", 10);
  const std::string kw = h.count("KEYWORD") ? h.at("KEYWORD") : "the field";
  const std::string domain = h.count("DOMAIN") ? h.at("DOMAIN") : "science";
  const bool question = h.count("CATEGORY") && h.at("CATEGORY") == "question";
  json items = json::array();
  for (std::size_t i = 1; i <= n; ++i) {
    const std::string tag = ep.endpoint_id + "|" + kw + "|" + std::to_string(i);
    std::string text;
    if (question) {
      text = std::string(pick(kQuestions, tag, "q")) + " " + kw + " in " + domain + " (" + ep.model_name +
             " proposal " + std::to_string(i) + ")?";
    } else {
      text = std::string(pick(kAdvances, tag, "a")) + " for " + kw + " in " + domain + " " +
             pick(kEffects, tag, "e") + " (" + ep.model_name + " proposal " + std::to_string(i) + ").";
    }
    items.push_back({{"text", text}});
  }
  return json{{"candidates", items}}.dump();
}

std::string panel_reply(const std::map<std::string, std::string>& h) {
  const std::size_t n = to_count(h.count("COUNT") ? h.at("COUNT") : "", 1);
  const std::string domain = h.count("DOMAIN") ? h.at("DOMAIN") : "science";
  json profiles = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    profiles.push_back({{"role", kRoles[i % kRoles.size()]},
                        {"specialization", domain + " " + kFocus[i % kFocus.size()] + " track " + std::to_string(i / kFocus.size() + 1)},
                        {"background", kBackgrounds[i % kBackgrounds.size()]}});
  }
  return json{{"profiles", profiles}}.dump();
}

std::string research_reply(const agents::AgentEndpoint& ep, const std::map<std::string, std::string>& h) {
  const std::string mode = h.count("MODE") ? h.at("MODE") : "unknown";
  std::string doc = "Context report (" + mode + ") compiled by " + ep.model_name + "\n";
  for (const char* d : {"Artificial Intelligence", "Physics", "Chemistry", "Biology", "Economics"}) {
    for (int k = 1; k <= 2; ++k) {
      const std::string key = ep.endpoint_id + "|" + mode + "|" + d + std::to_string(k);
      doc += "- " + std::string(d) + ": " + pick(kAdvances, key, "a") + " " + pick(kEffects, key, "e") +
             " [source: " + ep.model_name + " survey item " + std::to_string(k) + "]\n";
    }
  }
  return doc;
}

std::string consolidate_reply(std::string_view prompt, const std::map<std::string, std::string>& h) {
  std::set<std::string> items;
  for (const auto& line : split_lines(prompt)) {
    if (line.rfind("- ", 0) == 0) items.insert(line);
  }
  std::string doc = "Consolidated context (" + (h.count("MODE") ? h.at("MODE") : std::string("unknown")) + ")\n";
  for (const auto& it : items) doc += it + "\n";
  return doc;
}

}  // namespace

agents::MockResponder make_responder(std::uint64_t seed) {
  return [seed](const agents::AgentEndpoint& ep, std::string_view prompt) -> std::optional<std::string> {
    const auto h = header_fields(prompt);
    auto task = h.find("TASK");
    if (task == h.end()) return std::nullopt;
    const std::string& t = task->second;
    if (t == "propose_candidates") return propose_reply(ep, h);
    if (t == "panel_generation") return panel_reply(h);
    if (t == "deep_research") return research_reply(ep, h);
    if (t == "consolidate") return consolidate_reply(prompt, h);
    if (t == "ensemble_vote") {
      const std::size_t votes = to_count(h.count("VOTES_REQUIRED") ? h.at("VOTES_REQUIRED") : "", 1);
      return json{{"selections", simulate_selections(listed_ids(prompt), std::max<std::size_t>(votes, 1),
                                                         ep.endpoint_id, seed)}}
          .dump();
    }
    if (t == "cast_ballot") {
      const bool limited = h.count("RULE") && h.at("RULE") == "limited_exact";
      const std::size_t votes = limited ? to_count(h.at("VOTES"), 10) : 0;
      const std::string judge = h.count("VOTER") ? h.at("VOTER") : ep.endpoint_id;
      return json{{"selections", simulate_selections(listed_ids(prompt), votes, judge, seed)}}.dump();
    }
    return std::nullopt;
  };
}

}  // namespace trendscope::sim
