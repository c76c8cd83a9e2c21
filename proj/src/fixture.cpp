#include "trendscope/fixture.hpp"

#include "trendscope/errors.hpp"
#include "trendscope/rng.hpp"
#include "trendscope/text.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <vector>

namespace trendscope::fixture {

namespace fs = std::filesystem;
using nlohmann::json;

json FixtureManifest::to_json() const {
  return {{"works", works},
          {"per_domain", per_domain},
          {"per_slice", per_slice},
          {"keywords_per_domain", keywords_per_domain},
          {"seed", seed}};
}

FixtureManifest FixtureManifest::from_json(const json& j) {
  FixtureManifest m;
  m.works = j.at("works").get<std::size_t>();
  m.per_domain = j.at("per_domain").get<std::map<std::string, std::size_t>>();
  m.per_slice = j.at("per_slice").get<std::map<std::string, std::size_t>>();
  m.keywords_per_domain = j.at("keywords_per_domain").get<std::map<std::string, std::size_t>>();
  m.seed = j.value("seed", std::uint64_t{0});
  return m;
}

namespace {

struct DomainVocab {
  Domain domain;
  std::array<const char*, 3> topics;
  std::array<const char*, 5> stems;
};

const std::array<DomainVocab, 5> kVocab = {{
    {Domain::ArtificialIntelligence,
     {"Machine Learning", "Computer Vision and Pattern Recognition", "Natural Language Processing"},
     {"language model", "reinforcement learning", "graph neural network", "diffusion model", "robot learning"}},
    {Domain::Physics,
     {"Condensed Matter Physics", "Quantum Information", "Astrophysics"},
     {"quantum error correction", "topological phase", "gravitational wave", "dark matter", "ultracold atom"}},
    {Domain::Chemistry,
     {"Organic Chemistry", "Catalysis", "Electrochemistry"},
     {"metal organic framework", "photocatalysis", "solid state battery", "asymmetric synthesis", "electrolyte"}},
    {Domain::Biology,
     {"Molecular Biology", "Genetics", "Neuroscience"},
     {"protein structure", "gene editing", "single cell sequencing", "gut microbiome", "neural circuit"}},
    {Domain::Economics,
     {"Macroeconomics", "Labor Economics", "Financial Economics"},
     {"monetary policy", "labor market", "climate finance", "causal inference", "inflation expectation"}},
}};

constexpr std::array<const char*, 8> kModifiers = {"theory", "benchmark", "scaling", "control",
                                                   "measurement", "dynamics", "design", "simulation"};

}  // namespace

FixtureManifest generate_fixture(const fs::path& dir, const FixtureOptions& opt) {
  if (opt.works < kVocab.size()) throw ContractViolation("fixture: need at least one work per domain");
  if (opt.keywords_per_domain < 5 || opt.keywords_per_domain > 40) {
    throw ContractViolation("fixture: keywords_per_domain must be in [5, 40]");
  }
  fs::create_directories(dir);
  Rng rng(derive_seed(opt.seed, "fixture"));
  FixtureManifest manifest;
  manifest.seed = opt.seed;

  {
    std::ofstream map(dir / "domain_map.csv");
    map << "topic_name,domain\n";
    for (const auto& v : kVocab) {
      for (const char* t : v.topics) map << t << "," << to_string(v.domain) << "\n";
    }
  }

  std::ofstream out(dir / "works.ndjson");
  if (!out) throw IoError("fixture: cannot write " + (dir / "works.ndjson").string());
  std::size_t serial = 0;
  for (std::size_t di = 0; di < kVocab.size(); ++di) {
    const auto& v = kVocab[di];
    const std::string dname(to_string(v.domain));
    std::vector<std::string> keywords;
    std::vector<double> base;
    for (std::size_t i = 0; i < opt.keywords_per_domain; ++i) {
      keywords.push_back(std::string(v.stems[i % 5]) + " " + kModifiers[i / 5]);
      base.push_back(0.5 + rng.uniform());
    }
    manifest.keywords_per_domain[dname] = keywords.size();
    // the group in fashion differs between the two compared years
    const std::size_t hot_prev = di % 5, hot_curr = (di + 2) % 5;
    const std::size_t n_works = opt.works / kVocab.size() + (di < opt.works % kVocab.size() ? 1 : 0);
    for (std::size_t w = 0; w < n_works; ++w) {
      const double u = rng.uniform();
      int year;
      if (u < 0.4) year = opt.prev_year;
      else if (u < 0.8) year = opt.curr_year;
      else year = opt.first_year + static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.prev_year - opt.first_year)));
      const std::size_t hot = year == opt.curr_year ? hot_curr : hot_prev;

      std::vector<double> weight(keywords.size());
      double total = 0.0;
      for (std::size_t k = 0; k < keywords.size(); ++k) {
        weight[k] = base[k] * (k % 5 == hot ? 3.0 : 1.0);
        total += weight[k];
      }
      auto draw = [&] {
        double x = rng.uniform() * total;
        for (std::size_t k = 0; k < weight.size(); ++k) {
          x -= weight[k];
          if (x < 0.0) return k;
        }
        return weight.size() - 1;
      };
      // a primary keyword plus companions mostly from its group
      const std::size_t primary = draw();
      std::set<std::size_t> chosen{primary};
      const std::size_t want = 3 + rng.below(3);
      for (int guard = 0; chosen.size() < want && guard < 50; ++guard) {
        std::size_t k;
        if (rng.uniform() < 0.75) {
          k = (primary % 5) + 5 * rng.below((keywords.size() + 4 - primary % 5) / 5);
          if (k >= keywords.size()) continue;
        } else {
          k = draw();
        }
        chosen.insert(k);
      }

      char id[32];
      std::snprintf(id, sizeof id, "W%09zu", 100000 + ++serial);
      json concepts = json::array();
      for (std::size_t k : chosen) {
        concepts.push_back({{"display_name", keywords[k]}, {"score", std::round((0.3 + 0.65 * rng.uniform()) * 1000) / 1000}});
      }
      const auto cites = static_cast<std::uint64_t>(std::floor(std::exp(rng.uniform() * 6.0))) - 1;
      json rec = {{"id", std::string("https://openalex.org/") + id},
                  {"display_name", "On " + keywords[primary] + " in practice, study " + std::to_string(serial)},
                  {"publication_year", year},
                  {"cited_by_count", cites},
                  {"topics", json::array({{{"display_name", v.topics[rng.below(3)]}}})},
                  {"concepts", concepts}};
      out << rec.dump() << "\n";
      ++manifest.works;
      ++manifest.per_domain[dname];
      ++manifest.per_slice[dname + "/" + std::to_string(year)];
    }
  }
  out.close();
  write_file((dir / "manifest.json").string(), manifest.to_json().dump(2) + "\n");
  return manifest;
}

}  // namespace trendscope::fixture
