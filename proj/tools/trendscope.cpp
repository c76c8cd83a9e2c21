#include "trendscope/config.hpp"
#include "trendscope/errors.hpp"
#include "trendscope/fixture.hpp"
#include "trendscope/pipeline.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>

namespace fs = std::filesystem;
using namespace trendscope;

namespace {

struct GlobalFlags {
  std::string config = "config/default.toml";
  std::vector<std::string> domains;
  int year = 0;
  std::optional<std::uint64_t> seed;
  bool mock = false;
  bool force = false;
};

PipelineConfig effective_config(const GlobalFlags& g) {
  PipelineConfig c = load_config(g.config);
  if (!g.domains.empty()) {
    c.domains.clear();
    for (const auto& name : g.domains) {
      auto d = parse_domain(name);
      if (!d) throw ConfigError("unknown domain '" + name + "'");
      c.domains.push_back(*d);
    }
  }
  if (g.year != 0) {
    c.curr_year = g.year;
    c.prev_year = g.year - 1;
  }
  if (g.seed) c.rng_seed = *g.seed;
  if (g.mock) c.mock = true;
  return c;
}

std::unique_ptr<pipeline::Pipeline> make_pipeline(const GlobalFlags& g) {
  auto p = std::make_unique<pipeline::Pipeline>(effective_config(g));
  p->set_log([](const std::string& line) { std::cerr << line << "\n"; });
  return p;
}

void print_outcome(const pipeline::StageOutcome& o) {
  std::cout << o.stage << ": " << (o.skipped ? "up-to-date" : "ok") << " (" << o.outputs.size() << " artifacts";
  if (!o.warnings.empty()) std::cout << ", " << o.warnings.size() << " warnings";
  std::cout << ")\n";
}

Stage phase_from(const std::string& s) {
  auto p = parse_stage(s);
  if (!p) throw ConfigError("unknown phase '" + s + "' (use screening or refinement)");
  return *p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trendscope: keyword trends to candidate pools to ballots"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "TOML config file")->capture_default_str();
  app.add_option("--domain", g.domains, "restrict to these domains (repeatable)");
  app.add_option("--year", g.year, "current year; the previous year is year-1");
  app.add_option("--seed", g.seed, "global RNG seed");
  app.add_flag("--mock", g.mock, "use the deterministic mock provider for every endpoint");
  app.add_flag("--force", g.force, "rerun even when the manifest is up-to-date");

  for (const auto& stage : pipeline::stage_names()) {
    if (pipeline::is_phased(stage)) continue;
    app.add_subcommand(stage, "run the " + stage + " stage");
  }

  auto* vote = app.add_subcommand("vote", "ballot sessions");
  vote->require_subcommand(1);
  std::string phase = "screening";
  for (const char* name : {"serve", "close", "tally"}) {
    auto* sc = vote->add_subcommand(name, std::string(name) + " the sessions of a phase");
    sc->add_option("--phase", phase, "screening or refinement")->capture_default_str();
  }

  auto* fixture_cmd = app.add_subcommand("fixture", "synthetic corpus tooling");
  fixture_cmd->require_subcommand(1);
  auto* gen = fixture_cmd->add_subcommand("gen", "write the synthetic corpus and its manifest");
  fixture::FixtureOptions fopts;
  std::string fixture_out;
  gen->add_option("--out", fixture_out, "output directory (default: the directory of paths.corpus_input)");
  gen->add_option("--works", fopts.works)->capture_default_str();
  gen->add_option("--keywords-per-domain", fopts.keywords_per_domain)->capture_default_str();
  gen->add_option("--fixture-seed", fopts.seed)->capture_default_str();

  auto* pipeline_cmd = app.add_subcommand("pipeline", "run every stage in order");
  pipeline_cmd->require_subcommand(1);
  pipeline_cmd->add_subcommand("run", "ingest through export");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      fs::path dir = fixture_out;
      if (dir.empty()) dir = load_config(g.config).resolve(load_config(g.config).corpus_input).parent_path();
      const auto m = fixture::generate_fixture(dir, fopts);
      std::cout << "fixture: " << m.works << " works in " << dir.string() << "\n";
      return 0;
    }
    if (pipeline_cmd->parsed()) {
      auto p = make_pipeline(g);
      const auto t0 = std::chrono::steady_clock::now();
      for (const auto& o : p->run_all(g.force)) print_outcome(o);
      std::cout << "pipeline: " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
      return 0;
    }
    if (vote->parsed()) {
      auto p = make_pipeline(g);
      const Stage ph = phase_from(phase);
      if (vote->got_subcommand("close")) {
        p->close_phase(ph);
        return 0;
      }
      const std::string stage = vote->got_subcommand("serve") ? "vote-serve" : "vote-tally";
      print_outcome(p->run(stage, ph, g.force));
      return 0;
    }
    for (auto* sc : app.get_subcommands()) {
      auto p = make_pipeline(g);
      print_outcome(p->run(sc->get_name(), std::nullopt, g.force));
    }
    return 0;
  } catch (const DependencyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
