#pragma once

#include "trendscope/agents.hpp"
#include "trendscope/config.hpp"
#include "trendscope/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trendscope::pipeline {

struct StageOutcome {
  std::string stage;  // manifest name, e.g. "vote-serve-screening"
  bool skipped = false;
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;
  double seconds = 0.0;
};

// Full stage list in execution order. vote-serve and vote-tally run once per phase.
const std::vector<std::string>& stage_names();
bool is_phased(std::string_view stage);
std::string manifest_name(std::string_view stage, std::optional<Stage> phase);

struct Manifest {
  std::string stage;
  std::string config_hash;
  std::uint64_t seed = 0;
  bool mock = true;
  std::map<std::string, std::string> inputs;   // path -> sha256
  std::map<std::string, std::string> outputs;  // path relative to the output dir -> sha256
  double seconds = 0.0;
  std::size_t transport_calls = 0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& j);
};

class Pipeline {
 public:
  // Mock configs force every endpoint to the deterministic mock provider.
  explicit Pipeline(PipelineConfig config);
  ~Pipeline();

  // Throws DependencyError naming the upstream stage when inputs are missing.
  StageOutcome run(std::string_view stage, std::optional<Stage> phase = std::nullopt, bool force = false);
  std::vector<StageOutcome> run_all(bool force = false);

  // Closes every session of a phase without serving.
  void close_phase(Stage phase);

  void set_log(std::function<void(const std::string&)> log) { log_ = std::move(log); }
  const PipelineConfig& config() const { return config_; }
  const std::filesystem::path& out_dir() const { return out_; }
  const agents::AgentClient& client() const;
  std::filesystem::path manifest_path(const std::string& name) const;

 private:
  struct Work;
  using Body = std::function<void(Work&)>;
  StageOutcome execute(const std::string& name, const std::vector<std::pair<std::filesystem::path, std::string>>& deps,
                       const Body& body, bool force);

  void stage_ingest(Work& w);
  void stage_graph(Work& w);
  void stage_embed(Work& w);
  void stage_hotness(Work& w);
  void stage_cluster(Work& w);
  void stage_select(Work& w);
  void stage_context(Work& w);
  void stage_propose(Work& w);
  void stage_ensemble(Work& w);
  void stage_vote_serve(Work& w, Stage phase);
  void stage_vote_tally(Work& w, Stage phase);
  void stage_analyze(Work& w);
  void stage_export(Work& w);

  std::vector<std::pair<std::filesystem::path, std::string>> deps_for(std::string_view stage,
                                                                      std::optional<Stage> phase) const;
  std::string session_id(Domain d, Category c, Stage phase) const;
  void log(const std::string& line) const;

  PipelineConfig config_;
  std::filesystem::path out_;
  std::unique_ptr<agents::AgentClient> client_;
  std::function<void(const std::string&)> log_;
};

// Relative path of a per-slice artifact, e.g. "embed/Physics_2025.emb".
std::string slice_file(std::string_view dir, Domain d, int year, std::string_view ext);
std::string pool_file(std::string_view dir, Domain d, Category c, std::string_view ext);

}  // namespace trendscope::pipeline
