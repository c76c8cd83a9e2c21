#pragma once

#include "trendscope/corpus.hpp"
#include "trendscope/rng.hpp"
#include "trendscope/types.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace trendscope::graph {

using NodeId = std::uint32_t;

// Undirected keyword co-occurrence graph for one (domain, year). Node ids index
// `nodes`, which is sorted by keyword name. Edge keys are (min, max).
struct CoocGraph {
  Domain domain = Domain::ArtificialIntelligence;
  int year = 0;
  std::vector<std::string> nodes;
  std::map<std::pair<NodeId, NodeId>, std::uint32_t> edges;

  std::optional<NodeId> id_of(std::string_view keyword) const;
  std::uint32_t weight(NodeId u, NodeId v) const;
  std::vector<bool> non_isolated() const;

  // Text form: header, one line per node, one line per unordered edge.
  std::string serialize() const;
  static CoocGraph deserialize(std::string_view text);
};

// Throws ContractViolation when works span several (domain, year) slices or is empty.
CoocGraph build_cooccurrence_graph(std::span<const corpus::WorkRecord> works);

// Commutative union with edge counts added. Both graphs must share (domain, year).
CoocGraph merge_graphs(const CoocGraph& a, const CoocGraph& b);

struct TrainConfig {
  std::size_t embedding_dim = 128;
  std::size_t walk_length = 20;
  std::size_t num_walks = 10;
  std::size_t window_size = 3;
  double p = 1.0;
  double q = 1.0;
  std::size_t num_negatives = 5;
  std::size_t epochs = 25;
  double learning_rate = 0.025;
  double min_learning_rate = 0.0001;
  std::uint64_t rng_seed = 1;
  bool uniform_weights = false;
  // Lock-free multi-threaded training. No determinism guarantee.
  bool parallel = false;
  unsigned threads = 0;

  void validate() const;
};

using Walk = std::vector<NodeId>;

struct Neighbor {
  NodeId id;
  double weight;
};

// node2vec transition sampler. With p == q == 1 the bias factors are all 1 and
// a step is weight-proportional over the current node's neighbors.
class WalkSampler {
 public:
  WalkSampler(const CoocGraph& graph, double p, double q, bool uniform_weights);

  NodeId first_step(NodeId cur, Rng& rng) const;
  NodeId step(NodeId prev, NodeId cur, Rng& rng) const;
  const std::vector<Neighbor>& neighbors(NodeId v) const { return adjacency_[v]; }

 private:
  bool adjacent(NodeId a, NodeId b) const;

  std::vector<std::vector<Neighbor>> adjacency_;  // sorted by id
  std::vector<std::vector<double>> cumulative_;
  double inv_p_;
  double inv_q_;
  bool first_order_;
};

// num_walks walks from every non-isolated node; start order is reshuffled per round.
std::vector<Walk> generate_walks(const CoocGraph& graph, const TrainConfig& cfg);

struct EmbeddingTable {
  Domain domain = Domain::ArtificialIntelligence;
  int year = 0;
  std::size_t dim = 0;
  std::vector<std::string> keys;  // sorted
  std::vector<float> data;        // keys.size() * dim, row-major

  std::size_t size() const { return keys.size(); }
  std::optional<std::size_t> find(std::string_view key) const;
  std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
  std::span<float> row(std::size_t i) { return {data.data() + i * dim, dim}; }

  // Binary: tag, domain, year, dim, count; rows of (key, dim little-endian f32).
  std::string serialize() const;
  static EmbeddingTable deserialize(std::string_view bytes);
  void write_csv(std::ostream& out) const;

  bool operator==(const EmbeddingTable&) const = default;
};

inline constexpr std::string_view kEmbeddingFormatTag = "TSEMB001";

struct TrainStats {
  std::vector<double> epoch_mean_loss;
  std::size_t pairs_per_epoch = 0;
};

// Skip-gram with negative sampling over the walks. Returns input-side vectors
// for every node that appears in a walk. Throws ContractViolation for an empty
// walk set or a single-token vocabulary.
EmbeddingTable train_skipgram(const CoocGraph& graph, const std::vector<Walk>& walks,
                              const TrainConfig& cfg, TrainStats* stats = nullptr);

}  // namespace trendscope::graph
