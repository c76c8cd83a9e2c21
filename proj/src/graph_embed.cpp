#include "trendscope/graph_embed.hpp"

#include "trendscope/csv.hpp"
#include "trendscope/errors.hpp"
#include "trendscope/text.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>
#include <thread>

namespace trendscope::graph {

// ---- graph ----

std::optional<NodeId> CoocGraph::id_of(std::string_view keyword) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), keyword,
                             [](const std::string& a, std::string_view b) { return a < b; });
  if (it == nodes.end() || *it != keyword) return std::nullopt;
  return static_cast<NodeId>(it - nodes.begin());
}

std::uint32_t CoocGraph::weight(NodeId u, NodeId v) const {
  if (u == v) return 0;
  auto it = edges.find({std::min(u, v), std::max(u, v)});
  return it == edges.end() ? 0 : it->second;
}

std::vector<bool> CoocGraph::non_isolated() const {
  std::vector<bool> out(nodes.size(), false);
  for (const auto& [e, w] : edges) {
    out[e.first] = true;
    out[e.second] = true;
  }
  return out;
}

std::string CoocGraph::serialize() const {
  std::ostringstream out;
  out << "trendscope-graph/1\t" << to_string(domain) << '\t' << year << '\t' << nodes.size() << '\t'
      << edges.size() << '\n';
  for (const auto& n : nodes) out << n << '\n';
  for (const auto& [e, w] : edges) out << e.first << '\t' << e.second << '\t' << w << '\n';
  return out.str();
}

CoocGraph CoocGraph::deserialize(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw IoError("graph: empty input");
  std::istringstream header(lines[0]);
  std::string tag, domain_name;
  std::size_t n_nodes = 0, n_edges = 0;
  CoocGraph g;
  header >> tag >> domain_name >> g.year >> n_nodes >> n_edges;
  if (tag != "trendscope-graph/1") throw IoError("graph: bad format tag");
  auto d = parse_domain(domain_name);
  if (!d) throw IoError("graph: unknown domain " + domain_name);
  g.domain = *d;
  if (lines.size() < 1 + n_nodes + n_edges) throw IoError("graph: truncated");
  g.nodes.assign(lines.begin() + 1, lines.begin() + 1 + static_cast<std::ptrdiff_t>(n_nodes));
  for (std::size_t i = 0; i < n_edges; ++i) {
    std::istringstream row(lines[1 + n_nodes + i]);
    NodeId u = 0, v = 0;
    std::uint32_t w = 0;
    row >> u >> v >> w;
    if (!row || u >= v || v >= n_nodes) throw IoError("graph: bad edge line");
    g.edges[{u, v}] = w;
  }
  return g;
}

CoocGraph build_cooccurrence_graph(std::span<const corpus::WorkRecord> works) {
  if (works.empty()) throw ContractViolation("build_cooccurrence_graph: empty slice");
  CoocGraph g;
  g.domain = works.front().domain;
  g.year = works.front().year;
  std::set<std::string> names;
  for (const auto& w : works) {
    if (w.domain != g.domain || w.year != g.year) {
      throw ContractViolation("build_cooccurrence_graph: works span several (domain, year) slices");
    }
    for (const auto& k : w.keywords) names.insert(k.name);
  }
  g.nodes.assign(names.begin(), names.end());
  std::vector<NodeId> ids;
  for (const auto& w : works) {
    ids.clear();
    for (const auto& k : w.keywords) ids.push_back(*g.id_of(k.name));
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = i + 1; j < ids.size(); ++j) ++g.edges[{ids[i], ids[j]}];
    }
  }
  return g;
}

CoocGraph merge_graphs(const CoocGraph& a, const CoocGraph& b) {
  if (a.domain != b.domain || a.year != b.year) {
    throw ContractViolation("merge_graphs: graphs belong to different slices");
  }
  CoocGraph out;
  out.domain = a.domain;
  out.year = a.year;
  std::set<std::string> names(a.nodes.begin(), a.nodes.end());
  names.insert(b.nodes.begin(), b.nodes.end());
  out.nodes.assign(names.begin(), names.end());
  for (const CoocGraph* src : {&a, &b}) {
    for (const auto& [e, w] : src->edges) {
      NodeId u = *out.id_of(src->nodes[e.first]);
      NodeId v = *out.id_of(src->nodes[e.second]);
      out.edges[{std::min(u, v), std::max(u, v)}] += w;
    }
  }
  return out;
}

// ---- config ----

void TrainConfig::validate() const {
  if (embedding_dim < 1 || walk_length < 1 || num_walks < 1 || window_size < 1 ||
      num_negatives < 1 || epochs < 1) {
    throw ConfigError("TrainConfig: all counts must be >= 1");
  }
  if (!(p > 0) || !(q > 0)) throw ConfigError("TrainConfig: p and q must be > 0");
  if (!(learning_rate > 0) || !(min_learning_rate > 0)) {
    throw ConfigError("TrainConfig: learning rates must be > 0");
  }
}

// ---- walks ----

WalkSampler::WalkSampler(const CoocGraph& graph, double p, double q, bool uniform_weights)
    : adjacency_(graph.nodes.size()),
      cumulative_(graph.nodes.size()),
      inv_p_(1.0 / p),
      inv_q_(1.0 / q),
      first_order_(p == 1.0 && q == 1.0) {
  for (const auto& [e, w] : graph.edges) {
    const double weight = uniform_weights ? 1.0 : static_cast<double>(w);
    adjacency_[e.first].push_back({e.second, weight});
    adjacency_[e.second].push_back({e.first, weight});
  }
  for (std::size_t v = 0; v < adjacency_.size(); ++v) {
    auto& adj = adjacency_[v];
    std::sort(adj.begin(), adj.end(), [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; });
    double acc = 0.0;
    for (const auto& n : adj) cumulative_[v].push_back(acc += n.weight);
  }
}

bool WalkSampler::adjacent(NodeId a, NodeId b) const {
  const auto& adj = adjacency_[a];
  auto it = std::lower_bound(adj.begin(), adj.end(), b,
                             [](const Neighbor& n, NodeId id) { return n.id < id; });
  return it != adj.end() && it->id == b;
}

namespace {

std::size_t sample_cumulative(const std::vector<double>& cum, Rng& rng) {
  const double r = rng.uniform() * cum.back();
  auto it = std::upper_bound(cum.begin(), cum.end(), r);
  if (it == cum.end()) --it;
  return static_cast<std::size_t>(it - cum.begin());
}

}  // namespace

NodeId WalkSampler::first_step(NodeId cur, Rng& rng) const {
  return adjacency_[cur][sample_cumulative(cumulative_[cur], rng)].id;
}

NodeId WalkSampler::step(NodeId prev, NodeId cur, Rng& rng) const {
  if (first_order_) return first_step(cur, rng);
  const auto& adj = adjacency_[cur];
  std::vector<double> cum;
  cum.reserve(adj.size());
  double acc = 0.0;
  for (const auto& n : adj) {
    double bias = inv_q_;
    if (n.id == prev) bias = inv_p_;
    else if (adjacent(prev, n.id)) bias = 1.0;
    cum.push_back(acc += n.weight * bias);
  }
  return adj[sample_cumulative(cum, rng)].id;
}

std::vector<Walk> generate_walks(const CoocGraph& graph, const TrainConfig& cfg) {
  cfg.validate();
  if (graph.nodes.empty()) throw ContractViolation("generate_walks: empty graph");
  WalkSampler sampler(graph, cfg.p, cfg.q, cfg.uniform_weights);
  const auto live = graph.non_isolated();
  std::vector<NodeId> starts;
  for (NodeId v = 0; v < live.size(); ++v) {
    if (live[v]) starts.push_back(v);
  }
  Rng rng(derive_seed(cfg.rng_seed, "walks"));
  std::vector<Walk> walks;
  walks.reserve(starts.size() * cfg.num_walks);
  for (std::size_t round = 0; round < cfg.num_walks; ++round) {
    rng.shuffle(starts);
    for (NodeId s : starts) {
      Walk walk;
      walk.reserve(cfg.walk_length);
      walk.push_back(s);
      while (walk.size() < cfg.walk_length) {
        const NodeId cur = walk.back();
        if (sampler.neighbors(cur).empty()) break;
        walk.push_back(walk.size() == 1 ? sampler.first_step(cur, rng)
                                        : sampler.step(walk[walk.size() - 2], cur, rng));
      }
      walks.push_back(std::move(walk));
    }
  }
  return walks;
}

// ---- embedding table ----

std::optional<std::size_t> EmbeddingTable::find(std::string_view key) const {
  auto it = std::lower_bound(keys.begin(), keys.end(), key,
                             [](const std::string& a, std::string_view b) { return a < b; });
  if (it == keys.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - keys.begin());
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::string_view in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw IoError("embedding table: truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += 4;
  return v;
}

}  // namespace

std::string EmbeddingTable::serialize() const {
  std::string out(kEmbeddingFormatTag);
  put_u32(out, static_cast<std::uint32_t>(domain));
  put_u32(out, static_cast<std::uint32_t>(year));
  put_u32(out, static_cast<std::uint32_t>(dim));
  put_u32(out, static_cast<std::uint32_t>(keys.size()));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    put_u32(out, static_cast<std::uint32_t>(keys[i].size()));
    out += keys[i];
    for (float f : row(i)) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

EmbeddingTable EmbeddingTable::deserialize(std::string_view bytes) {
  if (bytes.substr(0, kEmbeddingFormatTag.size()) != kEmbeddingFormatTag) {
    throw IoError("embedding table: bad format tag");
  }
  std::size_t pos = kEmbeddingFormatTag.size();
  EmbeddingTable t;
  const auto domain_raw = get_u32(bytes, pos);
  if (domain_raw >= kAllDomains.size()) throw IoError("embedding table: bad domain");
  t.domain = static_cast<Domain>(domain_raw);
  t.year = static_cast<int>(get_u32(bytes, pos));
  t.dim = get_u32(bytes, pos);
  const std::size_t count = get_u32(bytes, pos);
  t.keys.reserve(count);
  t.data.reserve(count * t.dim);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t len = get_u32(bytes, pos);
    if (pos + len > bytes.size()) throw IoError("embedding table: truncated key");
    t.keys.emplace_back(bytes.substr(pos, len));
    pos += len;
    for (std::size_t d = 0; d < t.dim; ++d) t.data.push_back(std::bit_cast<float>(get_u32(bytes, pos)));
  }
  return t;
}

void EmbeddingTable::write_csv(std::ostream& out) const {
  std::vector<std::string> header{"keyword"};
  for (std::size_t d = 0; d < dim; ++d) header.push_back("v" + std::to_string(d));
  write_csv_row(out, header);
  char buf[32];
  for (std::size_t i = 0; i < keys.size(); ++i) {
    out << csv_escape(keys[i]);
    for (float f : row(i)) {
      auto res = std::to_chars(buf, buf + sizeof buf, f);
      out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

// ---- skip-gram ----

namespace {

// Fixed-order 8-lane reduction; deterministic and friendly to the vectorizer.
inline float dot8(const float* a, const float* b, std::size_t n) {
  float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) acc[j] += a[i + j] * b[i + j];
  }
  float s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline float fsigmoid(float x) {
  return x >= 0 ? 1.0f / (1.0f + std::exp(-x)) : std::exp(x) / (1.0f + std::exp(x));
}

inline double fneg_log_sigmoid(double x) {
  return x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

struct NoiseTable {
  std::vector<double> cumulative;  // over vocab indices, counts^0.75
  std::uint32_t sample(Rng& rng) const {
    return static_cast<std::uint32_t>(sample_cumulative(cumulative, rng));
  }
};

// Shared state of one training run.
struct Model {
  std::size_t dim;
  std::vector<float> input;
  std::vector<float> output;
};

// One gradient step on a (center, context, negatives) triple. Every dot product
// uses the pre-step parameters, so the update is the exact gradient of
// sgns_loss. Shared=true switches to relaxed atomic element access for the
// lock-free mode.
template <bool Shared>
double train_pair(Model& m, std::uint32_t center, std::uint32_t context, const NoiseTable& noise,
                  std::size_t num_negatives, float lr, Rng& rng, std::vector<float>& grad,
                  std::vector<float>& vbuf, std::vector<float>& ubuf,
                  std::vector<std::uint32_t>& targets, std::vector<float>& coefs) {
  const std::size_t dim = m.dim;
  float* v = m.input.data() + static_cast<std::size_t>(center) * dim;
  targets.clear();
  targets.push_back(context);
  for (std::size_t k = 0; k < num_negatives; ++k) targets.push_back(noise.sample(rng));
  if constexpr (Shared) {
    for (std::size_t i = 0; i < dim; ++i) vbuf[i] = std::atomic_ref<float>(v[i]).load(std::memory_order_relaxed);
  }
  const float* vsrc = Shared ? vbuf.data() : v;

  double loss = 0.0;
  coefs.resize(targets.size());
  std::fill(grad.begin(), grad.end(), 0.0f);
  for (std::size_t k = 0; k < targets.size(); ++k) {
    float* u = m.output.data() + static_cast<std::size_t>(targets[k]) * dim;
    const float* usrc = u;
    if constexpr (Shared) {
      for (std::size_t i = 0; i < dim; ++i) ubuf[i] = std::atomic_ref<float>(u[i]).load(std::memory_order_relaxed);
      usrc = ubuf.data();
    }
    const float f = dot8(vsrc, usrc, dim);
    const float label = k == 0 ? 1.0f : 0.0f;
    loss += k == 0 ? fneg_log_sigmoid(f) : fneg_log_sigmoid(-static_cast<double>(f));
    // Descent step on -log-likelihood: coefficient (label - s(f)) * lr.
    const float g = (label - fsigmoid(f)) * lr;
    coefs[k] = g;
    for (std::size_t i = 0; i < dim; ++i) grad[i] += g * usrc[i];
  }
  for (std::size_t k = 0; k < targets.size(); ++k) {
    float* u = m.output.data() + static_cast<std::size_t>(targets[k]) * dim;
    const float g = coefs[k];
    if constexpr (Shared) {
      for (std::size_t i = 0; i < dim; ++i) {
        std::atomic_ref<float> cell(u[i]);
        cell.store(cell.load(std::memory_order_relaxed) + g * vsrc[i], std::memory_order_relaxed);
      }
    } else {
      for (std::size_t i = 0; i < dim; ++i) u[i] += g * vsrc[i];
    }
  }
  if constexpr (Shared) {
    for (std::size_t i = 0; i < dim; ++i) {
      std::atomic_ref<float> cell(v[i]);
      cell.store(cell.load(std::memory_order_relaxed) + grad[i], std::memory_order_relaxed);
    }
  } else {
    for (std::size_t i = 0; i < dim; ++i) v[i] += grad[i];
  }
  return loss;
}

std::size_t count_pairs(const std::vector<Walk>& walks, std::size_t window) {
  std::size_t pairs = 0;
  for (const auto& w : walks) {
    const std::size_t n = w.size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = i >= window ? i - window : 0;
      const std::size_t hi = std::min(n - 1, i + window);
      pairs += hi - lo;
    }
  }
  return pairs;
}

template <bool Shared>
double run_walks(Model& m, const std::vector<std::vector<std::uint32_t>>& walks, std::size_t begin,
                 std::size_t end, const TrainConfig& cfg, const NoiseTable& noise, Rng& rng,
                 std::atomic<std::size_t>& progress, std::size_t total_pairs) {
  std::vector<float> grad(m.dim), vbuf(m.dim), ubuf(m.dim), coefs;
  std::vector<std::uint32_t> targets;
  const double lr0 = cfg.learning_rate;
  const double lr_min = cfg.min_learning_rate;
  double loss = 0.0;
  for (std::size_t w = begin; w < end; ++w) {
    const auto& walk = walks[w];
    const std::size_t n = walk.size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = i >= cfg.window_size ? i - cfg.window_size : 0;
      const std::size_t hi = std::min(n - 1, i + cfg.window_size);
      for (std::size_t j = lo; j <= hi; ++j) {
        if (j == i) continue;
        const std::size_t step = progress.fetch_add(1, std::memory_order_relaxed);
        const double frac = static_cast<double>(step) / static_cast<double>(total_pairs);
        const float lr = static_cast<float>(std::max(lr_min, lr0 - (lr0 - lr_min) * frac));
        loss += train_pair<Shared>(m, walk[i], walk[j], noise, cfg.num_negatives, lr, rng, grad,
                                   vbuf, ubuf, targets, coefs);
      }
    }
  }
  return loss;
}

}  // namespace

EmbeddingTable train_skipgram(const CoocGraph& graph, const std::vector<Walk>& walks,
                              const TrainConfig& cfg, TrainStats* stats) {
  cfg.validate();
  if (walks.empty()) throw ContractViolation("train_skipgram: empty walk set");

  // Vocabulary = nodes that occur in walks, in node (name) order.
  std::vector<std::uint64_t> node_counts(graph.nodes.size(), 0);
  for (const auto& w : walks) {
    for (NodeId v : w) {
      if (v >= graph.nodes.size()) throw ContractViolation("train_skipgram: walk references unknown node");
      ++node_counts[v];
    }
  }
  std::vector<std::int64_t> vocab_of(graph.nodes.size(), -1);
  std::vector<NodeId> vocab;
  for (NodeId v = 0; v < node_counts.size(); ++v) {
    if (node_counts[v] > 0) {
      vocab_of[v] = static_cast<std::int64_t>(vocab.size());
      vocab.push_back(v);
    }
  }
  if (vocab.size() < 2) {
    throw ContractViolation("train_skipgram: vocabulary of size 1 leaves no negatives to sample");
  }

  std::vector<std::vector<std::uint32_t>> tokens;
  tokens.reserve(walks.size());
  for (const auto& w : walks) {
    std::vector<std::uint32_t> t;
    t.reserve(w.size());
    for (NodeId v : w) t.push_back(static_cast<std::uint32_t>(vocab_of[v]));
    tokens.push_back(std::move(t));
  }

  NoiseTable noise;
  double acc = 0.0;
  for (NodeId v : vocab) noise.cumulative.push_back(acc += std::pow(static_cast<double>(node_counts[v]), 0.75));

  const std::size_t dim = cfg.embedding_dim;
  Model model{dim, std::vector<float>(vocab.size() * dim), std::vector<float>(vocab.size() * dim, 0.0f)};
  {
    Rng init(derive_seed(cfg.rng_seed, "init"));
    const double half = 0.5 / static_cast<double>(dim);
    for (float& x : model.input) x = static_cast<float>((init.uniform() * 2.0 - 1.0) * half);
  }

  const std::size_t pairs_per_epoch = count_pairs(walks, cfg.window_size);
  const std::size_t total_pairs = std::max<std::size_t>(1, pairs_per_epoch * cfg.epochs);
  std::atomic<std::size_t> progress{0};
  if (stats) {
    stats->epoch_mean_loss.clear();
    stats->pairs_per_epoch = pairs_per_epoch;
  }

  Rng neg_rng(derive_seed(cfg.rng_seed, "negatives"));
  const unsigned threads =
      cfg.parallel ? std::max(1u, cfg.threads ? cfg.threads : std::thread::hardware_concurrency()) : 1;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss = 0.0;
    if (threads <= 1) {
      loss = run_walks<false>(model, tokens, 0, tokens.size(), cfg, noise, neg_rng, progress, total_pairs);
    } else {
      std::vector<double> partial(threads, 0.0);
      std::vector<std::thread> pool;
      const std::size_t chunk = (tokens.size() + threads - 1) / threads;
      for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
          Rng rng(derive_seed(cfg.rng_seed, "negatives/" + std::to_string(epoch) + "/" + std::to_string(t)));
          const std::size_t b = std::min(tokens.size(), t * chunk);
          const std::size_t e = std::min(tokens.size(), b + chunk);
          partial[t] = run_walks<true>(model, tokens, b, e, cfg, noise, rng, progress, total_pairs);
        });
      }
      for (auto& th : pool) th.join();
      for (double p : partial) loss += p;
    }
    if (stats) stats->epoch_mean_loss.push_back(pairs_per_epoch ? loss / static_cast<double>(pairs_per_epoch) : 0.0);
  }

  EmbeddingTable table;
  table.domain = graph.domain;
  table.year = graph.year;
  table.dim = dim;
  table.keys.reserve(vocab.size());
  for (NodeId v : vocab) table.keys.push_back(graph.nodes[v]);
  table.data = std::move(model.input);
  for (float x : table.data) {
    if (!std::isfinite(x)) throw Error("train_skipgram: non-finite embedding value");
  }
  return table;
}

}  // namespace trendscope::graph
