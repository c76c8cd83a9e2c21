#pragma once

#include "trendscope/graph_embed.hpp"
#include "trendscope/types.hpp"

#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace trendscope::hotness {

struct HotnessParams {
  double sigma_perc_1 = 0.0005;  // quantile fraction, not percent
  std::size_t sample_size = 1'000'000;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

// 1 - cos(a, b), clamped to [0, 2]. Norms must be non-zero.
double cosine_distance(std::span<const float> a, std::span<const float> b);

// sample_size unordered pairs drawn uniformly with replacement, ascending.
// Throws DefinednessError naming the first zero-norm keyword.
std::vector<double> sample_pairwise_distances(const graph::EmbeddingTable& table,
                                              const HotnessParams& params);

// Nearest-rank order statistic: sample[ceil(q * n) - 1].
double nearest_rank_quantile(std::span<const double> sorted_sample, double q);

// As nearest_rank_quantile, but a zero result is a DegenerateBandwidthError.
double bandwidth_from_percentile(std::span<const double> sorted_sample, double q);

struct HotnessEntry {
  std::string keyword;
  double score = 0.0;
  int rank = 0;
  std::uint32_t freq = 0;
  bool embedded = true;
};

using RankMap = std::map<std::string, int>;

// Entries are stored in rank order (rank 1 first).
struct HotnessTable {
  Domain domain = Domain::ArtificialIntelligence;
  int year = 0;
  double sigma = 0.0;
  std::vector<HotnessEntry> entries;

  RankMap ranks() const;
  std::map<std::string, double> scores() const;
  const HotnessEntry* find(const std::string& keyword) const;

  void write_csv(std::ostream& out) const;
  static HotnessTable read_csv(std::istream& in, Domain domain, int year);
};

struct HotnessOptions {
  // exp(-d^2 / (2 s^2)) when true, exp(-d^2 / s^2) otherwise.
  bool kernel_half_factor = true;
  unsigned threads = 1;
};

// score(k) = sum_{j != k} freq(j) * exp(-d(k, j)^2 / (2 sigma^2)) over embedded
// keywords j. Keywords in freq without an embedding score 0 and rank after
// every embedded keyword. Throws ContractViolation when an embedded keyword
// has no frequency or sigma <= 0.
HotnessTable compute_hotness(const graph::EmbeddingTable& table,
                             const std::map<std::string, std::uint32_t>& freq, double sigma,
                             const HotnessOptions& opts = {});

// prev_rank - curr_rank for keywords ranked in both years (positive = rose).
std::map<std::string, int> rank_change(const HotnessTable& prev, const HotnessTable& curr);

// curr_score - prev_score for keywords present in both years.
std::map<std::string, double> score_change(const HotnessTable& prev, const HotnessTable& curr);

}  // namespace trendscope::hotness
