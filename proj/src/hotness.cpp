#include "trendscope/hotness.hpp"

#include "trendscope/csv.hpp"
#include "trendscope/errors.hpp"
#include "trendscope/rng.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace trendscope::hotness {

void HotnessParams::validate() const {
  if (!(sigma_perc_1 > 0.0 && sigma_perc_1 < 1.0)) throw ConfigError("sigma_perc_1 must lie in (0, 1)");
  if (sample_size < 1000) throw ConfigError("sample_size must be >= 1000");
}

namespace {

double norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

double clamp_distance(double d) { return std::clamp(d, 0.0, 2.0); }

// Unit-normalized rows in double precision.
std::vector<double> normalized_rows(const graph::EmbeddingTable& table) {
  std::vector<double> out(table.size() * table.dim);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto r = table.row(i);
    const double n = norm(r);
    if (n == 0.0) {
      throw DefinednessError("cosine distance undefined: zero-norm vector for '" + table.keys[i] + "'",
                             table.keys[i]);
    }
    for (std::size_t d = 0; d < table.dim; ++d) out[i * table.dim + d] = r[d] / n;
  }
  return out;
}

double unit_distance(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t d = 0; d < dim; ++d) s += a[d] * b[d];
  return clamp_distance(1.0 - s);
}

}  // namespace

double cosine_distance(std::span<const float> a, std::span<const float> b) {
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw DefinednessError("cosine distance undefined for zero-norm vector", "");
  return clamp_distance(1.0 - dot(a, b) / (na * nb));
}

std::vector<double> sample_pairwise_distances(const graph::EmbeddingTable& table,
                                              const HotnessParams& params) {
  if (table.size() < 2) throw ContractViolation("sample_pairwise_distances: need at least 2 vectors");
  const auto unit = normalized_rows(table);
  const std::size_t n = table.size();
  const std::size_t dim = table.dim;
  Rng rng(derive_seed(params.rng_seed, "distance-sample"));
  std::vector<double> sample;
  sample.reserve(params.sample_size);
  for (std::size_t s = 0; s < params.sample_size; ++s) {
    const std::size_t i = rng.below(n);
    std::size_t j = rng.below(n - 1);
    if (j >= i) ++j;
    sample.push_back(unit_distance(&unit[i * dim], &unit[j * dim], dim));
  }
  std::sort(sample.begin(), sample.end());
  return sample;
}

double nearest_rank_quantile(std::span<const double> sorted_sample, double q) {
  if (sorted_sample.empty()) throw ContractViolation("quantile of an empty sample");
  if (!(q > 0.0 && q < 1.0)) throw ContractViolation("quantile fraction must lie in (0, 1)");
  const double n = static_cast<double>(sorted_sample.size());
  // The epsilon absorbs representation error in q (0.0005 * 1e6 must be 500).
  double rank = std::ceil(q * n - 1e-9);
  rank = std::clamp(rank, 1.0, n);
  return sorted_sample[static_cast<std::size_t>(rank) - 1];
}

double bandwidth_from_percentile(std::span<const double> sorted_sample, double q) {
  const double sigma = nearest_rank_quantile(sorted_sample, q);
  if (sigma <= 0.0) {
    throw DegenerateBandwidthError("bandwidth is 0: sampled pairs at this quantile are identical");
  }
  return sigma;
}

// ---- table ----

RankMap HotnessTable::ranks() const {
  RankMap out;
  for (const auto& e : entries) out[e.keyword] = e.rank;
  return out;
}

std::map<std::string, double> HotnessTable::scores() const {
  std::map<std::string, double> out;
  for (const auto& e : entries) out[e.keyword] = e.score;
  return out;
}

const HotnessEntry* HotnessTable::find(const std::string& keyword) const {
  for (const auto& e : entries) {
    if (e.keyword == keyword) return &e;
  }
  return nullptr;
}

void HotnessTable::write_csv(std::ostream& out) const {
  write_csv_row(out, {"keyword", "score", "rank", "freq"});
  for (const auto& e : entries) {
    write_csv_row(out, {e.keyword, format_double(e.score), std::to_string(e.rank), std::to_string(e.freq)});
  }
}

HotnessTable HotnessTable::read_csv(std::istream& in, Domain domain, int year) {
  HotnessTable t;
  t.domain = domain;
  t.year = year;
  const auto rows = trendscope::read_csv(in);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() < 4) throw IoError("hotness csv: short row");
    HotnessEntry e;
    e.keyword = r[0];
    e.score = std::stod(r[1]);
    e.rank = std::stoi(r[2]);
    e.freq = static_cast<std::uint32_t>(std::stoul(r[3]));
    t.entries.push_back(std::move(e));
  }
  return t;
}

HotnessTable compute_hotness(const graph::EmbeddingTable& table,
                             const std::map<std::string, std::uint32_t>& freq, double sigma,
                             const HotnessOptions& opts) {
  if (!(sigma > 0.0)) throw ContractViolation("compute_hotness: sigma must be > 0");
  const std::size_t n = table.size();
  const std::size_t dim = table.dim;
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = freq.find(table.keys[i]);
    if (it == freq.end()) {
      throw ContractViolation("compute_hotness: no frequency for embedded keyword '" + table.keys[i] + "'");
    }
    f[i] = it->second;
  }
  const auto unit = n ? normalized_rows(table) : std::vector<double>{};
  const double denom = opts.kernel_half_factor ? 2.0 * sigma * sigma : sigma * sigma;

  std::vector<double> score(n, 0.0);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == k) continue;
        const double d = unit_distance(&unit[k * dim], &unit[j * dim], dim);
        s += f[j] * std::exp(-(d * d) / denom);
      }
      score[k] = s;
    }
  };
  const unsigned threads = std::max(1u, opts.threads);
  if (threads == 1 || n < 64) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = std::min(n, t * chunk), e = std::min(n, b + chunk);
      pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }

  HotnessTable out;
  out.domain = table.domain;
  out.year = table.year;
  out.sigma = sigma;
  for (std::size_t i = 0; i < n; ++i) {
    out.entries.push_back({table.keys[i], score[i], 0, freq.at(table.keys[i]), true});
  }
  std::sort(out.entries.begin(), out.entries.end(), [](const HotnessEntry& a, const HotnessEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.keyword < b.keyword;
  });
  // Isolated keywords: no embedding, score 0, after all embedded ones by name.
  for (const auto& [kw, count] : freq) {
    if (!table.find(kw)) out.entries.push_back({kw, 0.0, 0, count, false});
  }
  for (std::size_t i = 0; i < out.entries.size(); ++i) out.entries[i].rank = static_cast<int>(i + 1);
  return out;
}

std::map<std::string, int> rank_change(const HotnessTable& prev, const HotnessTable& curr) {
  const auto prev_ranks = prev.ranks();
  std::map<std::string, int> out;
  for (const auto& e : curr.entries) {
    auto it = prev_ranks.find(e.keyword);
    if (it != prev_ranks.end()) out[e.keyword] = it->second - e.rank;
  }
  return out;
}

std::map<std::string, double> score_change(const HotnessTable& prev, const HotnessTable& curr) {
  const auto prev_scores = prev.scores();
  std::map<std::string, double> out;
  for (const auto& e : curr.entries) {
    auto it = prev_scores.find(e.keyword);
    if (it != prev_scores.end()) out[e.keyword] = e.score - it->second;
  }
  return out;
}

}  // namespace trendscope::hotness
