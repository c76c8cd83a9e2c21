#include "trendscope/trends.hpp"

#include "trendscope/csv.hpp"
#include "trendscope/errors.hpp"

#include <algorithm>
#include <cmath>

namespace trendscope::trends {

void SelectionThresholds::validate() const {
  auto fraction = [](double f) { return f > 0.0 && f < 1.0; };
  if (!fraction(sigma_perc_2) || !fraction(kw_hotness_threshold)) {
    throw ConfigError("selection thresholds: fractions must lie in (0, 1)");
  }
  if (kw_breakthrough_threshold < 1 || cluster_hotness_threshold < 1 || kw_question_threshold < 1) {
    throw ConfigError("selection thresholds: absolute ranks must be >= 1");
  }
}

std::map<std::string, std::size_t> ClusterSet::membership() const {
  std::map<std::string, std::size_t> out;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (const auto& m : clusters[c].members) out[m] = c;
  }
  return out;
}

void ClusterSet::write_csv(std::ostream& out, const hotness::RankMap& ranks) const {
  write_csv_row(out, {"cluster_index", "seed", "member", "member_rank"});
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (const auto& m : clusters[c].members) {
      auto it = ranks.find(m);
      write_csv_row(out, {std::to_string(c + 1), clusters[c].seed, m,
                          it == ranks.end() ? "" : std::to_string(it->second)});
    }
  }
}

ClusterSet cluster_by_hotness_priority(const hotness::HotnessTable& hotness,
                                       const graph::EmbeddingTable& emb,
                                       const SelectionThresholds& thr, double distance_threshold) {
  ClusterSet out;
  out.distance_threshold = distance_threshold;

  // Entries are ordered by rank; re-sort defensively so storage order never matters.
  std::vector<const hotness::HotnessEntry*> order;
  for (const auto& e : hotness.entries) order.push_back(&e);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    if (a->rank != b->rank) return a->rank < b->rank;
    return a->keyword < b->keyword;
  });

  const double n = static_cast<double>(hotness.entries.size());
  const int seed_rank_limit = static_cast<int>(std::ceil(thr.kw_hotness_threshold * n - 1e-9));
  std::vector<std::size_t> seed_rows;
  for (const auto* e : order) {
    const auto row = emb.find(e->keyword);
    if (!row) {
      out.unassigned.push_back(e->keyword);
      continue;
    }
    bool placed = false;
    for (std::size_t c = 0; c < out.clusters.size(); ++c) {
      if (hotness::cosine_distance(emb.row(*row), emb.row(seed_rows[c])) < distance_threshold) {
        out.clusters[c].members.push_back(e->keyword);
        placed = true;
        break;
      }
    }
    if (placed) continue;
    if (e->rank <= seed_rank_limit) {
      out.clusters.push_back({e->keyword, {e->keyword}});
      seed_rows.push_back(*row);
    } else {
      out.unassigned.push_back(e->keyword);
    }
  }
  return out;
}

ClusterSet cluster_by_hotness_priority(const hotness::HotnessTable& hotness,
                                       const graph::EmbeddingTable& emb,
                                       const SelectionThresholds& thr,
                                       std::span<const double> distance_sample) {
  const double threshold = hotness::nearest_rank_quantile(distance_sample, thr.sigma_perc_2);
  return cluster_by_hotness_priority(hotness, emb, thr, threshold);
}

std::set<std::string> select_breakthrough_keywords(const hotness::RankMap& rank_prev,
                                                   const hotness::RankMap& rank_curr,
                                                   const SelectionThresholds& thr) {
  std::set<std::string> out;
  for (const auto& [kw, prev] : rank_prev) {
    auto it = rank_curr.find(kw);
    if (it == rank_curr.end()) continue;
    if (prev <= thr.kw_breakthrough_threshold && it->second < prev) out.insert(kw);
  }
  return out;
}

QuestionSelection select_question_keywords(const ClusterSet& clusters,
                                           const hotness::RankMap& rank_curr,
                                           const std::map<std::string, int>& rank_delta,
                                           const SelectionThresholds& thr) {
  QuestionSelection out;
  for (const auto& c : clusters.clusters) {
    auto it = rank_curr.find(c.seed);
    if (it == rank_curr.end() || it->second > thr.cluster_hotness_threshold) continue;
    out.pool.insert(out.pool.end(), c.members.begin(), c.members.end());
  }
  if (out.pool.empty()) {
    out.no_eligible_clusters = true;
    return out;
  }
  const auto limit = static_cast<std::size_t>(thr.kw_question_threshold);
  auto rank_of = [&](const std::string& k) {
    auto it = rank_curr.find(k);
    return it == rank_curr.end() ? INT32_MAX : it->second;
  };

  // Set 1: absolute hotness rank.
  std::vector<std::string> by_rank = out.pool;
  std::sort(by_rank.begin(), by_rank.end(), [&](const std::string& a, const std::string& b) {
    const int ra = rank_of(a), rb = rank_of(b);
    if (ra != rb) return ra < rb;
    return a < b;
  });
  for (std::size_t i = 0; i < by_rank.size(); ++i) {
    const bool take = thr.global_rank_mode ? rank_of(by_rank[i]) <= thr.kw_question_threshold : i < limit;
    if (take) out.question_keywords_1.insert(by_rank[i]);
  }

  // Set 2: rank by descending rank improvement. Keywords absent from the
  // previous year have no delta and are not eligible.
  auto by_delta_cmp = [&](const std::string& a, const std::string& b) {
    const int da = rank_delta.at(a), db = rank_delta.at(b);
    if (da != db) return da > db;
    return a < b;
  };
  if (thr.global_rank_mode) {
    std::vector<std::string> all;
    for (const auto& [k, d] : rank_delta) all.push_back(k);
    std::sort(all.begin(), all.end(), by_delta_cmp);
    std::set<std::string> pool_set(out.pool.begin(), out.pool.end());
    for (std::size_t i = 0; i < all.size() && i < limit; ++i) {
      if (pool_set.count(all[i])) out.question_keywords_2.insert(all[i]);
    }
  } else {
    std::vector<std::string> with_delta;
    for (const auto& k : out.pool) {
      if (rank_delta.count(k)) with_delta.push_back(k);
    }
    std::sort(with_delta.begin(), with_delta.end(), by_delta_cmp);
    for (std::size_t i = 0; i < with_delta.size() && i < limit; ++i) {
      out.question_keywords_2.insert(with_delta[i]);
    }
  }
  return out;
}

void KeywordSelections::write_csv(std::ostream& out) const {
  write_csv_row(out, {"set_name", "keyword"});
  for (const auto& k : breakthrough_keywords) write_csv_row(out, {"breakthrough_keywords", k});
  for (const auto& k : question_keywords_1) write_csv_row(out, {"question_keywords_1", k});
  for (const auto& k : question_keywords_2) write_csv_row(out, {"question_keywords_2", k});
}

KeywordSelections KeywordSelections::read_csv(std::istream& in) {
  KeywordSelections s;
  const auto rows = trendscope::read_csv(in);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() < 2) throw IoError("selection csv: short row");
    const auto& set = rows[i][0];
    if (set == "breakthrough_keywords") s.breakthrough_keywords.insert(rows[i][1]);
    else if (set == "question_keywords_1") s.question_keywords_1.insert(rows[i][1]);
    else if (set == "question_keywords_2") s.question_keywords_2.insert(rows[i][1]);
    else throw IoError("selection csv: unknown set " + set);
  }
  return s;
}

}  // namespace trendscope::trends
