#pragma once

#include "trendscope/graph_embed.hpp"
#include "trendscope/hotness.hpp"

#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace trendscope::trends {

struct SelectionThresholds {
  double sigma_perc_2 = 0.0005;           // quantile fraction for distance_threshold
  double kw_hotness_threshold = 0.05;     // fraction of the year's keyword count
  int kw_breakthrough_threshold = 50;     // absolute rank
  int cluster_hotness_threshold = 5;      // absolute rank of a cluster's seed
  int kw_question_threshold = 5;          // absolute rank
  // Question-set ranks are recomputed within the eligible pool unless set.
  bool global_rank_mode = false;

  void validate() const;
};

struct Cluster {
  std::string seed;
  std::vector<std::string> members;  // assignment order; members[0] == seed
};

struct ClusterSet {
  double distance_threshold = 0.0;
  std::vector<Cluster> clusters;      // creation order == seed rank order
  std::vector<std::string> unassigned;

  // Cluster index per member keyword.
  std::map<std::string, std::size_t> membership() const;
  void write_csv(std::ostream& out, const hotness::RankMap& ranks) const;
};

// Greedy pass over keywords in rank order. A keyword joins the first cluster
// (creation order) whose seed is strictly closer than distance_threshold,
// otherwise seeds a new cluster if its rank <= ceil(kw_hotness_threshold * N),
// otherwise stays unassigned. Keywords without an embedding are unassigned.
ClusterSet cluster_by_hotness_priority(const hotness::HotnessTable& hotness,
                                       const graph::EmbeddingTable& emb,
                                       const SelectionThresholds& thr, double distance_threshold);

// Derives distance_threshold from the sorted distance sample at sigma_perc_2.
ClusterSet cluster_by_hotness_priority(const hotness::HotnessTable& hotness,
                                       const graph::EmbeddingTable& emb,
                                       const SelectionThresholds& thr,
                                       std::span<const double> distance_sample);

// {k : rank_prev(k) <= kw_breakthrough_threshold and rank_curr(k) < rank_prev(k)}
std::set<std::string> select_breakthrough_keywords(const hotness::RankMap& rank_prev,
                                                   const hotness::RankMap& rank_curr,
                                                   const SelectionThresholds& thr);

struct QuestionSelection {
  std::set<std::string> question_keywords_1;
  std::set<std::string> question_keywords_2;
  bool no_eligible_clusters = false;
  std::vector<std::string> pool;  // eligible keywords, cluster order
};

QuestionSelection select_question_keywords(const ClusterSet& clusters,
                                           const hotness::RankMap& rank_curr,
                                           const std::map<std::string, int>& rank_delta,
                                           const SelectionThresholds& thr);

struct KeywordSelections {
  std::set<std::string> breakthrough_keywords;
  std::set<std::string> question_keywords_1;
  std::set<std::string> question_keywords_2;

  void write_csv(std::ostream& out) const;
  static KeywordSelections read_csv(std::istream& in);
};

}  // namespace trendscope::trends
