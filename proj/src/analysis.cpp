#include "trendscope/analysis.hpp"

#include "trendscope/csv.hpp"
#include "trendscope/errors.hpp"

#include <algorithm>
#include <cmath>

namespace trendscope::analysis {

using nlohmann::json;

VoteDistribution vote_distribution(const ballot::Tally& tally, agents::VoterKind kind) {
  VoteDistribution d;
  d.kind = kind;
  d.candidate_order = tally.candidate_order;
  double total = 0.0;
  std::vector<double> raw;
  for (const auto& id : tally.candidate_order) {
    const auto* row = tally.find(id);
    const double v = row ? static_cast<double>(kind == agents::VoterKind::Human ? row->raw_human : row->raw_ai) : 0.0;
    raw.push_back(v);
    total += v;
  }
  if (total <= 0.0) {
    throw UndefinedDistributionError("vote_distribution: no " + std::string(agents::to_string(kind)) +
                                     " votes in session " + tally.session_id);
  }
  for (double v : raw) d.probabilities.push_back(v / total);
  return d;
}

namespace {

void check_distribution(std::span<const double> p, const char* name) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ContractViolation(std::string("js_distance: ") + name + " has a negative or non-finite entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ContractViolation(std::string("js_distance: ") + name + " does not sum to 1");
}

double kl_to_mid(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * std::log2(2.0 * p[i] / (p[i] + q[i]));
  }
  return s;
}

}  // namespace

double js_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ContractViolation("js_distance: length mismatch");
  if (p.empty()) throw ContractViolation("js_distance: empty distributions");
  check_distribution(p, "P");
  check_distribution(q, "Q");
  const double a = kl_to_mid(p, q), b = kl_to_mid(q, p);
  const double jsd = 0.5 * (std::min(a, b) + std::max(a, b));
  return std::sqrt(std::clamp(jsd, 0.0, 1.0));
}

double js_distance(const VoteDistribution& p, const VoteDistribution& q) {
  if (p.candidate_order != q.candidate_order) throw ContractViolation("js_distance: candidate orders differ");
  return js_distance(std::span<const double>(p.probabilities), std::span<const double>(q.probabilities));
}

std::string category_label(Category c) { return c == Category::Breakthrough ? "Breakthrough" : "Question"; }
std::string phase_label(Stage s) { return s == Stage::Screening ? "Stage 1" : "Stage 2"; }

std::vector<AlignmentRow> alignment_report(const std::vector<ballot::Tally>& tallies) {
  std::vector<AlignmentRow> rows;
  for (const auto& t : tallies) {
    AlignmentRow r;
    r.session_id = t.session_id;
    r.category = t.category;
    r.stage = t.stage;
    r.domain = t.domain;
    r.candidate_count = t.candidate_order.size();
    try {
      r.js = js_distance(vote_distribution(t, agents::VoterKind::Human), vote_distribution(t, agents::VoterKind::Ai));
      r.note = "over all " + std::to_string(r.candidate_count) + " candidates of the stage";
    } catch (const UndefinedDistributionError& e) {
      r.note = e.what();
    }
    rows.push_back(std::move(r));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const AlignmentRow& a, const AlignmentRow& b) {
    if (a.category != b.category) return a.category < b.category;
    return a.stage < b.stage;
  });
  return rows;
}

void write_alignment_csv(std::ostream& out, const std::vector<AlignmentRow>& rows) {
  write_csv_row(out, {"category", "phase", "js_distance"});
  for (const auto& r : rows) {
    write_csv_row(out, {category_label(r.category), phase_label(r.stage), r.js ? format_double(*r.js) : "unavailable"});
  }
}

json alignment_json(const std::vector<AlignmentRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"category", category_label(r.category)},
                   {"phase", phase_label(r.stage)},
                   {"js_distance", r.js ? json(*r.js) : json("unavailable")},
                   {"session_id", r.session_id},
                   {"domain", std::string(to_string(r.domain))},
                   {"candidate_count", r.candidate_count},
                   {"note", r.note}});
  }
  return {{"rows", arr}, {"log_base", 2}, {"distribution_support", "all candidates of each stage"}};
}

}  // namespace trendscope::analysis
