#pragma once

#include "trendscope/types.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace trendscope::corpus {

struct Keyword {
  std::string name;  // normalized
  std::optional<double> concept_score;

  bool operator==(const Keyword&) const = default;
};

struct WorkRecord {
  std::string work_id;
  std::string title;
  int year = 0;
  Domain domain = Domain::ArtificialIntelligence;
  std::vector<Keyword> keywords;
  std::uint64_t cited_by_count = 0;

  bool has_keyword(std::string_view normalized_name) const;
  bool operator==(const WorkRecord&) const = default;
};

// Case-fold, trim, collapse internal whitespace. No stemming.
std::string normalize_keyword(std::string_view raw);

// Keeps the first occurrence of each normalized name.
std::vector<Keyword> dedupe_keywords(std::vector<Keyword> keywords);

// topic display name -> domain, loaded from a two-column CSV (topic_name, domain).
class DomainMap {
 public:
  static DomainMap load_csv(const std::filesystem::path& path);
  static DomainMap from_csv(std::istream& in);

  void add(std::string_view topic_name, Domain domain);
  std::optional<Domain> resolve(std::string_view topic_name) const;
  // First topic (in listed order) that maps to a domain.
  std::optional<Domain> resolve_first(const std::vector<std::string>& topics) const;
  std::size_t size() const { return table_.size(); }

 private:
  std::map<std::string, Domain> table_;
};

struct IngestOptions {
  double min_concept_score = 0.0;
};

struct Reject {
  std::size_t line = 0;
  std::string reason;
};

struct IngestReport {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t replaced = 0;
  std::map<std::pair<Domain, int>, std::size_t> accepted_per_slice;
  std::vector<Reject> rejects;
};

using FrequencyMap = std::map<std::string, std::uint32_t>;

// Holds one record per work_id and the per-(domain, year) keyword index.
// Single writer during ingest; const queries are safe to share afterwards.
class CorpusStore {
 public:
  IngestReport ingest(std::istream& ndjson, const DomainMap& domains,
                      const IngestOptions& opts = {});
  // Throws IoError when the file cannot be read.
  IngestReport ingest_file(const std::filesystem::path& path, const DomainMap& domains,
                           const IngestOptions& opts = {});

  // Inserts or replaces by work_id. Returns true when an older record was replaced.
  bool upsert(WorkRecord work);

  // Throws EmptySliceError for an unknown (domain, year).
  const FrequencyMap& keyword_frequencies(Domain domain, int year) const;

  // Ordered by (-cited_by_count, work_id).
  std::vector<WorkRecord> top_cited_works(Domain domain, std::string_view keyword, int year_from,
                                          int year_to, std::size_t limit) const;

  std::vector<WorkRecord> slice(Domain domain, int year) const;
  std::vector<std::pair<Domain, int>> slices() const;

  std::size_t size() const { return works_.size(); }
  const std::map<std::string, WorkRecord>& works() const { return works_; }

  // Compact binary form of the keyword index. Deterministic: identical stores
  // produce identical bytes.
  std::string index_snapshot() const;

  // Writes works.ndjson and keyword_index.bin into dir.
  void save(const std::filesystem::path& dir) const;
  static CorpusStore load(const std::filesystem::path& dir);

 private:
  void index_add(const WorkRecord& w);
  void index_remove(const WorkRecord& w);

  std::map<std::string, WorkRecord> works_;
  std::map<std::pair<Domain, int>, FrequencyMap> index_;
};

// Parses one OpenAlex-style JSON line. On failure returns the reject reason.
struct ParsedLine {
  std::optional<WorkRecord> work;
  std::string reject_reason;
};
ParsedLine parse_work_line(std::string_view line, const DomainMap& domains,
                           const IngestOptions& opts);

// Serialized record line, the format save() writes and ingest() reads back.
std::string to_ndjson_line(const WorkRecord& w);

inline constexpr std::string_view kWorksFormatTag = "trendscope-works/1";
inline constexpr std::string_view kIndexFormatTag = "TSKIDX01";

}  // namespace trendscope::corpus
