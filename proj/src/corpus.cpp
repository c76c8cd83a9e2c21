#include "trendscope/corpus.hpp"

#include "trendscope/csv.hpp"
#include "trendscope/errors.hpp"
#include "trendscope/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>

namespace trendscope::corpus {

using nlohmann::json;

bool WorkRecord::has_keyword(std::string_view normalized_name) const {
  return std::any_of(keywords.begin(), keywords.end(),
                     [&](const Keyword& k) { return k.name == normalized_name; });
}

std::string normalize_keyword(std::string_view raw) {
  return ascii_lower(collapse_whitespace(raw));
}

std::vector<Keyword> dedupe_keywords(std::vector<Keyword> keywords) {
  std::set<std::string> seen;
  std::vector<Keyword> out;
  out.reserve(keywords.size());
  for (auto& k : keywords) {
    k.name = normalize_keyword(k.name);
    if (k.name.empty() || !seen.insert(k.name).second) continue;
    out.push_back(std::move(k));
  }
  return out;
}

// ---- DomainMap ----

DomainMap DomainMap::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open domain map " + path.string());
  return from_csv(in);
}

DomainMap DomainMap::from_csv(std::istream& in) {
  DomainMap map;
  const auto rows = read_csv(in);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() < 2) throw ConfigError("domain map row " + std::to_string(i + 1) + " has < 2 columns");
    if (i == 0 && ascii_lower(trim(row[0])) == "topic_name") continue;
    auto domain = parse_domain(row[1]);
    if (!domain) throw ConfigError("domain map: unknown domain '" + row[1] + "'");
    map.add(row[0], *domain);
  }
  return map;
}

void DomainMap::add(std::string_view topic_name, Domain domain) {
  table_[normalize_keyword(topic_name)] = domain;
}

std::optional<Domain> DomainMap::resolve(std::string_view topic_name) const {
  auto it = table_.find(normalize_keyword(topic_name));
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

std::optional<Domain> DomainMap::resolve_first(const std::vector<std::string>& topics) const {
  for (const auto& t : topics) {
    if (auto d = resolve(t)) return d;
  }
  return std::nullopt;
}

// ---- parsing ----

namespace {

std::optional<std::string> string_field(const json& j, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    auto it = j.find(n);
    if (it != j.end() && it->is_string() && !it->get_ref<const std::string&>().empty()) {
      return it->get<std::string>();
    }
  }
  return std::nullopt;
}

}  // namespace

ParsedLine parse_work_line(std::string_view line, const DomainMap& domains,
                           const IngestOptions& opts) {
  ParsedLine out;
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    out.reject_reason = "malformed json";
    return out;
  }
  WorkRecord w;
  auto id = string_field(j, {"work_id", "id"});
  if (!id) {
    out.reject_reason = "missing work_id";
    return out;
  }
  w.work_id = *id;
  w.title = string_field(j, {"title", "display_name"}).value_or("");

  auto year_it = j.find("publication_year");
  if (year_it == j.end()) year_it = j.find("year");
  if (year_it == j.end() || !year_it->is_number_integer()) {
    out.reject_reason = "missing year";
    return out;
  }
  w.year = year_it->get<int>();

  if (auto c = j.find("cited_by_count"); c != j.end()) {
    if (!c->is_number_integer() || c->get<long long>() < 0) {
      out.reject_reason = "invalid cited_by_count";
      return out;
    }
    w.cited_by_count = c->get<std::uint64_t>();
  }

  std::optional<Domain> domain;
  if (auto d = j.find("domain"); d != j.end() && d->is_string()) {
    domain = parse_domain(d->get<std::string>());
  }
  if (!domain) {
    std::vector<std::string> topics;
    if (auto t = j.find("topics"); t != j.end() && t->is_array()) {
      for (const auto& topic : *t) {
        if (topic.is_object() && topic.contains("display_name") && topic["display_name"].is_string()) {
          topics.push_back(topic["display_name"].get<std::string>());
        }
      }
    }
    domain = domains.resolve_first(topics);
  }
  if (!domain) {
    out.reject_reason = "unresolved domain";
    return out;
  }
  w.domain = *domain;

  std::vector<Keyword> kws;
  const json* concepts = nullptr;
  if (auto c = j.find("concepts"); c != j.end()) concepts = &*c;
  else if (auto k = j.find("keywords"); k != j.end()) concepts = &*k;
  if (concepts && concepts->is_array()) {
    for (const auto& c : *concepts) {
      Keyword kw;
      if (c.is_string()) {
        kw.name = c.get<std::string>();
      } else if (c.is_object()) {
        if (auto n = c.find("display_name"); n != c.end() && n->is_string()) kw.name = n->get<std::string>();
        else if (auto n2 = c.find("keyword_name"); n2 != c.end() && n2->is_string()) kw.name = n2->get<std::string>();
        for (const char* score_key : {"score", "concept_score"}) {
          if (auto s = c.find(score_key); s != c.end() && s->is_number()) kw.concept_score = s->get<double>();
        }
      }
      if (kw.concept_score && *kw.concept_score < opts.min_concept_score) continue;
      if (!kw.concept_score && opts.min_concept_score > 0.0) continue;
      kws.push_back(std::move(kw));
    }
  }
  w.keywords = dedupe_keywords(std::move(kws));
  if (w.keywords.empty()) {
    out.reject_reason = "no keywords";
    return out;
  }
  out.work = std::move(w);
  return out;
}

std::string to_ndjson_line(const WorkRecord& w) {
  json concepts = json::array();
  for (const auto& k : w.keywords) {
    json c = {{"display_name", k.name}};
    if (k.concept_score) c["score"] = *k.concept_score;
    concepts.push_back(std::move(c));
  }
  json j = {{"work_id", w.work_id},
            {"title", w.title},
            {"publication_year", w.year},
            {"cited_by_count", w.cited_by_count},
            {"domain", std::string(to_string(w.domain))},
            {"concepts", std::move(concepts)}};
  return j.dump();
}

// ---- store ----

void CorpusStore::index_add(const WorkRecord& w) {
  auto& freq = index_[{w.domain, w.year}];
  for (const auto& k : w.keywords) ++freq[k.name];
}

void CorpusStore::index_remove(const WorkRecord& w) {
  auto slice_it = index_.find({w.domain, w.year});
  if (slice_it == index_.end()) return;
  auto& freq = slice_it->second;
  for (const auto& k : w.keywords) {
    auto it = freq.find(k.name);
    if (it != freq.end() && --it->second == 0) freq.erase(it);
  }
  if (freq.empty()) index_.erase(slice_it);
}

bool CorpusStore::upsert(WorkRecord work) {
  work.keywords = dedupe_keywords(std::move(work.keywords));
  auto it = works_.find(work.work_id);
  bool replaced = false;
  if (it != works_.end()) {
    index_remove(it->second);
    replaced = true;
  }
  index_add(work);
  works_[work.work_id] = std::move(work);
  return replaced;
}

IngestReport CorpusStore::ingest(std::istream& ndjson, const DomainMap& domains,
                                 const IngestOptions& opts) {
  IngestReport report;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ndjson, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    // Header line written by save().
    if (t.find("\"format\"") != std::string::npos && t.find(kWorksFormatTag) != std::string::npos) continue;
    ParsedLine parsed = parse_work_line(t, domains, opts);
    if (!parsed.work) {
      ++report.rejected;
      report.rejects.push_back({line_no, parsed.reject_reason});
      continue;
    }
    const auto key = std::make_pair(parsed.work->domain, parsed.work->year);
    if (upsert(std::move(*parsed.work))) ++report.replaced;
    ++report.accepted;
    ++report.accepted_per_slice[key];
  }
  if (ndjson.bad()) throw IoError("read error on record stream");
  return report;
}

IngestReport CorpusStore::ingest_file(const std::filesystem::path& path, const DomainMap& domains,
                                      const IngestOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open record source " + path.string());
  return ingest(in, domains, opts);
}

const FrequencyMap& CorpusStore::keyword_frequencies(Domain domain, int year) const {
  auto it = index_.find({domain, year});
  if (it == index_.end()) {
    throw EmptySliceError("no works for " + std::string(to_string(domain)) + " " + std::to_string(year));
  }
  return it->second;
}

std::vector<WorkRecord> CorpusStore::top_cited_works(Domain domain, std::string_view keyword,
                                                     int year_from, int year_to,
                                                     std::size_t limit) const {
  if (limit < 1) throw ContractViolation("top_cited_works: limit must be >= 1");
  const std::string key = normalize_keyword(keyword);
  std::vector<const WorkRecord*> hits;
  for (const auto& [id, w] : works_) {
    if (w.domain == domain && w.year >= year_from && w.year <= year_to && w.has_keyword(key)) {
      hits.push_back(&w);
    }
  }
  const auto cmp = [](const WorkRecord* a, const WorkRecord* b) {
    if (a->cited_by_count != b->cited_by_count) return a->cited_by_count > b->cited_by_count;
    return a->work_id < b->work_id;
  };
  const std::size_t n = std::min(limit, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(), cmp);
  std::vector<WorkRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(*hits[i]);
  return out;
}

std::vector<WorkRecord> CorpusStore::slice(Domain domain, int year) const {
  std::vector<WorkRecord> out;
  for (const auto& [id, w] : works_) {
    if (w.domain == domain && w.year == year) out.push_back(w);
  }
  return out;
}

std::vector<std::pair<Domain, int>> CorpusStore::slices() const {
  std::vector<std::pair<Domain, int>> out;
  out.reserve(index_.size());
  for (const auto& [key, freq] : index_) out.push_back(key);
  return out;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

std::string CorpusStore::index_snapshot() const {
  std::string out(kIndexFormatTag);
  put_u32(out, static_cast<std::uint32_t>(index_.size()));
  for (const auto& [key, freq] : index_) {
    put_u32(out, static_cast<std::uint32_t>(key.first));
    put_u32(out, static_cast<std::uint32_t>(key.second));
    put_u32(out, static_cast<std::uint32_t>(freq.size()));
    for (const auto& [name, count] : freq) {
      put_u32(out, static_cast<std::uint32_t>(name.size()));
      out += name;
      put_u32(out, count);
    }
  }
  return out;
}

void CorpusStore::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::string records = json{{"format", std::string(kWorksFormatTag)}}.dump() + "\n";
  for (const auto& [id, w] : works_) records += to_ndjson_line(w) + "\n";
  write_file((dir / "works.ndjson").string(), records);
  write_file((dir / "keyword_index.bin").string(), index_snapshot());
}

CorpusStore CorpusStore::load(const std::filesystem::path& dir) {
  const std::string index_bytes = read_file((dir / "keyword_index.bin").string());
  if (index_bytes.rfind(kIndexFormatTag, 0) != 0) throw IoError("keyword index: bad format tag");
  CorpusStore store;
  DomainMap none;
  std::ifstream in(dir / "works.ndjson");
  if (!in) throw IoError("cannot open " + (dir / "works.ndjson").string());
  std::string header;
  std::getline(in, header);
  if (header.find(kWorksFormatTag) == std::string::npos) throw IoError("works.ndjson: bad format tag");
  store.ingest(in, none);
  // The persisted index must agree with the one rebuilt from records.
  if (store.index_snapshot() != index_bytes) throw IoError("keyword index does not match records");
  return store;
}

}  // namespace trendscope::corpus
