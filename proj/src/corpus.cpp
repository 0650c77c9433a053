#include "hmit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <iomanip>
#include <regex>
#include <set>
#include <sstream>

#include "hmit/error.hpp"
#include "hmit/jsonl.hpp"
#include "hmit/text.hpp"

namespace hmit::corpus {

using jsonl::Json;

namespace {

std::string key_str(std::string_view doc_id, std::int64_t seg_id) {
  return "(" + std::string(doc_id) + ", " + std::to_string(seg_id) + ")";
}

const std::set<std::string>& record_keys() {
  static const std::set<std::string> keys{"doc_id", "seg_id", "en", "zh-HK"};
  return keys;
}

}  // namespace

std::string clean_text(std::string_view raw) {
  std::string out;
  for (auto line : text::split_lines(raw)) {
    std::string l;
    l.reserve(line.size());
    for (char c : line) {
      if (c == '\r') continue;
      l.push_back(c == '\t' ? ' ' : c);
    }
    auto t = text::trim(l);
    if (t.empty()) continue;
    if (!out.empty()) out.push_back('\n');
    out.append(t);
  }
  return out;
}

std::vector<ParallelSegment> load_corpus(const std::filesystem::path& path) {
  std::vector<ParallelSegment> segments;
  jsonl::for_each_record(path, [&](const Json& j, std::size_t line_no) {
    auto where = path.string() + ":" + std::to_string(line_no);
    for (const auto& k : record_keys()) {
      if (!j.contains(k)) throw ParseError(where + ": missing key \"" + k + "\"");
    }
    for (const auto& [k, v] : j.items()) {
      if (!record_keys().count(k)) throw ParseError(where + ": unexpected key \"" + k + "\"");
    }
    if (!j["doc_id"].is_string() || !j["en"].is_string() || !j["zh-HK"].is_string() ||
        !j["seg_id"].is_number_integer()) {
      throw ParseError(where + ": wrong field type");
    }
    ParallelSegment s;
    s.doc_id = j["doc_id"].get<std::string>();
    s.seg_id = j["seg_id"].get<std::int64_t>();
    s.source_text = clean_text(j["en"].get<std::string>());
    s.target_text = clean_text(j["zh-HK"].get<std::string>());
    if (s.doc_id.empty()) throw ParseError(where + ": empty doc_id");
    if (s.source_text.empty() || s.target_text.empty())
      throw ValidationError(where + ": empty text after cleaning for " + key_str(s.doc_id, s.seg_id));
    segments.push_back(std::move(s));
  });
  std::sort(segments.begin(), segments.end(), [](const auto& a, const auto& b) {
    return std::tie(a.doc_id, a.seg_id) < std::tie(b.doc_id, b.seg_id);
  });
  validate_corpus(segments);
  return segments;
}

void save_corpus(const std::filesystem::path& path, const std::vector<ParallelSegment>& segments) {
  std::string out;
  for (const auto& s : segments) {
    Json j;
    j["doc_id"] = s.doc_id;
    j["seg_id"] = s.seg_id;
    j["en"] = s.source_text;
    j["zh-HK"] = s.target_text;
    out += jsonl::dump_line(j);
    out.push_back('\n');
  }
  jsonl::write_file_atomic(path, out);
}

void validate_corpus(const std::vector<ParallelSegment>& segments) {
  std::map<std::string, std::set<std::int64_t>> by_doc;
  for (const auto& s : segments) {
    if (!by_doc[s.doc_id].insert(s.seg_id).second)
      throw ValidationError("duplicate key " + key_str(s.doc_id, s.seg_id));
    for (const auto* t : {&s.source_text, &s.target_text}) {
      if (t->empty()) throw ValidationError("empty text for " + key_str(s.doc_id, s.seg_id));
      if (*t != clean_text(*t)) throw ValidationError("uncleaned text for " + key_str(s.doc_id, s.seg_id));
    }
  }
  for (const auto& [doc, ids] : by_doc) {
    std::int64_t expect = 1;
    for (auto id : ids) {
      if (id != expect)
        throw ValidationError("document " + doc + ": seg_id " + std::to_string(expect) +
                              " missing (seg_ids must run 1..n)");
      ++expect;
    }
  }
}

std::optional<int> YearResolver::year_of(std::string_view doc_id) const {
  if (auto it = overrides_.find(doc_id); it != overrides_.end()) return it->second;
  auto slash = doc_id.rfind('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto tail = doc_id.substr(slash + 1);
  if (tail.size() < 4) return std::nullopt;
  int year = 0;
  auto [p, ec] = std::from_chars(tail.data(), tail.data() + 4, year);
  if (ec != std::errc{} || p != tail.data() + 4) return std::nullopt;
  if (tail.size() > 4 && std::isdigit(static_cast<unsigned char>(tail[4]))) return std::nullopt;
  return year;
}

YearResolver YearResolver::from_file(const std::filesystem::path& path) {
  std::map<std::string, int> overrides;
  auto content = jsonl::read_file(path);
  for (auto line : text::split_lines(content)) {
    line = text::trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '{') {
      auto j = Json::parse(line);
      overrides[j.at("doc_id").get<std::string>()] = j.at("year").get<int>();
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError("bad year override line: " + std::string(line));
    int year = 0;
    auto ys = text::trim(line.substr(tab + 1));
    auto [p, ec] = std::from_chars(ys.data(), ys.data() + ys.size(), year);
    if (ec != std::errc{}) throw ParseError("bad year in override line: " + std::string(line));
    overrides[std::string(text::trim(line.substr(0, tab)))] = year;
  }
  return YearResolver(std::move(overrides));
}

CorpusStats corpus_stats(const std::vector<ParallelSegment>& segments, const YearResolver& years) {
  CorpusStats stats;
  std::map<int, YearStats> per_year;
  std::set<std::string> docs;
  for (const auto& s : segments) {
    auto year = years.year_of(s.doc_id);
    if (!year) throw ValidationError("no year for document " + s.doc_id);
    auto src = text::count_scalars(s.source_text);
    auto tgt = text::count_scalars(s.target_text);
    auto& ys = per_year[*year];
    ys.year = *year;
    ys.character_count += src + tgt;
    if (docs.insert(s.doc_id).second) ++ys.document_count;
    stats.source_characters += src;
    stats.target_characters += tgt;
    ++stats.segment_count;
  }
  stats.document_count = docs.size();
  stats.total_characters = stats.source_characters + stats.target_characters;
  for (auto& [y, ys] : per_year) stats.per_year.push_back(ys);
  return stats;
}

std::string format_stats_table(const CorpusStats& stats) {
  std::ostringstream os;
  os << "documents            " << stats.document_count << "\n"
     << "segments             " << stats.segment_count << "\n"
     << "characters (source)  " << stats.source_characters << "\n"
     << "characters (target)  " << stats.target_characters << "\n"
     << "characters (total)   " << stats.total_characters << "\n\n";
  os << std::left << std::setw(6) << "year" << std::right << std::setw(10) << "documents" << std::setw(14)
     << "characters" << "\n";
  for (const auto& y : stats.per_year) {
    os << std::left << std::setw(6) << y.year << std::right << std::setw(10) << y.document_count << std::setw(14)
       << y.character_count << "\n";
  }
  return os.str();
}

std::string format_stats_records(const CorpusStats& stats) {
  std::string out;
  Json summary;
  summary["kind"] = "summary";
  summary["document_count"] = stats.document_count;
  summary["segment_count"] = stats.segment_count;
  summary["source_characters"] = stats.source_characters;
  summary["target_characters"] = stats.target_characters;
  summary["total_characters"] = stats.total_characters;
  out += jsonl::dump_line(summary) + "\n";
  for (const auto& y : stats.per_year) {
    Json j;
    j["kind"] = "year";
    j["year"] = y.year;
    j["document_count"] = y.document_count;
    j["character_count"] = y.character_count;
    out += jsonl::dump_line(j) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

RuleKind parse_kind(const std::string& s) {
  if (s == "break") return RuleKind::Break;
  if (s == "start") return RuleKind::Start;
  if (s == "standalone") return RuleKind::Standalone;
  throw ParseError("unknown segmentation rule kind \"" + s + "\"");
}

}  // namespace

SegmentationRules SegmentationRules::defaults() {
  return {{
              {"blank-line", R"(\s*)", RuleKind::Break},
              {"numbered-paragraph", R"(\(?\d{1,4}[.)]\s+.*)", RuleKind::Start},
              {"section-heading", R"([A-Z][A-Z0-9 .,'&()/-]{2,}[A-Z0-9)])", RuleKind::Standalone},
          },
          "\n\n"};
}

SegmentationRules SegmentationRules::from_json_string(std::string_view json) {
  auto j = Json::parse(json);
  SegmentationRules rules;
  rules.rules.clear();
  for (const auto& r : j.at("rules")) {
    rules.rules.push_back({r.at("name").get<std::string>(), r.at("pattern").get<std::string>(),
                           parse_kind(r.at("kind").get<std::string>())});
  }
  if (j.contains("canonical_separator")) rules.canonical_separator = j["canonical_separator"].get<std::string>();
  return rules;
}

SegmentationRules SegmentationRules::from_json_file(const std::filesystem::path& path) {
  return from_json_string(jsonl::read_file(path));
}

std::vector<std::string> segment_text(std::string_view raw, const SegmentationRules& rules) {
  struct Compiled {
    std::regex re;
    RuleKind kind;
  };
  std::vector<Compiled> compiled;
  compiled.reserve(rules.rules.size());
  for (const auto& r : rules.rules) compiled.push_back({std::regex(r.pattern, std::regex::ECMAScript), r.kind});

  std::vector<std::string> paras;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) paras.push_back(std::move(current));
    current.clear();
  };

  for (auto raw_line : text::split_lines(raw)) {
    std::string line = clean_text(raw_line);
    std::optional<RuleKind> kind;
    for (const auto& c : compiled) {
      if (std::regex_match(line, c.re)) {
        kind = c.kind;
        break;
      }
    }
    if (line.empty()) kind = RuleKind::Break;
    if (kind == RuleKind::Break) {
      flush();
      continue;
    }
    if (kind == RuleKind::Standalone) {
      flush();
      paras.push_back(line);
      continue;
    }
    if (kind == RuleKind::Start) flush();
    if (!current.empty()) current.push_back('\n');
    current += line;
  }
  flush();
  return paras;
}

namespace {

std::optional<long> leading_number(const std::string& para) {
  std::size_t i = 0;
  if (i < para.size() && para[i] == '(') ++i;
  std::size_t start = i;
  while (i < para.size() && std::isdigit(static_cast<unsigned char>(para[i]))) ++i;
  if (i == start || i - start > 6 || i >= para.size() || (para[i] != '.' && para[i] != ')')) return std::nullopt;
  return std::stol(para.substr(start, i - start));
}

}  // namespace

AlignmentResult align_documents(const std::vector<std::string>& source_paras,
                                const std::vector<std::string>& target_paras) {
  if (source_paras.size() == target_paras.size()) {
    AlignedPairs pairs;
    pairs.reserve(source_paras.size());
    for (std::size_t i = 0; i < source_paras.size(); ++i) pairs.emplace_back(source_paras[i], target_paras[i]);
    return pairs;
  }
  AlignmentReport report;
  report.source_len = source_paras.size();
  report.target_len = target_paras.size();
  auto common = std::min(source_paras.size(), target_paras.size());
  report.first_divergence = common;
  for (std::size_t i = 0; i < common; ++i) {
    auto a = leading_number(source_paras[i]);
    auto b = leading_number(target_paras[i]);
    if (a && b && *a != *b) {
      report.first_divergence = i;
      break;
    }
  }
  auto lo = report.first_divergence == 0 ? 0 : report.first_divergence - 1;
  for (auto i = lo; i < report.first_divergence + 2; ++i) {
    if (i < source_paras.size()) report.source_context.push_back(source_paras[i]);
    if (i < target_paras.size()) report.target_context.push_back(target_paras[i]);
  }
  return report;
}

std::vector<ParallelSegment> to_segments(std::string_view doc_id, const AlignedPairs& pairs) {
  std::vector<ParallelSegment> out;
  std::int64_t seg = 1;
  for (const auto& [s, t] : pairs) {
    ParallelSegment p;
    p.doc_id = std::string(doc_id);
    p.seg_id = seg++;
    p.source_text = clean_text(s);
    p.target_text = clean_text(t);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace hmit::corpus
