#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hmit::corpus {

/// One aligned paragraph pair of a judgment.
struct ParallelSegment {
  std::string doc_id;
  std::int64_t seg_id = 0;
  std::string source_text;
  std::string target_text;
  std::string source_lang = "en";
  std::string target_lang = "zh-HK";

  friend bool operator==(const ParallelSegment&, const ParallelSegment&) = default;
};

struct YearStats {
  int year = 0;
  std::size_t document_count = 0;
  std::size_t character_count = 0;

  friend bool operator==(const YearStats&, const YearStats&) = default;
};

/// Character counts are Unicode scalar values over both language sides.
struct CorpusStats {
  std::size_t document_count = 0;
  std::size_t segment_count = 0;
  std::size_t total_characters = 0;
  std::size_t source_characters = 0;
  std::size_t target_characters = 0;
  std::vector<YearStats> per_year;  // ascending by year

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

/// Removes '\r', turns tabs into spaces, trims every line and drops empty
/// lines. The result has no leading/trailing whitespace.
std::string clean_text(std::string_view raw);

/// Loads an object-per-line corpus file with keys doc_id, seg_id, en, zh-HK.
/// Result is cleaned, validated and sorted by (doc_id, seg_id).
std::vector<ParallelSegment> load_corpus(const std::filesystem::path& path);
void save_corpus(const std::filesystem::path& path, const std::vector<ParallelSegment>& segments);

/// Checks the per-document invariants (unique keys, seg_ids contiguous from 1,
/// clean non-empty texts). Throws ValidationError naming the offending key.
void validate_corpus(const std::vector<ParallelSegment>& segments);

/// Year lookup for a document id: explicit overrides first, then a trailing
/// "/YYYY" (optionally followed by non-digits, e.g. "FACC1/2021").
class YearResolver {
 public:
  YearResolver() = default;
  explicit YearResolver(const std::map<std::string, int>& overrides) : overrides_(overrides.begin(), overrides.end()) {}

  std::optional<int> year_of(std::string_view doc_id) const;
  /// Loads "doc_id<TAB>year" or object-per-line {"doc_id", "year"} records.
  static YearResolver from_file(const std::filesystem::path& path);

 private:
  std::map<std::string, int, std::less<>> overrides_;
};

/// Throws ValidationError when a document has no year.
CorpusStats corpus_stats(const std::vector<ParallelSegment>& segments, const YearResolver& years);

std::string format_stats_table(const CorpusStats& stats);
/// Object-per-line records: one summary record, then one per year.
std::string format_stats_records(const CorpusStats& stats);

// ---------------------------------------------------------------------------
// Rule-driven paragraph segmentation.

enum class RuleKind {
  Break,       // the matching line is a boundary and is dropped (blank lines)
  Start,       // the matching line opens a new paragraph ("12. ...")
  Standalone,  // the matching line is a paragraph of its own (headings)
};

struct SegmentationRule {
  std::string name;
  std::string pattern;  // ECMAScript regex, matched against the whole cleaned line
  RuleKind kind = RuleKind::Break;
};

struct SegmentationRules {
  std::vector<SegmentationRule> rules;
  /// Paragraphs joined with this separator re-split to the same list.
  std::string canonical_separator = "\n\n";

  static SegmentationRules defaults();
  static SegmentationRules from_json_file(const std::filesystem::path& path);
  static SegmentationRules from_json_string(std::string_view json);
};

std::vector<std::string> segment_text(std::string_view raw, const SegmentationRules& rules);

struct AlignmentReport {
  std::size_t source_len = 0;
  std::size_t target_len = 0;
  /// First index at which the two sides stop corresponding.
  std::size_t first_divergence = 0;
  std::vector<std::string> source_context;
  std::vector<std::string> target_context;
};

using AlignedPairs = std::vector<std::pair<std::string, std::string>>;
using AlignmentResult = std::variant<AlignedPairs, AlignmentReport>;

/// Index-based pairing. Length mismatches come back as a report for manual repair.
AlignmentResult align_documents(const std::vector<std::string>& source_paras,
                                const std::vector<std::string>& target_paras);

std::vector<ParallelSegment> to_segments(std::string_view doc_id, const AlignedPairs& pairs);

}  // namespace hmit::corpus
