#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hmit::codes {

enum class Category { Accuracy, Grammar, UsageAndStyle };

std::string_view to_string(Category c);

struct ErrorCode {
  std::string_view code;
  Category category;
  std::string_view description;
};

/// The 31 proofread codes in table order: 10 accuracy, 12 grammar, 9 usage and style.
std::span<const ErrorCode> registry();
std::optional<ErrorCode> lookup(std::string_view code);

/// One identified translation error.
struct AnnotationRecord {
  std::string code;
  std::string excerpt;  // offending target span, verbatim
  std::optional<std::string> suggestion;
  std::optional<std::string> note;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

/// Canonical single-line rendering:
///   [CODE] "excerpt" -> "suggestion"; [CODE] "excerpt"
/// Empty list renders as NONE. Inside quotes, '"' and '\' are backslash-escaped
/// and line breaks are written as \n / \r. A note renders as a trailing
/// (note: "...") group.
std::string format_annotations(std::span<const AnnotationRecord> records);

struct ParseWarning {
  std::string message;
  std::string fragment;
};

struct ParseResult {
  std::vector<AnnotationRecord> records;
  std::vector<ParseWarning> warnings;
};

/// Strict parse of the canonical form; nullopt if the line deviates.
std::optional<std::vector<AnnotationRecord>> parse_canonical(std::string_view line);

/// Canonical form first, then a best-effort reading of free-form annotator
/// output. Never throws.
ParseResult parse_annotations(std::string_view line);

}  // namespace hmit::codes
