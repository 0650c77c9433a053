#include "hmit/proofread_codes.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>

#include "hmit/text.hpp"

namespace hmit::codes {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Accuracy:
      return "Accuracy";
    case Category::Grammar:
      return "Grammar";
    case Category::UsageAndStyle:
      return "Usage and style";
  }
  return "";
}

namespace {

using enum Category;

constexpr std::array<ErrorCode, 31> kRegistry{{
    {"CW", Accuracy, "Choice of word. The word or expression is not a good choice."},
    {"IF", Accuracy, "Information structure not preserved."},
    {"MC", Accuracy,
     "Meaning has been changed because of inappropriate restructuring, e.g., changing the passive to active or "
     "vice versa."},
    {"MT", Accuracy, "Mistranslation due to inadequate comprehension or misinterpretation of the source text."},
    {"NA", Accuracy, "The translation conveys a different meaning from that of the source text."},
    {"NC", Accuracy, "Meaning not clear, e.g., because of ambiguity, vagueness or syntactic problems."},
    {"OM", Accuracy, "Omission. Part of the original has been left untranslated."},
    {"OT", Accuracy, "Over-translation. Too much has been read into the source text."},
    {"TL", Accuracy, "Too literal, affecting comprehensibility."},
    {"UT", Accuracy, "Under-translation. Meaning is not adequately captured in translation."},
    {"Art", Grammar, "Article."},
    {"Det", Grammar, "Determiner."},
    {"MD", Grammar, "Modality."},
    {"NB", Grammar, "Number."},
    {"PN", Grammar, "Punctuation."},
    {"Prep", Grammar, "Wrong preposition."},
    {"PS", Grammar, "Part of speech."},
    {"SP", Grammar, "Spelling or wrong character."},
    {"ST", Grammar, "The sentence or part of the sentence is ill-formed or ambiguous."},
    {"SV", Grammar, "Subject verb agreement."},
    {"TN", Grammar, "Tense problem."},
    {"WO", Grammar, "Word order."},
    {"CL", UsageAndStyle, "Collocation problem."},
    {"CN", UsageAndStyle, "The word or expression has connotation not appropriate in the context."},
    {"CO", UsageAndStyle, "Connective problem, e.g., inappropriate connectives."},
    {"IC", UsageAndStyle, "Inconsistent use of a word; or incoherence between clauses or sentences."},
    {"ID", UsageAndStyle, "Idiomaticity, i.e., unidiomatic expression."},
    {"RF", UsageAndStyle, "Reference problem, e.g., ambiguous use of a pronoun."},
    {"RN", UsageAndStyle, "Redundancy: the word or expression should be deleted."},
    {"SL", UsageAndStyle, "Stylistic problems, e.g., the word or expression is not of an appropriate style."},
    {"TS", UsageAndStyle, "Transition problems: sentences not well connected; bad language flow."},
}};

void append_quoted(std::string& out, std::string_view s) {
  out.push_back('"');
  for (char c : s) {
    switch (c) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\r':
        out += "\\r";
        break;
      default:
        out.push_back(c);
    }
  }
  out.push_back('"');
}

/// Reads a canonical quoted string starting at `pos` (which must be '"').
std::optional<std::string> read_quoted(std::string_view s, std::size_t& pos) {
  if (pos >= s.size() || s[pos] != '"') return std::nullopt;
  std::string out;
  for (std::size_t i = pos + 1; i < s.size(); ++i) {
    char c = s[i];
    if (c == '\\') {
      if (i + 1 >= s.size()) return std::nullopt;
      char e = s[++i];
      switch (e) {
        case '"':
        case '\\':
          out.push_back(e);
          break;
        case 'n':
          out.push_back('\n');
          break;
        case 'r':
          out.push_back('\r');
          break;
        default:
          return std::nullopt;
      }
    } else if (c == '"') {
      pos = i + 1;
      return out;
    } else {
      out.push_back(c);
    }
  }
  return std::nullopt;
}

bool consume(std::string_view s, std::size_t& pos, std::string_view lit) {
  if (s.substr(pos, lit.size()) != lit) return false;
  pos += lit.size();
  return true;
}

bool is_code_char(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

bool all_upper(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isupper(static_cast<unsigned char>(c)); });
}

}  // namespace

std::span<const ErrorCode> registry() { return kRegistry; }

std::optional<ErrorCode> lookup(std::string_view code) {
  for (const auto& e : kRegistry)
    if (e.code == code) return e;
  return std::nullopt;
}

std::string format_annotations(std::span<const AnnotationRecord> records) {
  if (records.empty()) return "NONE";
  std::string out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (i) out += "; ";
    out += "[" + r.code + "] ";
    append_quoted(out, r.excerpt);
    if (r.suggestion) {
      out += " -> ";
      append_quoted(out, *r.suggestion);
    }
    if (r.note) {
      out += " (note: ";
      append_quoted(out, *r.note);
      out += ")";
    }
  }
  return out;
}

std::optional<std::vector<AnnotationRecord>> parse_canonical(std::string_view line) {
  if (line == "NONE") return std::vector<AnnotationRecord>{};
  std::vector<AnnotationRecord> out;
  std::size_t pos = 0;
  while (true) {
    AnnotationRecord r;
    if (!consume(line, pos, "[")) return std::nullopt;
    auto start = pos;
    while (pos < line.size() && is_code_char(line[pos])) ++pos;
    if (pos == start) return std::nullopt;
    r.code = std::string(line.substr(start, pos - start));
    if (!consume(line, pos, "] ")) return std::nullopt;
    auto excerpt = read_quoted(line, pos);
    if (!excerpt || excerpt->empty()) return std::nullopt;
    r.excerpt = std::move(*excerpt);
    if (consume(line, pos, " -> ")) {
      auto sug = read_quoted(line, pos);
      if (!sug) return std::nullopt;
      r.suggestion = std::move(*sug);
    }
    if (consume(line, pos, " (note: ")) {
      auto note = read_quoted(line, pos);
      if (!note || !consume(line, pos, ")")) return std::nullopt;
      r.note = std::move(*note);
    }
    out.push_back(std::move(r));
    if (pos == line.size()) return out;
    if (!consume(line, pos, "; ")) return std::nullopt;
  }
}

namespace {

struct CodeHit {
  std::size_t begin;
  std::size_t end;
  std::string code;
};

std::vector<CodeHit> find_code_markers(const std::string& line) {
  // [CW]  (CW)  CW:  CW：  CW -
  static const std::regex marker(R"(\[([A-Za-z]{1,6})\]|\(([A-Za-z]{1,6})\)|\b([A-Za-z]{2,4})\s*(?::|：|\s-\s))");
  std::vector<CodeHit> hits;
  for (auto it = std::sregex_iterator(line.begin(), line.end(), marker); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    std::string code;
    bool bracketed = false;
    if (m[1].matched) {
      code = m[1].str();
      bracketed = true;
    } else if (m[2].matched) {
      code = m[2].str();
      bracketed = true;
    } else {
      code = m[3].str();
    }
    bool known = lookup(code).has_value();
    if (!known && !all_upper(code)) continue;
    if (!known && !bracketed && code.size() < 2) continue;
    hits.push_back({static_cast<std::size_t>(m.position(0)),
                    static_cast<std::size_t>(m.position(0) + m.length(0)), std::move(code)});
  }
  return hits;
}

std::string_view strip_edges(std::string_view s, std::string_view lead, std::string_view trail) {
  while (true) {
    auto t = text::trim(s);
    bool changed = t.size() != s.size();
    s = t;
    if (!s.empty() && lead.find(s.front()) != std::string_view::npos) {
      s.remove_prefix(1);
      changed = true;
    }
    if (!s.empty() && trail.find(s.back()) != std::string_view::npos) {
      s.remove_suffix(1);
      changed = true;
    }
    // full-width colon / ideographic comma at the front
    for (std::string_view wide : {std::string_view("："), std::string_view("，"), std::string_view("；")}) {
      if (s.substr(0, wide.size()) == wide) {
        s.remove_prefix(wide.size());
        changed = true;
      }
      if (s.size() >= wide.size() && s.substr(s.size() - wide.size()) == wide) {
        s.remove_suffix(wide.size());
        changed = true;
      }
    }
    if (!changed) return s;
  }
}

/// Quoted spans in order of appearance: "..", “..”, 「..」, 『..』.
std::vector<std::string> quoted_spans(std::string_view s) {
  static const std::array<std::pair<std::string_view, std::string_view>, 4> pairs{{
      {"\"", "\""},
      {"\xE2\x80\x9C", "\xE2\x80\x9D"},  // “ ”
      {"\xE3\x80\x8C", "\xE3\x80\x8D"},  // 「 」
      {"\xE3\x80\x8E", "\xE3\x80\x8F"},  // 『 』
  }};
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t best = std::string_view::npos;
    const std::pair<std::string_view, std::string_view>* which = nullptr;
    for (const auto& p : pairs) {
      auto f = s.find(p.first, pos);
      if (f < best) {
        best = f;
        which = &p;
      }
    }
    if (!which) break;
    auto open_end = best + which->first.size();
    if (which->first == "\"") {
      std::size_t p = best;
      if (auto q = read_quoted(s, p)) {
        out.push_back(std::move(*q));
        pos = p;
        continue;
      }
    }
    auto close = s.find(which->second, open_end);
    if (close == std::string_view::npos) break;
    out.emplace_back(s.substr(open_end, close - open_end));
    pos = close + which->second.size();
  }
  return out;
}

void read_lenient_span(const CodeHit& hit, std::string_view span, ParseResult& result) {
  auto body = strip_edges(span, ":-,;|", ",;|");
  AnnotationRecord r;
  r.code = hit.code;
  auto quotes = quoted_spans(body);
  if (!quotes.empty()) {
    r.excerpt = quotes[0];
    if (quotes.size() > 1) r.suggestion = quotes[1];
  } else {
    static const std::array<std::string_view, 8> arrows{" -> ", "->", "\xE2\x86\x92", "=>", " should be ",
                                                        " should read ", " replace with ", " change to "};
    std::size_t best = std::string_view::npos;
    std::size_t best_len = 0;
    for (auto a : arrows) {
      auto f = body.find(a);
      if (f < best) {
        best = f;
        best_len = a.size();
      }
    }
    if (best != std::string_view::npos) {
      r.excerpt = std::string(strip_edges(body.substr(0, best), "", ",;"));
      auto sug = strip_edges(body.substr(best + best_len), "", ",;.");
      if (!sug.empty()) r.suggestion = std::string(sug);
    } else {
      r.excerpt = std::string(body);
    }
  }
  if (r.excerpt.empty()) {
    result.warnings.push_back({"annotation for code " + hit.code + " has no excerpt", std::string(span)});
    return;
  }
  if (!lookup(r.code)) {
    result.warnings.push_back({"unknown proofread code " + r.code, std::string(span)});
    return;
  }
  result.records.push_back(std::move(r));
}

bool is_none_line(std::string_view s) {
  auto lower = text::to_lower_ascii(text::trim(s));
  while (!lower.empty() && (lower.back() == '.' || lower.back() == ';')) lower.pop_back();
  return lower.empty() || lower == "none" || lower == "no errors" || lower == "no error" || lower == "n/a" ||
         lower == "無" || lower == "无";
}

}  // namespace

ParseResult parse_annotations(std::string_view line) {
  ParseResult result;
  try {
    auto trimmed = text::trim(line);
    if (auto strict = parse_canonical(trimmed)) {
      for (auto& r : *strict) {
        if (lookup(r.code)) {
          result.records.push_back(std::move(r));
        } else {
          result.warnings.push_back({"unknown proofread code " + r.code, format_annotations({&r, 1})});
        }
      }
      return result;
    }
    if (is_none_line(trimmed)) return result;

    // Lenient reading: one record per code marker, spanning up to the next marker.
    std::string flat(trimmed);
    std::replace(flat.begin(), flat.end(), '\n', ' ');
    std::replace(flat.begin(), flat.end(), '\r', ' ');
    auto hits = find_code_markers(flat);
    if (hits.empty()) {
      result.warnings.push_back({"no proofread codes found", std::string(trimmed)});
      return result;
    }
    for (std::size_t i = 0; i < hits.size(); ++i) {
      auto end = i + 1 < hits.size() ? hits[i + 1].begin : flat.size();
      read_lenient_span(hits[i], std::string_view(flat).substr(hits[i].end, end - hits[i].end), result);
    }
  } catch (const std::exception& e) {
    result.warnings.push_back({std::string("annotation parser error: ") + e.what(), std::string(line)});
  } catch (...) {
    result.warnings.push_back({"annotation parser error", std::string(line)});
  }
  return result;
}

}  // namespace hmit::codes
