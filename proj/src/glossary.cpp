#include "hmit/glossary.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "hmit/error.hpp"
#include "hmit/jsonl.hpp"
#include "hmit/text.hpp"

namespace hmit::glossary {

Glossary::Glossary(std::string id, std::vector<GlossaryEntry> entries) : id_(std::move(id)), entries_(std::move(entries)) {
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const auto& a, const auto& b) { return a.term.size() > b.term.size(); });
}

Glossary Glossary::from_file(const std::filesystem::path& path, std::string id) {
  std::vector<GlossaryEntry> entries;
  auto content = jsonl::read_file(path);
  std::size_t line_no = 0;
  for (auto line : text::split_lines(content)) {
    ++line_no;
    line = text::trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '{') {
      auto j = jsonl::Json::parse(line);
      entries.push_back({j.at("term").get<std::string>(), j.at("translation").get<std::string>()});
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected term<TAB>translation");
    entries.push_back({std::string(text::trim(line.substr(0, tab))), std::string(text::trim(line.substr(tab + 1)))});
  }
  if (id.empty()) id = path.stem().string();
  return Glossary(std::move(id), std::move(entries));
}

namespace {

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool matches_at(std::string_view lower_src, std::size_t pos, std::string_view lower_term) {
  if (lower_term.empty() || pos + lower_term.size() > lower_src.size()) return false;
  if (lower_src.compare(pos, lower_term.size(), lower_term) != 0) return false;
  if (word_char(lower_term.front()) && pos > 0 && word_char(lower_src[pos - 1])) return false;
  auto end = pos + lower_term.size();
  if (word_char(lower_term.back()) && end < lower_src.size() && word_char(lower_src[end])) return false;
  return true;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> glossary_inject(std::string_view src, const Glossary& glossary) {
  std::vector<std::pair<std::string, std::string>> out;
  if (glossary.empty()) return out;
  auto lower_src = text::to_lower_ascii(src);
  std::vector<std::string> lower_terms;
  lower_terms.reserve(glossary.entries().size());
  for (const auto& e : glossary.entries()) lower_terms.push_back(text::to_lower_ascii(e.term));

  std::set<std::string> seen;
  std::size_t pos = 0;
  while (pos < lower_src.size()) {
    bool hit = false;
    // entries are sorted longest first, so the first match is the longest
    for (std::size_t i = 0; i < lower_terms.size(); ++i) {
      if (!matches_at(lower_src, pos, lower_terms[i])) continue;
      const auto& e = glossary.entries()[i];
      if (seen.insert(e.term).second) out.emplace_back(e.term, e.preferred_translation);
      pos += lower_terms[i].size();
      hit = true;
      break;
    }
    if (!hit) ++pos;
  }
  return out;
}

std::string constraint_block(const std::vector<std::pair<std::string, std::string>>& matches) {
  if (matches.empty()) return {};
  std::string out = "Use the following preferred translations for legal terms:";
  for (const auto& [term, tr] : matches) out += "\n" + term + " => " + tr;
  return out;
}

}  // namespace hmit::glossary
