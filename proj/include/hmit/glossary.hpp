#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hmit::glossary {

struct GlossaryEntry {
  std::string term;
  std::string preferred_translation;
};

/// Bilingual term list. Matching is ASCII case-insensitive on whole words.
class Glossary {
 public:
  Glossary() = default;
  Glossary(std::string id, std::vector<GlossaryEntry> entries);

  /// "term<TAB>translation" lines or object-per-line {"term", "translation"} records.
  static Glossary from_file(const std::filesystem::path& path, std::string id = "");

  const std::string& id() const { return id_; }
  const std::vector<GlossaryEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::string id_;
  std::vector<GlossaryEntry> entries_;  // longest term first
};

/// Glossary terms found in `src`, leftmost-longest and non-overlapping, each
/// reported once in order of first occurrence.
std::vector<std::pair<std::string, std::string>> glossary_inject(std::string_view src, const Glossary& glossary);

/// Constraint lines appended to the translator role prompt; empty when nothing matched.
std::string constraint_block(const std::vector<std::pair<std::string, std::string>>& matches);

}  // namespace hmit::glossary
