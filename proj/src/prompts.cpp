#include "hmit/prompts.hpp"

#include "hmit/error.hpp"
#include "hmit/jsonl.hpp"
#include "hmit/text.hpp"

namespace hmit::prompts {

LanguageNames LanguageNames::for_tags(std::string_view source_tag, std::string_view target_tag) {
  auto name = [](std::string_view tag) -> std::string {
    auto lower = text::to_lower_ascii(tag);
    if (lower == "en" || text::starts_with_language(lower, "en")) return "English";
    if (lower == "zh-hk" || lower == "zh-tw" || lower == "zh-hant" || lower == "zh-mo") return "Traditional Chinese";
    if (lower == "zh-cn" || lower == "zh-hans" || lower == "zh-sg") return "Simplified Chinese";
    if (text::starts_with_language(lower, "zh")) return "Chinese";
    return std::string(tag);
  };
  return {name(source_tag), name(target_tag)};
}

std::string proofread_code_listing() {
  std::string out;
  for (const auto& c : codes::registry()) {
    if (!out.empty()) out.push_back('\n');
    out += std::string(c.code) + " (" + std::string(codes::to_string(c.category)) + "): " + std::string(c.description);
  }
  return out;
}

namespace {

std::string load_role(const std::filesystem::path& path) {
  std::string s(text::trim(jsonl::read_file(path)));
  text::replace_all(s, "{proofread_codes}", proofread_code_listing());
  return s;
}

void append_line(std::string& out, std::string_view line) {
  if (!out.empty()) out.push_back('\n');
  out.append(line);
}

}  // namespace

RolePrompts RolePrompts::load(const std::filesystem::path& dir) {
  return {load_role(dir / "translator.txt"), load_role(dir / "annotator.txt"), load_role(dir / "proofreader.txt")};
}

RolePrompts RolePrompts::defaults() { return load(std::filesystem::path(HMIT_ASSET_DIR) / "prompts"); }

std::string build_translator_prompt(std::string_view src, std::span<const memory::TranslationEntry> examples,
                                    std::string_view role_prompt, const LanguageNames& lang) {
  const std::string src_label = lang.source + " text: ";
  const std::string cue = "Translate to " + lang.target + " text:";
  std::string out(role_prompt);
  out += "\n";
  if (examples.empty()) {
    append_line(out, src_label + std::string(src));
    append_line(out, "");
    append_line(out, cue);
    return out;
  }
  for (const auto& ex : examples) {
    append_line(out, src_label + ex.source_text);
    append_line(out, cue + " " + ex.target_text);
    append_line(out, "");
  }
  append_line(out, src_label + std::string(src));
  append_line(out, cue);
  return out;
}

std::string build_annotator_prompt(std::string_view src, std::string_view mt, std::string_view role_prompt) {
  if (mt.empty()) throw ValidationError("annotator prompt needs a non-empty machine translation");
  std::string out(role_prompt);
  out += "\n";
  append_line(out, "Source text: " + std::string(src));
  append_line(out, "");
  append_line(out, "machine translation: " + std::string(mt));
  append_line(out, "");
  append_line(out, "Annotated errors: " + std::string(kOneLineInstruction));
  return out;
}

std::string build_proofreader_prompt(std::string_view src, std::string_view mt, std::string_view errors_line,
                                     std::span<const memory::ProofreadingEntry> examples,
                                     std::string_view role_prompt) {
  std::string out(role_prompt);
  out += "\n";
  if (examples.empty()) {
    append_line(out, "Source text: " + std::string(src));
    append_line(out, "");
    append_line(out, "machine translation: " + std::string(mt));
    append_line(out, "");
    append_line(out, "Annotated errors: " + std::string(errors_line));
    append_line(out, "");
    append_line(out, "Final translation: " + std::string(kOneLineInstruction));
    return out;
  }
  for (const auto& ex : examples) {
    append_line(out, "Source text: " + ex.source_text);
    append_line(out, "machine translation: " + ex.machine_translation);
    append_line(out, "Annotated errors: " + codes::format_annotations(ex.annotated_errors));
    append_line(out, "Final translation: " + ex.final_translation);
    append_line(out, "");
  }
  append_line(out, "Source text: " + std::string(src));
  append_line(out, "machine translation: " + std::string(mt));
  append_line(out, "Annotated errors: " + std::string(errors_line));
  append_line(out, "Final translation:");
  return out;
}

}  // namespace hmit::prompts
