#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "hmit/memory.hpp"

namespace hmit::prompts {

/// Display names used inside the task lines ("English text:", "Translate to
/// Traditional Chinese text:").
struct LanguageNames {
  std::string source = "English";
  std::string target = "Traditional Chinese";

  static LanguageNames for_tags(std::string_view source_tag, std::string_view target_tag);
};

/// Role prompt texts for the three agents, loaded from editable assets.
/// A "{proofread_codes}" placeholder expands to the code registry listing.
struct RolePrompts {
  std::string translator;
  std::string annotator;
  std::string proofreader;

  static RolePrompts load(const std::filesystem::path& dir);
  /// The assets shipped with the project.
  static RolePrompts defaults();
};

/// One line per code: "CODE (Category): description".
std::string proofread_code_listing();

/// Zero-shot when `examples` is empty, otherwise one two-line block per example
/// in the given order, then the task block.
std::string build_translator_prompt(std::string_view src, std::span<const memory::TranslationEntry> examples,
                                    std::string_view role_prompt, const LanguageNames& lang = {});

/// Throws ValidationError when `mt` is empty.
std::string build_annotator_prompt(std::string_view src, std::string_view mt, std::string_view role_prompt);

/// `errors_line` must be in canonical annotation form. Few-shot examples render
/// their source, machine translation, annotated errors and final translation.
std::string build_proofreader_prompt(std::string_view src, std::string_view mt, std::string_view errors_line,
                                     std::span<const memory::ProofreadingEntry> examples,
                                     std::string_view role_prompt);

inline constexpr std::string_view kOneLineInstruction = "(Do not output in separate lines; output only in one line.)";

}  // namespace hmit::prompts
