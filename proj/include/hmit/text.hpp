#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hmit::text {

/// Decodes UTF-8 into Unicode scalar values. Invalid bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

/// Number of Unicode scalar values in a UTF-8 string.
std::size_t count_scalars(std::string_view s);

bool is_cjk(char32_t c);
bool is_space(char32_t c);

std::string_view trim(std::string_view s);
/// A trailing newline ends the last line; it does not open an empty one.
std::vector<std::string_view> split_lines(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);

/// Replaces every non-overlapping occurrence of `from`, left to right.
/// Returns the number of replacements.
std::size_t replace_all(std::string& s, std::string_view from, std::string_view to);
std::size_t count_occurrences(std::string_view s, std::string_view needle);

std::string to_lower_ascii(std::string_view s);
bool starts_with_language(std::string_view lang_tag, std::string_view prefix);

/// True for language tags written without spaces between words (zh, ja, ko).
bool is_cjk_language(std::string_view lang_tag);

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace hmit::text
