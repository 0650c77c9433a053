#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

#include "hmit/error.hpp"

namespace hmit::jsonl {

using Json = nlohmann::ordered_json;

/// Calls `fn(record, line_no)` for every non-blank line of an object-per-line file.
inline void for_each_record(const std::filesystem::path& path,
                            const std::function<void(const Json&, std::size_t)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": record is not an object");
    fn(j, line_no);
  }
}

/// One compact line, UTF-8 passed through unescaped.
inline std::string dump_line(const Json& j) { return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace); }

/// Writes `content` to a sibling temp file, flushes it to disk, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Appends `line` + '\n' and fsyncs before returning.
void append_line_durable(const std::filesystem::path& path, const std::string& line);

std::string read_file(const std::filesystem::path& path);

}  // namespace hmit::jsonl
