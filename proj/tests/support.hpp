#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

#include "hmit/jsonl.hpp"

namespace hmit::testing {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(HMIT_FIXTURE_DIR) / name; }
inline std::filesystem::path golden(const std::string& name) { return std::filesystem::path(HMIT_GOLDEN_DIR) / name; }
inline std::filesystem::path config_file(const std::string& name) { return std::filesystem::path(HMIT_CONFIG_DIR) / name; }

/// Fresh directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "hmit-test-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  jsonl::write_file_atomic(p, content);
}

}  // namespace hmit::testing
