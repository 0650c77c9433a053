#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "hmit/backend.hpp"
#include "hmit/costing.hpp"
#include "hmit/glossary.hpp"
#include "hmit/jsonl.hpp"
#include "hmit/memory.hpp"
#include "hmit/prompts.hpp"

namespace hmit::agents {

struct AgentSpec {
  Role role = Role::Translator;
  std::string backend_id = "mock";
  int shots = 0;  // always 0 for the annotator
  GenerationParams params;

  friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

/// Annotations supplied by a human expert instead of the annotator agent.
struct ManualAnnotation {
  /// Object-per-line {doc_id, seg_id, annotations}, annotations in canonical one-line form.
  std::filesystem::path annotations_file;

  friend bool operator==(const ManualAnnotation&, const ManualAnnotation&) = default;
};

using AnnotatorChoice = std::variant<AgentSpec, ManualAnnotation>;

/// One row of the configuration matrix: which backend plays each role and how many shots it gets.
struct PipelineConfig {
  std::string name;
  AgentSpec translator{Role::Translator};
  std::optional<AnnotatorChoice> annotator;
  std::optional<AgentSpec> proofreader;
  std::string source_lang = "en";
  std::string target_lang = "zh-HK";
  std::string glossary_id = "doj-combined";
  bool use_glossary = false;
  std::string translation_memory_id = "translation";
  std::string proofreading_memory_id = "proofreading";
  /// Origins eligible as few-shot examples; empty means every origin.
  std::set<memory::Origin> translator_example_origins;
  std::set<memory::Origin> proofreader_example_origins;

  /// Throws ValidationError on a broken config.
  void validate() const;
  /// "T/A/P" shot summary as in the matrix report, e.g. "5 / LLM / 0".
  std::string shot_summary() const;

  /// Relative manual-annotation paths resolve against `base_dir`.
  static PipelineConfig from_json(const jsonl::Json& j, const std::filesystem::path& base_dir = {});
  static PipelineConfig from_file(const std::filesystem::path& path);
  jsonl::Json to_json() const;
};

/// Paragraph to translate.
struct SourceSegment {
  memory::SegmentKey key;
  std::string text;
};

struct RunLogRecord {
  std::string run_id;
  memory::SegmentKey key;
  std::string phase;  // translate | annotate | proofread | persist | failed
  std::string backend_id;
  std::string prompt;
  std::string response;
  std::vector<std::string> warnings;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  bool estimated_tokens = false;
  int attempts = 0;
  /// Keys of the few-shot examples offered, in prompt order.
  std::vector<memory::SegmentKey> examples;
  /// seg_ids of the same document present in the consulted memory at selection time.
  std::vector<std::int64_t> pool_same_doc;
  std::string timestamp;

  std::string to_record(bool with_timestamp = true) const;
  static RunLogRecord from_record(std::string_view line);
};

struct RunResult {
  std::string run_id;
  std::vector<memory::ProofreadingEntry> entries;
  std::vector<RunLogRecord> log;
  costing::UsageLedger usage;
  std::vector<memory::SegmentKey> failed;

  std::string log_records(bool with_timestamps = true) const;
};

struct RunContext {
  memory::TranslationMemory& translation_memory;
  memory::ProofreadingMemory& proofreading_memory;
  BackendRegistry& backends;
  prompts::RolePrompts roles = prompts::RolePrompts::defaults();
  const glossary::Glossary* glossary = nullptr;
  RetryPolicy retry;
  std::string run_id = "run";
  /// Timestamp source for run-log records; defaults to UTC wall clock.
  std::function<std::string()> clock;
  /// Called after each segment is persisted, with (done, total).
  std::function<void(std::size_t, std::size_t)> on_progress;
  /// Called right before a segment is processed.
  std::function<void(const memory::SegmentKey&)> before_segment;
  /// Serializes memory writes of one document across concurrent runs.
  std::function<std::unique_lock<std::mutex>(const std::string& doc_id)> lock_document;
};

/// Manual annotation table keyed by segment.
std::map<memory::SegmentKey, std::string> load_manual_annotations(const std::filesystem::path& path);

/// Runs translation, annotation and proofreading over the paragraphs in order.
/// Each finished paragraph is written to both memories before the next one
/// starts, so later paragraphs can draw on it as an example. A paragraph whose
/// backend keeps failing is recorded in `failed` and skipped.
RunResult run_tap(const std::vector<SourceSegment>& doc, const PipelineConfig& config, RunContext& ctx);

std::string iso_timestamp_now();

}  // namespace hmit::agents
