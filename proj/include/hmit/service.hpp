#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "hmit/corpus.hpp"
#include "hmit/costing.hpp"
#include "hmit/evaluation.hpp"
#include "hmit/glossary.hpp"
#include "hmit/memory.hpp"
#include "hmit/pipeline.hpp"

namespace httplib {
class Server;
}

namespace hmit::service {

struct BackendSpec {
  std::string id;
  std::string kind = "mock";  // mock | openai
  std::string endpoint;
  std::string model;
  std::string api_key_env;  // name of the variable holding the key
  std::uint64_t seed = 0x5eed;
  int timeout_s = 120;
};

/// Where a workspace keeps its files. Relative paths resolve against `root`.
struct WorkspaceConfig {
  std::filesystem::path root = ".";
  std::filesystem::path corpus = "corpus.jsonl";
  std::filesystem::path sources = "sources.jsonl";
  std::filesystem::path translation_memory = "memory/translation.jsonl";
  std::filesystem::path proofreading_memory = "memory/proofreading.jsonl";
  std::filesystem::path glossary = "glossary.tsv";
  std::filesystem::path pricing = "pricing.jsonl";
  std::filesystem::path runs_dir = "runs";
  std::filesystem::path eval_dir = "eval";
  std::vector<BackendSpec> backends;
  agents::RetryPolicy retry;

  std::filesystem::path resolve(const std::filesystem::path& p) const { return p.is_absolute() ? p : root / p; }

  /// JSON object; `root` defaults to the config file's directory.
  static WorkspaceConfig from_file(const std::filesystem::path& path);
  static WorkspaceConfig in_directory(const std::filesystem::path& root);
};

struct IngestReport {
  std::size_t added = 0;
  std::size_t updated = 0;
  std::size_t unchanged = 0;
};

/// A paragraph as the post-editor sees it.
struct SegmentView {
  memory::SegmentKey key;
  std::string source_text;
  std::optional<memory::ProofreadingEntry> entry;  // absent until the paragraph is translated
};

enum class EditScope { Segment, ReplaceAll };

struct PostEditSubmission {
  memory::SegmentKey key;  // seg_id unused for ReplaceAll
  EditScope scope = EditScope::Segment;
  std::string edited_translation;
  std::optional<std::vector<codes::AnnotationRecord>> editor_annotations;
  /// Version the editor saw; a mismatch is a conflict.
  std::optional<std::uint64_t> expected_version;
  std::string find;
  std::string replace;
};

struct EditResult {
  std::size_t changes = 0;  // occurrences replaced (ReplaceAll) or 1
  std::vector<memory::ProofreadingEntry> updated;
};

enum class JobState { Queued, Running, Done, Failed };
std::string_view to_string(JobState s);

struct JobStatus {
  std::string job_id;
  std::string doc_id;
  std::string config_name;
  JobState state = JobState::Queued;
  std::size_t done = 0;
  std::size_t total = 0;
  std::vector<memory::SegmentKey> failed;
  std::string error;
};

/// File-backed project state plus the job runner. Thread-safe.
class Workspace {
 public:
  explicit Workspace(WorkspaceConfig config);
  ~Workspace();
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  const WorkspaceConfig& config() const { return config_; }

  /// Merges a parallel corpus into the corpus file and seeds the translation
  /// memory (origin corpus) with pairs it does not hold yet.
  IngestReport ingest_corpus(const std::filesystem::path& corpus_file);
  /// Object-per-line {doc_id, seg_id, source} paragraphs to translate.
  IngestReport ingest_sources(const std::filesystem::path& sources_file);
  /// Segments raw judgment text into paragraphs of `doc_id`.
  IngestReport ingest_source_text(const std::string& doc_id, std::string_view raw, const corpus::SegmentationRules& rules);
  /// Copies a glossary file into the workspace; returns the entry count.
  std::size_t ingest_glossary(const std::filesystem::path& glossary_file);

  std::vector<std::string> documents() const;
  /// Throws NotFoundError.
  std::vector<SegmentView> segments(const std::string& doc_id) const;
  SegmentView segment(const memory::SegmentKey& key) const;
  std::vector<corpus::ParallelSegment> reference_corpus() const;

  memory::TranslationMemory& translation_memory() { return tm_; }
  memory::ProofreadingMemory& proofreading_memory() { return pm_; }
  agents::BackendRegistry& backends() { return backends_; }

  /// Runs the pipeline synchronously over `doc_id` (or the given paragraphs of
  /// it), writing the run log and usage ledger under runs_dir.
  agents::RunResult run(const std::string& doc_id, const agents::PipelineConfig& config,
                        const std::vector<std::int64_t>& seg_ids = {}, const std::string& run_id = {},
                        std::function<void(std::size_t, std::size_t)> on_progress = {});

  /// Same, on a background thread. Returns the job id.
  std::string start_job(const std::string& doc_id, const agents::PipelineConfig& config,
                        const std::vector<std::int64_t>& seg_ids = {});
  std::optional<JobStatus> job(const std::string& job_id) const;
  std::vector<JobStatus> jobs() const;
  /// Blocks until the job leaves queued/running.
  JobStatus wait(const std::string& job_id) const;

  /// Durable before returning. Throws NotFoundError, ConflictError, ValidationError.
  EditResult submit(const PostEditSubmission& submission);

  std::filesystem::path run_log_path(const std::string& run_id) const;
  std::filesystem::path usage_path(const std::string& run_id) const;
  /// Final translations persisted by a run, read back from its run log.
  std::map<memory::SegmentKey, std::string> run_outputs(const std::string& run_id) const;

  costing::PricingTable pricing() const;
  /// Cost of the runs' ledgers against the human translation of the same source words.
  std::string cost_report(const std::vector<std::string>& run_ids) const;

  /// Writes sheet and sealed mapping under eval_dir; returns the sheet id.
  std::string export_eval_sheet(const std::vector<std::pair<std::string, std::string>>& systems_to_runs,
                                std::size_t sample_size, std::uint64_t seed);
  std::filesystem::path eval_sheet_path(const std::string& sheet_id) const;
  std::filesystem::path eval_mapping_path(const std::string& sheet_id) const;

  /// Object-per-line source / final / annotations of every paragraph of a document.
  std::string vetting_bundle(const std::string& doc_id) const;

 private:
  agents::RunResult run_impl(const std::string& doc_id, const agents::PipelineConfig& config,
                             const std::vector<std::int64_t>& seg_ids, const std::string& run_id,
                             std::function<void(std::size_t, std::size_t)> on_progress,
                             std::function<void(const memory::SegmentKey&)> before_segment);
  bool pending_in_job(const memory::SegmentKey& key) const;
  std::unique_lock<std::mutex> lock_document(const std::string& doc_id);
  std::vector<agents::SourceSegment> sources_of(const std::string& doc_id) const;
  void save_sources_locked() const;
  const glossary::Glossary* glossary();
  std::string fresh_id(const std::string& prefix);

  WorkspaceConfig config_;
  memory::TranslationMemory tm_;
  memory::ProofreadingMemory pm_;
  agents::BackendRegistry backends_;
  prompts::RolePrompts roles_;

  mutable std::mutex state_mutex_;
  std::map<memory::SegmentKey, std::string> sources_;
  std::map<std::string, std::unique_ptr<std::mutex>> doc_locks_;
  std::optional<glossary::Glossary> glossary_;
  std::uint64_t id_counter_ = 0;

  struct Job {
    JobStatus status;
    std::set<memory::SegmentKey> pending;
    std::thread thread;
  };
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  mutable std::condition_variable jobs_cv_;
};

/// Registers the JSON API routes on `server`; see docs/api.md.
void mount_api(httplib::Server& server, Workspace& workspace);

}  // namespace hmit::service
