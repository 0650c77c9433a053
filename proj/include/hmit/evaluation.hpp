#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hmit/corpus.hpp"
#include "hmit/memory.hpp"
#include "hmit/pipeline.hpp"

namespace hmit::eval {

// ---------------------------------------------------------------------------
// ACS: weighted accuracy / coherence / style score

struct AcsWeights {
  double alpha = 0.6;  // accuracy of legal meaning
  double beta = 0.3;   // coherence and cohesion
  double gamma = 0.1;  // appropriateness of style

  /// Non-negative weights summing to 1 within 1e-9.
  void validate() const;
};

struct AcsScore {
  double a = 0;
  double c = 0;
  double s = 0;
  double i = 0;
  AcsWeights weights;
};

/// i = alpha*a + beta*c + gamma*s; components must lie in [0, 10].
AcsScore compute_acs(double a, double c, double s, const AcsWeights& weights = {});

/// Half-up rounding to `places` decimals, tolerant of binary representation
/// error (9.045 -> 9.05).
double round_half_up(double v, int places);

// ---------------------------------------------------------------------------
// Automated metrics

struct MetricInput {
  std::string source;
  std::string hypothesis;
  std::optional<std::string> reference;
};

/// Sentence/segment-level quality metric returning scores in [0, 1].
class MetricAdapter {
 public:
  virtual ~MetricAdapter() = default;
  virtual const std::string& id() const = 0;
  virtual double score(const MetricInput& in) = 0;
  virtual std::vector<double> score_batch(const std::vector<MetricInput>& batch);
};

/// Character n-gram F-score, n = 1..4 with uniform weights, whitespace ignored.
/// Orders for which neither side has an n-gram are left out of the average.
double char_ngram_fscore(std::string_view hypothesis, std::string_view reference, int max_n = 4);

class OverlapAdapter final : public MetricAdapter {
 public:
  explicit OverlapAdapter(std::string id = "chrF-overlap") : id_(std::move(id)) {}
  const std::string& id() const override { return id_; }
  /// Throws ValidationError without a reference.
  double score(const MetricInput& in) override;

 private:
  std::string id_;
};

std::unique_ptr<MetricAdapter> builtin_overlap_adapter();

/// Runs an external scorer: object-per-line {src, mt, ref} records on stdin,
/// one number per line on stdout.
class CommandAdapter final : public MetricAdapter {
 public:
  CommandAdapter(std::string id, std::string command) : id_(std::move(id)), command_(std::move(command)) {}
  const std::string& id() const override { return id_; }
  double score(const MetricInput& in) override;
  std::vector<double> score_batch(const std::vector<MetricInput>& batch) override;

 private:
  std::string id_;
  std::string command_;
};

/// POSTs {"records": [{src, mt, ref}, ...]} and expects {"scores": [...]}.
class HttpAdapter final : public MetricAdapter {
 public:
  HttpAdapter(std::string id, std::string url) : id_(std::move(id)), url_(std::move(url)) {}
  const std::string& id() const override { return id_; }
  double score(const MetricInput& in) override;
  std::vector<double> score_batch(const std::vector<MetricInput>& batch) override;

 private:
  std::string id_;
  std::string url_;
};

// ---------------------------------------------------------------------------
// Configuration matrix

struct MatrixRow {
  agents::PipelineConfig config;
  /// Index of the row this one reports its deltas against.
  std::optional<std::size_t> baseline;
};

struct MatrixSpec {
  std::vector<MatrixRow> rows;

  /// {"rows": [{"config": "mas01.json"}, {"config": "mas02.json", "baseline": "MAS 1"}, ...]};
  /// config paths resolve against the matrix file's directory.
  static MatrixSpec from_file(const std::filesystem::path& path);
  /// The eleven-row ablation: T-only / T+P / T+A+P with 0 or 5 shots, deltas of
  /// rows 2-5 against row 1 and rows 7-10 against row 6, row 11 manual annotation.
  static MatrixSpec table1(const std::filesystem::path& manual_annotations, const std::string& backend = "mock");
};

struct MatrixCell {
  std::optional<double> mean;
  std::optional<double> delta;
  std::size_t scored = 0;
  std::string error;
};

struct MatrixReport {
  std::vector<std::string> metric_ids;
  struct Row {
    std::string name;
    std::string translator;
    std::string annotator;
    std::string proofreader;
    std::optional<std::string> baseline;
    std::vector<MatrixCell> cells;
    std::size_t failed_segments = 0;
  };
  std::vector<Row> rows;
};

/// Initial memories every configuration starts from; each row gets its own copy.
struct MemorySeed {
  memory::TranslationMemory translation;
  memory::ProofreadingMemory proofreading;
};

/// Runs each configuration over the test set (grouped by document, in order)
/// and scores final translations against the references. Corpus-level score is
/// the unweighted mean of segment scores. An adapter failure marks its cell only.
MatrixReport run_config_matrix(const MatrixSpec& spec, const std::vector<corpus::ParallelSegment>& testset,
                               const MemorySeed& seed, agents::BackendRegistry& backends,
                               const std::vector<MetricAdapter*>& adapters, const prompts::RolePrompts& roles);

std::string format_matrix_table(const MatrixReport& report);
std::string format_matrix_records(const MatrixReport& report);

// ---------------------------------------------------------------------------
// Human evaluation sheets

using SentenceSplitter = std::function<std::vector<std::string>(std::string_view text, std::string_view lang)>;

/// Splits after 。！？ (plus closing quotes) and after . ! ? followed by whitespace.
std::vector<std::string> split_sentences(std::string_view text, std::string_view lang);

struct SystemOutput {
  std::string system_id;
  std::map<memory::SegmentKey, std::string> translations;
};

struct EvalSheetRow {
  std::int64_t segment_no = 0;
  std::int64_t sentence_no = 0;
  std::string source_sentence;
  std::string blinded_id;
  std::string translation;
  std::optional<double> a;
  std::optional<double> c;
  std::optional<double> s;

  friend bool operator==(const EvalSheetRow&, const EvalSheetRow&) = default;
};

struct EvalSheet {
  std::vector<EvalSheetRow> rows;
  /// blinded id -> system id; written to a separate sealed file.
  std::map<std::string, std::string> mapping;
};

/// Samples `sample_size` segments with `seed`, splits each system's translation
/// into sentences, blinds system ids and shuffles the rows. Source sentences are
/// paired by index when the source splits into as many sentences, otherwise the
/// whole source paragraph is shown.
EvalSheet make_eval_sheet(const std::vector<corpus::ParallelSegment>& segments, std::size_t sample_size,
                          const std::vector<SystemOutput>& systems, const SentenceSplitter& splitter,
                          std::uint64_t seed);

void write_sheet(const std::filesystem::path& path, const std::vector<EvalSheetRow>& rows);
std::vector<EvalSheetRow> read_sheet(const std::filesystem::path& path);
void write_mapping(const std::filesystem::path& path, const std::map<std::string, std::string>& mapping);
std::map<std::string, std::string> read_mapping(const std::filesystem::path& path);

struct SystemEvaluation {
  std::string system_id;
  AcsScore score;
  std::size_t rows = 0;
};

struct EvalSummary {
  std::vector<SystemEvaluation> systems;  // baseline first, then by system id
  std::string baseline;
};

/// Per-system means of A, C and S, then ACS. Throws ValidationError on an
/// unscored row and NotFoundError on an unknown blinded id.
EvalSummary score_eval_sheet(const std::vector<EvalSheetRow>& rows, const std::map<std::string, std::string>& mapping,
                             const AcsWeights& weights, const std::string& baseline_system);

/// Relative change of `value` over `baseline` after rounding both to two
/// decimals, as "+4.60%".
std::string format_delta(double value, double baseline);

/// System | A | C | S | ACS, non-baseline cells carrying their delta.
std::string format_eval_table(const EvalSummary& summary);

}  // namespace hmit::eval
