#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "hmit/corpus.hpp"
#include "hmit/proofread_codes.hpp"

namespace hmit::memory {

/// Position of a paragraph: judgment document number and paragraph number.
struct SegmentKey {
  std::string doc_id;
  std::int64_t seg_id = 0;

  friend auto operator<=>(const SegmentKey&, const SegmentKey&) = default;
  friend bool operator==(const SegmentKey&, const SegmentKey&) = default;
};

std::string to_string(const SegmentKey& key);

enum class Origin { Corpus, PostEdit, Pipeline };

std::string_view to_string(Origin o);
Origin origin_from_string(std::string_view s);

struct TranslationEntry {
  SegmentKey key;
  std::string source_text;
  std::string target_text;
  Origin origin = Origin::Corpus;

  friend bool operator==(const TranslationEntry&, const TranslationEntry&) = default;
};

/// Source, machine translation, annotated errors and final translation of one paragraph.
struct ProofreadingEntry {
  SegmentKey key;
  std::string source_text;
  std::string machine_translation;
  std::vector<codes::AnnotationRecord> annotated_errors;
  std::string final_translation;
  Origin origin = Origin::Pipeline;
  /// Bumped on every rewrite of this key; used for optimistic concurrency.
  std::uint64_t version = 1;

  friend bool operator==(const ProofreadingEntry&, const ProofreadingEntry&) = default;
};

/// Throws ValidationError when an entry breaks its type invariants.
void validate(const TranslationEntry& e);
void validate(const ProofreadingEntry& e);

std::string to_record(const TranslationEntry& e);
std::string to_record(const ProofreadingEntry& e);
/// Parses one object-per-line record; `where` prefixes error messages.
void from_record(std::string_view line, TranslationEntry& out, const std::string& where = {});
void from_record(std::string_view line, ProofreadingEntry& out, const std::string& where = {});

struct NeighborQuery {
  SegmentKey anchor;
  std::size_t k = 5;
  bool exclude_anchor = true;
  /// Only entries with one of these origins are candidates; empty means all.
  std::set<Origin> origins;
};

/// Sort key of an entry relative to an anchor. Smaller is closer.
struct Distance {
  int tier = 0;
  std::int64_t offset = 0;
  std::string doc_id;
  std::int64_t seg_id = 0;

  friend auto operator<=>(const Distance&, const Distance&) = default;
};

/// Swappable notion of "closest"; callers only see ranked entries.
class NeighborOrdering {
 public:
  virtual ~NeighborOrdering() = default;
  virtual Distance distance(const SegmentKey& anchor, const SegmentKey& candidate) const = 0;
};

/// Positional proximity: same document by |seg_id difference|, then every
/// other document in lexicographic doc_id order, seg_id ascending.
class PhysicalOrdering final : public NeighborOrdering {
 public:
  Distance distance(const SegmentKey& anchor, const SegmentKey& candidate) const override;
};

/// File-backed keyed store with last-writer-wins upserts.
///
/// The backing file is an append log of object-per-line records; a later
/// record for a key supersedes earlier ones. Upserts are fsynced before
/// returning. One writer at a time, any number of readers.
template <typename Entry>
class MemoryStore {
 public:
  MemoryStore() = default;
  /// Opens (or creates) a store backed by `path`.
  explicit MemoryStore(std::filesystem::path path);

  MemoryStore(const MemoryStore& other);
  MemoryStore& operator=(const MemoryStore& other);

  void upsert(const Entry& entry);
  std::optional<Entry> get(const SegmentKey& key) const;
  bool contains(const SegmentKey& key) const;
  std::size_t size() const;
  std::vector<Entry> snapshot() const;
  std::vector<std::int64_t> seg_ids_in(std::string_view doc_id) const;
  std::vector<std::string> documents() const;

  /// Up to `query.k` entries ranked by physical distance to the anchor.
  std::vector<Entry> pns_neighbors(const NeighborQuery& query) const;
  /// Same contract under an arbitrary ordering (full sort).
  std::vector<Entry> neighbors(const NeighborQuery& query, const NeighborOrdering& ordering) const;

  /// Rewrites the backing file with one record per key.
  void compact();
  /// Writes every entry, one record per key, ordered by key.
  void export_to(const std::filesystem::path& path) const;
  /// Strict import: duplicate keys or invalid entries are errors.
  static MemoryStore import_from(const std::filesystem::path& path);

  const std::optional<std::filesystem::path>& path() const { return path_; }
  /// Drops the backing file so later upserts stay in memory.
  void detach() { path_.reset(); }

 private:
  std::string dump_locked() const;
  bool accepts(const Entry& e, const NeighborQuery& q) const;

  std::optional<std::filesystem::path> path_;
  std::map<SegmentKey, Entry> entries_;
  mutable std::shared_mutex mutex_;
};

using TranslationMemory = MemoryStore<TranslationEntry>;
using ProofreadingMemory = MemoryStore<ProofreadingEntry>;

std::vector<TranslationEntry> translation_entries_from_corpus(const std::vector<corpus::ParallelSegment>& segments);

}  // namespace hmit::memory
