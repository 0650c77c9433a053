#include "hmit/memory.hpp"

#include <algorithm>
#include <mutex>

#include "hmit/error.hpp"
#include "hmit/jsonl.hpp"
#include "hmit/text.hpp"

namespace hmit::memory {

using jsonl::Json;

std::string to_string(const SegmentKey& key) { return "(" + key.doc_id + ", " + std::to_string(key.seg_id) + ")"; }

std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::Corpus:
      return "corpus";
    case Origin::PostEdit:
      return "post-edit";
    case Origin::Pipeline:
      return "pipeline";
  }
  return "";
}

Origin origin_from_string(std::string_view s) {
  if (s == "corpus") return Origin::Corpus;
  if (s == "post-edit") return Origin::PostEdit;
  if (s == "pipeline") return Origin::Pipeline;
  throw ParseError("unknown origin \"" + std::string(s) + "\"");
}

void validate(const TranslationEntry& e) {
  if (e.key.doc_id.empty()) throw ValidationError("translation entry with empty doc_id");
  if (e.key.seg_id < 1) throw ValidationError("translation entry " + to_string(e.key) + " has seg_id < 1");
  if (e.source_text.empty() || e.target_text.empty())
    throw ValidationError("translation entry " + to_string(e.key) + " has empty text");
}

void validate(const ProofreadingEntry& e) {
  if (e.key.doc_id.empty()) throw ValidationError("proofreading entry with empty doc_id");
  if (e.key.seg_id < 1) throw ValidationError("proofreading entry " + to_string(e.key) + " has seg_id < 1");
  if (e.final_translation.empty())
    throw ValidationError("proofreading entry " + to_string(e.key) + " has empty final translation");
  if (e.origin == Origin::Corpus)
    throw ValidationError("proofreading entry " + to_string(e.key) + " cannot have origin corpus");
  for (const auto& r : e.annotated_errors) {
    if (!codes::lookup(r.code)) throw ValidationError("proofreading entry " + to_string(e.key) + ": unknown code " + r.code);
    if (r.excerpt.empty()) throw ValidationError("proofreading entry " + to_string(e.key) + ": empty excerpt");
  }
}

std::string to_record(const TranslationEntry& e) {
  Json j;
  j["doc_id"] = e.key.doc_id;
  j["seg_id"] = e.key.seg_id;
  j["source_text"] = e.source_text;
  j["target_text"] = e.target_text;
  j["origin"] = to_string(e.origin);
  return jsonl::dump_line(j);
}

std::string to_record(const ProofreadingEntry& e) {
  Json j;
  j["doc_id"] = e.key.doc_id;
  j["seg_id"] = e.key.seg_id;
  j["source_text"] = e.source_text;
  j["machine_translation"] = e.machine_translation;
  j["annotated_errors"] = codes::format_annotations(e.annotated_errors);
  j["final_translation"] = e.final_translation;
  j["origin"] = to_string(e.origin);
  j["version"] = e.version;
  return jsonl::dump_line(j);
}

namespace {

Json parse_object(std::string_view line, const std::string& where) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(where + ": record is not an object");
  return j;
}

template <typename T>
T field(const Json& j, const char* name, const std::string& where) {
  if (!j.contains(name)) throw ParseError(where + ": missing field \"" + name + "\"");
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(where + ": bad type for field \"" + name + "\"");
  }
}

}  // namespace

void from_record(std::string_view line, TranslationEntry& out, const std::string& where) {
  auto j = parse_object(line, where);
  out.key = {field<std::string>(j, "doc_id", where), field<std::int64_t>(j, "seg_id", where)};
  out.source_text = field<std::string>(j, "source_text", where);
  out.target_text = field<std::string>(j, "target_text", where);
  out.origin = origin_from_string(field<std::string>(j, "origin", where));
}

void from_record(std::string_view line, ProofreadingEntry& out, const std::string& where) {
  auto j = parse_object(line, where);
  out.key = {field<std::string>(j, "doc_id", where), field<std::int64_t>(j, "seg_id", where)};
  out.source_text = field<std::string>(j, "source_text", where);
  out.machine_translation = field<std::string>(j, "machine_translation", where);
  auto errors = field<std::string>(j, "annotated_errors", where);
  auto parsed = codes::parse_canonical(errors);
  if (!parsed) throw ParseError(where + ": annotated_errors is not in canonical form");
  out.annotated_errors = std::move(*parsed);
  out.final_translation = field<std::string>(j, "final_translation", where);
  out.origin = origin_from_string(field<std::string>(j, "origin", where));
  out.version = j.contains("version") ? field<std::uint64_t>(j, "version", where) : 1;
}

Distance PhysicalOrdering::distance(const SegmentKey& anchor, const SegmentKey& candidate) const {
  if (candidate.doc_id == anchor.doc_id) {
    auto d = candidate.seg_id - anchor.seg_id;
    return {0, d < 0 ? -d : d, candidate.doc_id, candidate.seg_id};
  }
  return {1, 0, candidate.doc_id, candidate.seg_id};
}

// ---------------------------------------------------------------------------

template <typename Entry>
MemoryStore<Entry>::MemoryStore(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(*path_)) return;
  std::size_t lines = 0;
  auto content = jsonl::read_file(*path_);
  std::size_t line_no = 0;
  for (auto line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    Entry e;
    from_record(line, e, path_->string() + ":" + std::to_string(line_no));
    validate(e);
    entries_[e.key] = std::move(e);
    ++lines;
  }
  if (lines > 2 * entries_.size() + 64) compact();
}

template <typename Entry>
MemoryStore<Entry>::MemoryStore(const MemoryStore& other) {
  std::shared_lock lock(other.mutex_);
  path_ = other.path_;
  entries_ = other.entries_;
}

template <typename Entry>
MemoryStore<Entry>& MemoryStore<Entry>::operator=(const MemoryStore& other) {
  if (this == &other) return *this;
  std::unique_lock lock(mutex_, std::defer_lock);
  std::shared_lock other_lock(other.mutex_, std::defer_lock);
  std::lock(lock, other_lock);
  path_ = other.path_;
  entries_ = other.entries_;
  return *this;
}

template <typename Entry>
void MemoryStore<Entry>::upsert(const Entry& entry) {
  validate(entry);
  std::unique_lock lock(mutex_);
  if (path_) jsonl::append_line_durable(*path_, to_record(entry));
  entries_[entry.key] = entry;
}

template <typename Entry>
std::optional<Entry> MemoryStore<Entry>::get(const SegmentKey& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

template <typename Entry>
bool MemoryStore<Entry>::contains(const SegmentKey& key) const {
  std::shared_lock lock(mutex_);
  return entries_.count(key) != 0;
}

template <typename Entry>
std::size_t MemoryStore<Entry>::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

template <typename Entry>
std::vector<Entry> MemoryStore<Entry>::snapshot() const {
  std::shared_lock lock(mutex_);
  std::vector<Entry> out;
  out.reserve(entries_.size());
  for (const auto& [k, e] : entries_) out.push_back(e);
  return out;
}

template <typename Entry>
std::vector<std::int64_t> MemoryStore<Entry>::seg_ids_in(std::string_view doc_id) const {
  std::shared_lock lock(mutex_);
  std::vector<std::int64_t> out;
  for (auto it = entries_.lower_bound({std::string(doc_id), INT64_MIN}); it != entries_.end() && it->first.doc_id == doc_id;
       ++it)
    out.push_back(it->first.seg_id);
  return out;
}

template <typename Entry>
std::vector<std::string> MemoryStore<Entry>::documents() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [k, e] : entries_)
    if (out.empty() || out.back() != k.doc_id) out.push_back(k.doc_id);
  return out;
}

template <typename Entry>
bool MemoryStore<Entry>::accepts(const Entry& e, const NeighborQuery& q) const {
  if (q.exclude_anchor && e.key == q.anchor) return false;
  return q.origins.empty() || q.origins.count(e.origin) != 0;
}

template <typename Entry>
std::vector<Entry> MemoryStore<Entry>::pns_neighbors(const NeighborQuery& query) const {
  if (query.k == 0) throw ValidationError("neighbor query needs k >= 1");
  std::shared_lock lock(mutex_);
  std::vector<Entry> out;
  const auto& doc = query.anchor.doc_id;

  // Same document: walk outwards from the anchor; on equal offsets the lower seg_id wins.
  auto right = entries_.lower_bound(query.anchor);
  auto left = right;
  auto in_doc = [&](auto it) { return it != entries_.end() && it->first.doc_id == doc; };
  bool left_done = left == entries_.begin() || std::prev(left)->first.doc_id != doc;
  if (!left_done) --left;
  bool right_done = !in_doc(right);
  while (out.size() < query.k && (!left_done || !right_done)) {
    bool take_left;
    if (left_done) {
      take_left = false;
    } else if (right_done) {
      take_left = true;
    } else {
      take_left = query.anchor.seg_id - left->first.seg_id <= right->first.seg_id - query.anchor.seg_id;
    }
    if (take_left) {
      if (accepts(left->second, query)) out.push_back(left->second);
      if (left == entries_.begin() || std::prev(left)->first.doc_id != doc) {
        left_done = true;
      } else {
        --left;
      }
    } else {
      if (accepts(right->second, query)) out.push_back(right->second);
      ++right;
      right_done = !in_doc(right);
    }
  }

  // Other documents in key order.
  for (auto it = entries_.begin(); it != entries_.end() && out.size() < query.k; ++it) {
    if (it->first.doc_id == doc) {
      it = std::prev(entries_.upper_bound({doc, INT64_MAX}));
      continue;
    }
    if (accepts(it->second, query)) out.push_back(it->second);
  }
  return out;
}

template <typename Entry>
std::vector<Entry> MemoryStore<Entry>::neighbors(const NeighborQuery& query, const NeighborOrdering& ordering) const {
  if (query.k == 0) throw ValidationError("neighbor query needs k >= 1");
  std::shared_lock lock(mutex_);
  std::vector<std::pair<Distance, const Entry*>> ranked;
  for (const auto& [k, e] : entries_)
    if (accepts(e, query)) ranked.emplace_back(ordering.distance(query.anchor, k), &e);
  auto n = std::min(query.k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n), ranked.end(),
                    [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Entry> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(*ranked[i].second);
  return out;
}

template <typename Entry>
std::string MemoryStore<Entry>::dump_locked() const {
  std::string out;
  for (const auto& [k, e] : entries_) {
    out += to_record(e);
    out.push_back('\n');
  }
  return out;
}

template <typename Entry>
void MemoryStore<Entry>::compact() {
  std::unique_lock lock(mutex_);
  if (path_) jsonl::write_file_atomic(*path_, dump_locked());
}

template <typename Entry>
void MemoryStore<Entry>::export_to(const std::filesystem::path& path) const {
  std::shared_lock lock(mutex_);
  jsonl::write_file_atomic(path, dump_locked());
}

template <typename Entry>
MemoryStore<Entry> MemoryStore<Entry>::import_from(const std::filesystem::path& path) {
  MemoryStore store;
  auto content = jsonl::read_file(path);
  std::size_t line_no = 0;
  for (auto line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto where = path.string() + ":" + std::to_string(line_no);
    Entry e;
    from_record(line, e, where);
    try {
      validate(e);
    } catch (const ValidationError& err) {
      throw ValidationError(where + ": " + err.what());
    }
    if (!store.entries_.emplace(e.key, e).second) throw ValidationError(where + ": duplicate key " + to_string(e.key));
  }
  return store;
}

template class MemoryStore<TranslationEntry>;
template class MemoryStore<ProofreadingEntry>;

std::vector<TranslationEntry> translation_entries_from_corpus(const std::vector<corpus::ParallelSegment>& segments) {
  std::vector<TranslationEntry> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back({{s.doc_id, s.seg_id}, s.source_text, s.target_text, Origin::Corpus});
  return out;
}

}  // namespace hmit::memory
