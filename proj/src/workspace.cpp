#include <chrono>
#include <cstdlib>
#include <limits>

#include "hmit/error.hpp"
#include "hmit/jsonl.hpp"
#include "hmit/service.hpp"
#include "hmit/text.hpp"

namespace hmit::service {

using jsonl::Json;
using memory::Origin;
using memory::SegmentKey;

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::Queued:
      return "queued";
    case JobState::Running:
      return "running";
    case JobState::Done:
      return "done";
    case JobState::Failed:
      return "failed";
  }
  return "";
}

WorkspaceConfig WorkspaceConfig::in_directory(const std::filesystem::path& root) {
  WorkspaceConfig c;
  c.root = root;
  return c;
}

WorkspaceConfig WorkspaceConfig::from_file(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(jsonl::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(path.string() + ": config is not an object");
  auto c = in_directory(path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
  try {
    if (j.contains("root")) c.root = c.resolve(j["root"].get<std::string>());
    auto str = [&](const char* key, std::filesystem::path& out) {
      if (j.contains(key)) out = j[key].get<std::string>();
    };
    str("corpus", c.corpus);
    str("sources", c.sources);
    str("glossary", c.glossary);
    str("pricing", c.pricing);
    str("runs_dir", c.runs_dir);
    str("eval_dir", c.eval_dir);
    if (j.contains("memory")) {
      const auto& m = j["memory"];
      if (m.contains("translation")) c.translation_memory = m["translation"].get<std::string>();
      if (m.contains("proofreading")) c.proofreading_memory = m["proofreading"].get<std::string>();
    }
    if (j.contains("retry")) {
      const auto& r = j["retry"];
      c.retry.attempts = r.value("attempts", c.retry.attempts);
      c.retry.initial_backoff = std::chrono::milliseconds(r.value("initial_backoff_ms", c.retry.initial_backoff.count()));
      c.retry.multiplier = r.value("multiplier", c.retry.multiplier);
    }
    for (const auto& b : j.value("backends", Json::array())) {
      BackendSpec s;
      s.id = b.at("id").get<std::string>();
      s.kind = b.value("kind", s.kind);
      s.endpoint = b.value("endpoint", s.endpoint);
      s.model = b.value("model", s.model);
      s.api_key_env = b.value("api_key_env", s.api_key_env);
      s.seed = b.value("seed", s.seed);
      s.timeout_s = b.value("timeout_s", s.timeout_s);
      if (s.kind != "mock" && s.kind != "openai")
        throw ValidationError(path.string() + ": backend \"" + s.id + "\" has unknown kind \"" + s.kind + "\"");
      c.backends.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------

Workspace::Workspace(WorkspaceConfig config) : config_(std::move(config)) {
  namespace fs = std::filesystem;
  auto tm_path = config_.resolve(config_.translation_memory);
  auto pm_path = config_.resolve(config_.proofreading_memory);
  for (const auto& d : {config_.root, tm_path.parent_path(), pm_path.parent_path(), config_.resolve(config_.runs_dir),
                        config_.resolve(config_.eval_dir)})
    if (!d.empty()) fs::create_directories(d);
  tm_ = memory::TranslationMemory(tm_path);
  pm_ = memory::ProofreadingMemory(pm_path);
  roles_ = prompts::RolePrompts::defaults();

  for (const auto& b : config_.backends) {
    if (b.kind == "mock") {
      backends_.add(b.id, [b](agents::Role r) { return std::make_shared<agents::MockBackend>(r, b.id, b.seed); });
    } else {
      agents::RemoteBackendConfig rc{b.id, b.endpoint, b.model, {}, std::chrono::seconds(b.timeout_s)};
      if (!b.api_key_env.empty())
        if (const char* key = std::getenv(b.api_key_env.c_str())) rc.api_key = key;
      backends_.add(b.id, [rc](agents::Role) { return std::make_shared<agents::RemoteBackend>(rc); });
    }
  }

  auto src_path = config_.resolve(config_.sources);
  if (fs::exists(src_path)) {
    jsonl::for_each_record(src_path, [&](const Json& j, std::size_t line_no) {
      try {
        sources_[{j.at("doc_id").get<std::string>(), j.at("seg_id").get<std::int64_t>()}] = j.at("source").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(src_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    });
  }
}

Workspace::~Workspace() {
  std::vector<std::shared_ptr<Job>> all;
  {
    std::lock_guard lock(state_mutex_);
    for (auto& [id, job] : jobs_) all.push_back(job);
  }
  for (auto& job : all)
    if (job->thread.joinable()) job->thread.join();
}

std::string Workspace::fresh_id(const std::string& prefix) {
  auto now = std::chrono::system_clock::now().time_since_epoch().count();
  std::uint64_t n;
  {
    std::lock_guard lock(state_mutex_);
    n = ++id_counter_;
  }
  auto h = text::fnv1a64(std::to_string(now) + "/" + std::to_string(n) + "/" + prefix);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%012llx", static_cast<unsigned long long>(h & 0xffffffffffffULL));
  return prefix + "-" + buf;
}

std::unique_lock<std::mutex> Workspace::lock_document(const std::string& doc_id) {
  std::mutex* m;
  {
    std::lock_guard lock(state_mutex_);
    auto& slot = doc_locks_[doc_id];
    if (!slot) slot = std::make_unique<std::mutex>();
    m = slot.get();
  }
  return std::unique_lock<std::mutex>(*m);
}

// ---------------------------------------------------------------------------
// Ingest

IngestReport Workspace::ingest_corpus(const std::filesystem::path& corpus_file) {
  auto incoming = corpus::load_corpus(corpus_file);
  auto path = config_.resolve(config_.corpus);
  std::map<SegmentKey, corpus::ParallelSegment> merged;
  if (std::filesystem::exists(path))
    for (auto& s : corpus::load_corpus(path)) merged[{s.doc_id, s.seg_id}] = std::move(s);

  IngestReport rep;
  for (const auto& s : incoming) {
    auto [it, inserted] = merged.try_emplace({s.doc_id, s.seg_id}, s);
    if (inserted) {
      ++rep.added;
    } else if (it->second == s) {
      ++rep.unchanged;
    } else {
      it->second = s;
      ++rep.updated;
    }
  }
  std::vector<corpus::ParallelSegment> all;
  for (auto& [k, s] : merged) all.push_back(s);
  corpus::validate_corpus(all);
  if (rep.added || rep.updated) corpus::save_corpus(path, all);

  for (const auto& s : incoming) {
    SegmentKey key{s.doc_id, s.seg_id};
    auto lock = lock_document(s.doc_id);
    auto prior = tm_.get(key);
    // post-edits and pipeline output are newer knowledge than a re-imported corpus
    if (prior && prior->origin != Origin::Corpus) continue;
    memory::TranslationEntry e{key, s.source_text, s.target_text, Origin::Corpus};
    if (!prior || !(*prior == e)) tm_.upsert(e);
  }
  return rep;
}

void Workspace::save_sources_locked() const {
  std::string out;
  for (const auto& [k, src] : sources_)
    out += jsonl::dump_line(Json{{"doc_id", k.doc_id}, {"seg_id", k.seg_id}, {"source", src}}) + "\n";
  jsonl::write_file_atomic(config_.resolve(config_.sources), out);
}

namespace {

IngestReport merge_sources(std::map<SegmentKey, std::string>& sources, const std::map<SegmentKey, std::string>& incoming) {
  IngestReport rep;
  for (const auto& [k, text] : incoming) {
    auto [it, inserted] = sources.try_emplace(k, text);
    if (inserted) {
      ++rep.added;
    } else if (it->second == text) {
      ++rep.unchanged;
    } else {
      it->second = text;
      ++rep.updated;
    }
  }
  return rep;
}

void check_contiguous(const std::map<SegmentKey, std::string>& sources) {
  std::string doc;
  std::int64_t expect = 1;
  for (const auto& [k, text] : sources) {
    if (k.doc_id != doc) {
      doc = k.doc_id;
      expect = 1;
    }
    if (k.seg_id != expect)
      throw ValidationError("document " + doc + ": paragraph " + std::to_string(expect) + " missing (found " +
                            std::to_string(k.seg_id) + ")");
    if (text.empty()) throw ValidationError("empty source paragraph " + memory::to_string(k));
    ++expect;
  }
}

}  // namespace

IngestReport Workspace::ingest_sources(const std::filesystem::path& sources_file) {
  std::map<SegmentKey, std::string> incoming;
  jsonl::for_each_record(sources_file, [&](const Json& j, std::size_t line_no) {
    try {
      SegmentKey k{j.at("doc_id").get<std::string>(), j.at("seg_id").get<std::int64_t>()};
      if (!incoming.emplace(k, corpus::clean_text(j.at("source").get<std::string>())).second)
        throw ValidationError(sources_file.string() + ":" + std::to_string(line_no) + ": duplicate key " +
                              memory::to_string(k));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(sources_file.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  });
  std::lock_guard lock(state_mutex_);
  auto copy = sources_;
  auto rep = merge_sources(copy, incoming);
  check_contiguous(copy);
  if (rep.added || rep.updated) {
    sources_ = std::move(copy);
    save_sources_locked();
  }
  return rep;
}

IngestReport Workspace::ingest_source_text(const std::string& doc_id, std::string_view raw,
                                           const corpus::SegmentationRules& rules) {
  if (doc_id.empty()) throw ValidationError("document id is empty");
  auto paras = corpus::segment_text(raw, rules);
  if (paras.empty()) throw ValidationError("document " + doc_id + " has no paragraphs");
  std::map<SegmentKey, std::string> incoming;
  for (std::size_t i = 0; i < paras.size(); ++i) incoming[{doc_id, static_cast<std::int64_t>(i + 1)}] = paras[i];
  std::lock_guard lock(state_mutex_);
  auto copy = sources_;
  // a re-segmented document replaces its old paragraph list
  for (auto it = copy.lower_bound({doc_id, 0}); it != copy.end() && it->first.doc_id == doc_id;) {
    if (!incoming.count(it->first)) {
      it = copy.erase(it);
    } else {
      ++it;
    }
  }
  auto rep = merge_sources(copy, incoming);
  check_contiguous(copy);
  if (rep.added || rep.updated || copy.size() != sources_.size()) {
    sources_ = std::move(copy);
    save_sources_locked();
  }
  return rep;
}

std::size_t Workspace::ingest_glossary(const std::filesystem::path& glossary_file) {
  auto g = glossary::Glossary::from_file(glossary_file, "doj-combined");
  auto dest = config_.resolve(config_.glossary);
  std::string out;
  for (const auto& e : g.entries()) out += e.term + "\t" + e.preferred_translation + "\n";
  if (!std::filesystem::exists(dest) || jsonl::read_file(dest) != out) jsonl::write_file_atomic(dest, out);
  std::lock_guard lock(state_mutex_);
  glossary_.reset();
  return g.entries().size();
}

const glossary::Glossary* Workspace::glossary() {
  std::lock_guard lock(state_mutex_);
  if (!glossary_) {
    auto path = config_.resolve(config_.glossary);
    if (!std::filesystem::exists(path)) return nullptr;
    glossary_ = glossary::Glossary::from_file(path, "doj-combined");
  }
  return &*glossary_;
}

// ---------------------------------------------------------------------------
// Queries

std::vector<std::string> Workspace::documents() const {
  std::lock_guard lock(state_mutex_);
  std::vector<std::string> out;
  for (const auto& [k, s] : sources_)
    if (out.empty() || out.back() != k.doc_id) out.push_back(k.doc_id);
  return out;
}

std::vector<agents::SourceSegment> Workspace::sources_of(const std::string& doc_id) const {
  std::lock_guard lock(state_mutex_);
  std::vector<agents::SourceSegment> out;
  for (auto it = sources_.lower_bound({doc_id, std::numeric_limits<std::int64_t>::min()});
       it != sources_.end() && it->first.doc_id == doc_id; ++it)
    out.push_back({it->first, it->second});
  if (out.empty()) throw NotFoundError("unknown document \"" + doc_id + "\"");
  return out;
}

std::vector<SegmentView> Workspace::segments(const std::string& doc_id) const {
  std::vector<SegmentView> out;
  for (auto& s : sources_of(doc_id)) out.push_back({s.key, s.text, pm_.get(s.key)});
  return out;
}

SegmentView Workspace::segment(const SegmentKey& key) const {
  std::string src;
  {
    std::lock_guard lock(state_mutex_);
    auto it = sources_.find(key);
    if (it == sources_.end()) {
      bool doc_known = false;
      for (const auto& [k, s] : sources_) doc_known = doc_known || k.doc_id == key.doc_id;
      throw NotFoundError(doc_known ? "unknown segment " + memory::to_string(key)
                                    : "unknown document \"" + key.doc_id + "\"");
    }
    src = it->second;
  }
  return {key, src, pm_.get(key)};
}

std::vector<corpus::ParallelSegment> Workspace::reference_corpus() const {
  auto path = config_.resolve(config_.corpus);
  if (!std::filesystem::exists(path)) return {};
  return corpus::load_corpus(path);
}

// ---------------------------------------------------------------------------
// Runs

std::filesystem::path Workspace::run_log_path(const std::string& run_id) const {
  return config_.resolve(config_.runs_dir) / (run_id + ".log.jsonl");
}

std::filesystem::path Workspace::usage_path(const std::string& run_id) const {
  return config_.resolve(config_.runs_dir) / (run_id + ".usage.jsonl");
}

agents::RunResult Workspace::run(const std::string& doc_id, const agents::PipelineConfig& config,
                                 const std::vector<std::int64_t>& seg_ids, const std::string& run_id,
                                 std::function<void(std::size_t, std::size_t)> on_progress) {
  return run_impl(doc_id, config, seg_ids, run_id, std::move(on_progress), {});
}

agents::RunResult Workspace::run_impl(const std::string& doc_id, const agents::PipelineConfig& config,
                                      const std::vector<std::int64_t>& seg_ids, const std::string& run_id,
                                      std::function<void(std::size_t, std::size_t)> on_progress,
                                      std::function<void(const SegmentKey&)> before_segment) {
  config.validate();
  auto doc = sources_of(doc_id);
  if (!seg_ids.empty()) {
    std::set<std::int64_t> wanted(seg_ids.begin(), seg_ids.end());
    std::vector<agents::SourceSegment> subset;
    for (auto& s : doc)
      if (wanted.erase(s.key.seg_id)) subset.push_back(std::move(s));
    if (!wanted.empty())
      throw NotFoundError("unknown segment " + memory::to_string({doc_id, *wanted.begin()}));
    doc = std::move(subset);
  }
  agents::RunContext ctx{tm_, pm_, backends_, roles_, nullptr, config_.retry};
  ctx.glossary = config.use_glossary ? glossary() : nullptr;
  ctx.retry = config_.retry;
  ctx.run_id = run_id.empty() ? fresh_id("run") : run_id;
  ctx.on_progress = std::move(on_progress);
  ctx.before_segment = std::move(before_segment);
  ctx.lock_document = [this](const std::string& d) { return lock_document(d); };
  auto result = agents::run_tap(doc, config, ctx);
  jsonl::write_file_atomic(run_log_path(ctx.run_id), result.log_records());
  result.usage.save(usage_path(ctx.run_id));
  jsonl::write_file_atomic(config_.resolve(config_.runs_dir) / (ctx.run_id + ".config.json"), config.to_json().dump(2) + "\n");
  return result;
}

std::string Workspace::start_job(const std::string& doc_id, const agents::PipelineConfig& config,
                                 const std::vector<std::int64_t>& seg_ids) {
  config.validate();
  auto doc = sources_of(doc_id);
  auto job = std::make_shared<Job>();
  job->status.job_id = fresh_id("job");
  job->status.doc_id = doc_id;
  job->status.config_name = config.name;
  std::set<std::int64_t> wanted(seg_ids.begin(), seg_ids.end());
  for (const auto& s : doc)
    if (wanted.empty() || wanted.count(s.key.seg_id)) job->pending.insert(s.key);
  job->status.total = job->pending.size();
  {
    std::lock_guard lock(state_mutex_);
    jobs_[job->status.job_id] = job;
  }

  auto finish = [this, job](JobState state, std::vector<SegmentKey> failed, std::string error) {
    std::lock_guard lock(state_mutex_);
    job->status.state = state;
    job->status.failed = std::move(failed);
    job->status.error = std::move(error);
    job->pending.clear();
    jobs_cv_.notify_all();
  };
  job->thread = std::thread([this, job, doc_id, config, seg_ids, finish] {
    {
      std::lock_guard lock(state_mutex_);
      job->status.state = JobState::Running;
    }
    try {
      auto result = run_impl(
          doc_id, config, seg_ids, job->status.job_id,
          [this, job](std::size_t done, std::size_t) {
            std::lock_guard lock(state_mutex_);
            job->status.done = done;
            jobs_cv_.notify_all();
          },
          [this, job](const SegmentKey& key) {
            // everything before `key` has been persisted or has failed
            std::lock_guard lock(state_mutex_);
            job->pending.erase(job->pending.begin(), job->pending.lower_bound(key));
          });
      finish(JobState::Done, result.failed, {});
    } catch (const std::exception& e) {
      finish(JobState::Failed, {}, e.what());
    }
  });
  return job->status.job_id;
}

std::optional<JobStatus> Workspace::job(const std::string& job_id) const {
  std::lock_guard lock(state_mutex_);
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second->status;
}

std::vector<JobStatus> Workspace::jobs() const {
  std::lock_guard lock(state_mutex_);
  std::vector<JobStatus> out;
  for (const auto& [id, j] : jobs_) out.push_back(j->status);
  return out;
}

JobStatus Workspace::wait(const std::string& job_id) const {
  std::unique_lock lock(state_mutex_);
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw NotFoundError("unknown job \"" + job_id + "\"");
  auto job = it->second;
  jobs_cv_.wait(lock, [&] { return job->status.state == JobState::Done || job->status.state == JobState::Failed; });
  return job->status;
}

bool Workspace::pending_in_job(const SegmentKey& key) const {
  std::lock_guard lock(state_mutex_);
  for (const auto& [id, j] : jobs_)
    if (j->pending.count(key)) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Post-editing

EditResult Workspace::submit(const PostEditSubmission& sub) {
  EditResult out;
  if (sub.scope == EditScope::Segment) {
    if (text::trim(sub.edited_translation).empty()) throw ValidationError("edited translation is empty");
    auto view = segment(sub.key);
    auto lock = lock_document(sub.key.doc_id);
    if (pending_in_job(sub.key)) throw ConflictError("segment " + memory::to_string(sub.key) + " is being re-run");
    auto prior = pm_.get(sub.key);
    if (!prior) throw ValidationError("segment " + memory::to_string(sub.key) + " has not been translated yet");
    if (sub.expected_version && *sub.expected_version != prior->version)
      throw ConflictError("segment " + memory::to_string(sub.key) + " is at version " + std::to_string(prior->version) +
                          ", edit was made against version " + std::to_string(*sub.expected_version));
    auto e = *prior;
    e.final_translation = std::string(text::trim(sub.edited_translation));
    if (sub.editor_annotations) e.annotated_errors = *sub.editor_annotations;
    e.origin = Origin::PostEdit;
    e.version = prior->version + 1;
    memory::validate(e);
    pm_.upsert(e);
    tm_.upsert({e.key, e.source_text, e.final_translation, Origin::PostEdit});
    out.changes = 1;
    out.updated.push_back(std::move(e));
    return out;
  }

  if (sub.find.empty()) throw ValidationError("replace-all needs a non-empty find string");
  auto views = segments(sub.key.doc_id);
  auto lock = lock_document(sub.key.doc_id);
  std::vector<memory::ProofreadingEntry> changed;
  for (const auto& v : views) {
    auto prior = pm_.get(v.key);  // re-read under the document lock
    if (!prior) continue;
    auto e = *prior;
    auto n = text::replace_all(e.final_translation, sub.find, sub.replace);
    if (n == 0) continue;
    if (pending_in_job(v.key)) throw ConflictError("segment " + memory::to_string(v.key) + " is being re-run");
    e.origin = Origin::PostEdit;
    e.version = prior->version + 1;
    memory::validate(e);
    out.changes += n;
    changed.push_back(std::move(e));
  }
  for (const auto& e : changed) {
    pm_.upsert(e);
    tm_.upsert({e.key, e.source_text, e.final_translation, Origin::PostEdit});
  }
  out.updated = std::move(changed);
  return out;
}

// ---------------------------------------------------------------------------
// Exports

std::map<SegmentKey, std::string> Workspace::run_outputs(const std::string& run_id) const {
  auto path = run_log_path(run_id);
  if (!std::filesystem::exists(path)) throw NotFoundError("unknown run \"" + run_id + "\"");
  std::map<SegmentKey, std::string> out;
  auto content = jsonl::read_file(path);
  for (auto line : text::split_lines(content)) {
    if (text::trim(line).empty()) continue;
    auto r = agents::RunLogRecord::from_record(line);
    if (r.phase == "persist") out[r.key] = r.response;
  }
  return out;
}

costing::PricingTable Workspace::pricing() const {
  auto path = config_.resolve(config_.pricing);
  if (!std::filesystem::exists(path)) throw NotFoundError("no pricing file at " + path.string());
  return costing::PricingTable::from_file(path);
}

std::string Workspace::cost_report(const std::vector<std::string>& run_ids) const {
  if (run_ids.empty()) throw ValidationError("no runs given");
  auto prices = pricing();
  std::vector<std::pair<std::string, costing::Money>> totals;
  std::map<std::string, std::int64_t> words;
  std::optional<costing::ApiCost> single;
  for (const auto& id : run_ids) {
    auto path = usage_path(id);
    if (!std::filesystem::exists(path)) throw NotFoundError("unknown run \"" + id + "\"");
    auto ledger = costing::UsageLedger::load(path);
    for (const auto& [doc, n] : ledger.source_words()) words[doc] = n;
    auto cost = costing::api_cost(ledger, prices);
    totals.emplace_back(id, cost.total);
    if (run_ids.size() == 1) single = cost;
  }
  std::int64_t total_words = 0;
  for (const auto& [doc, n] : words) total_words += n;
  auto human = costing::human_cost(total_words, prices, costing::HumanWork::Translation);
  auto report = costing::cost_report(human, totals);
  return "source words            " + std::to_string(total_words) + "\n" +
         costing::format_cost_report(report, single ? &*single : nullptr);
}

std::filesystem::path Workspace::eval_sheet_path(const std::string& sheet_id) const {
  return config_.resolve(config_.eval_dir) / (sheet_id + ".tsv");
}

std::filesystem::path Workspace::eval_mapping_path(const std::string& sheet_id) const {
  return config_.resolve(config_.eval_dir) / (sheet_id + ".mapping.jsonl");
}

std::string Workspace::export_eval_sheet(const std::vector<std::pair<std::string, std::string>>& systems_to_runs,
                                         std::size_t sample_size, std::uint64_t seed) {
  if (systems_to_runs.empty()) throw ValidationError("eval sheet needs at least one system");
  std::vector<eval::SystemOutput> systems;
  for (const auto& [system, run] : systems_to_runs) systems.push_back({system, run_outputs(run)});
  std::vector<corpus::ParallelSegment> pool;
  for (const auto& [key, text] : systems.front().translations) {
    bool everywhere = true;
    for (const auto& s : systems) everywhere = everywhere && s.translations.count(key);
    if (!everywhere) continue;
    corpus::ParallelSegment p;
    p.doc_id = key.doc_id;
    p.seg_id = key.seg_id;
    p.source_text = segment(key).source_text;
    pool.push_back(std::move(p));
  }
  auto sheet = eval::make_eval_sheet(pool, sample_size, systems, eval::split_sentences, seed);
  auto id = fresh_id("sheet");
  eval::write_mapping(eval_mapping_path(id), sheet.mapping);
  eval::write_sheet(eval_sheet_path(id), sheet.rows);
  return id;
}

std::string Workspace::vetting_bundle(const std::string& doc_id) const {
  std::string out;
  for (const auto& v : segments(doc_id)) {
    Json j{{"doc_id", v.key.doc_id}, {"seg_id", v.key.seg_id}, {"source", v.source_text}};
    if (v.entry) {
      j["machine_translation"] = v.entry->machine_translation;
      j["annotations"] = codes::format_annotations(v.entry->annotated_errors);
      j["final_translation"] = v.entry->final_translation;
      j["origin"] = memory::to_string(v.entry->origin);
      j["version"] = v.entry->version;
    } else {
      j["final_translation"] = nullptr;
    }
    out += jsonl::dump_line(j) + "\n";
  }
  return out;
}

}  // namespace hmit::service
