#include "hmit/pipeline.hpp"

#include <chrono>
#include <ctime>

#include "hmit/error.hpp"
#include "hmit/text.hpp"

namespace hmit::agents {

using jsonl::Json;
using memory::Origin;
using memory::ProofreadingEntry;
using memory::SegmentKey;
using memory::TranslationEntry;

std::string iso_timestamp_now() {
  auto now = std::chrono::system_clock::now();
  auto t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Config

void PipelineConfig::validate() const {
  if (translator.role != Role::Translator) throw ValidationError("translator spec has the wrong role");
  if (translator.backend_id.empty()) throw ValidationError("translator needs a backend");
  if (translator.shots < 0) throw ValidationError("translator shots must be >= 0");
  if (annotator && !proofreader) throw ValidationError("an annotator needs a proofreader to consume its annotations");
  if (annotator) {
    if (const auto* a = std::get_if<AgentSpec>(&*annotator)) {
      if (a->backend_id.empty()) throw ValidationError("annotator needs a backend");
      if (a->shots != 0) throw ValidationError("annotator takes no shots");
    } else if (std::get<ManualAnnotation>(*annotator).annotations_file.empty()) {
      throw ValidationError("manual annotation needs an annotations file");
    }
  }
  if (proofreader) {
    if (proofreader->backend_id.empty()) throw ValidationError("proofreader needs a backend");
    if (proofreader->shots < 0) throw ValidationError("proofreader shots must be >= 0");
  }
  for (const auto* p : {&translator.params, proofreader ? &proofreader->params : nullptr}) {
    if (p && p->max_tokens <= 0) throw ValidationError("max_tokens must be positive");
  }
}

std::string PipelineConfig::shot_summary() const {
  std::string a = "X";
  if (annotator) a = std::holds_alternative<ManualAnnotation>(*annotator) ? "Manual" : "LLM";
  return std::to_string(translator.shots) + " / " + a + " / " + (proofreader ? std::to_string(proofreader->shots) : "X");
}

namespace {

GenerationParams params_from_json(const Json& j) {
  GenerationParams p;
  if (!j.is_object()) return p;
  p.temperature = j.value("temperature", p.temperature);
  p.max_tokens = j.value("max_tokens", p.max_tokens);
  p.frequency_penalty = j.value("frequency_penalty", p.frequency_penalty);
  p.presence_penalty = j.value("presence_penalty", p.presence_penalty);
  return p;
}

Json params_to_json(const GenerationParams& p) {
  return Json{{"temperature", p.temperature},
              {"max_tokens", p.max_tokens},
              {"frequency_penalty", p.frequency_penalty},
              {"presence_penalty", p.presence_penalty}};
}

AgentSpec agent_from_json(const Json& j, Role role) {
  AgentSpec a;
  a.role = role;
  a.backend_id = j.value("backend", std::string("mock"));
  a.shots = role == Role::Annotator ? 0 : j.value("shots", 0);
  if (j.contains("params")) a.params = params_from_json(j["params"]);
  return a;
}

Json agent_to_json(const AgentSpec& a) {
  Json j{{"backend", a.backend_id}};
  if (a.role != Role::Annotator) j["shots"] = a.shots;
  j["params"] = params_to_json(a.params);
  return j;
}

std::set<Origin> origins_from_json(const Json& j, const char* key) {
  std::set<Origin> out;
  if (!j.contains(key)) return out;
  for (const auto& o : j.at(key)) out.insert(memory::origin_from_string(o.get<std::string>()));
  return out;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const Json& j, const std::filesystem::path& base_dir) {
  try {
    PipelineConfig c;
    c.name = j.value("name", std::string());
    c.translator = agent_from_json(j.at("translator"), Role::Translator);
    if (j.contains("annotator") && !j["annotator"].is_null()) {
      const auto& a = j["annotator"];
      if (a.contains("manual")) {
        std::filesystem::path p = a["manual"].get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        c.annotator = ManualAnnotation{p};
      } else {
        c.annotator = agent_from_json(a, Role::Annotator);
      }
    }
    if (j.contains("proofreader") && !j["proofreader"].is_null())
      c.proofreader = agent_from_json(j["proofreader"], Role::Proofreader);
    c.source_lang = j.value("source_lang", c.source_lang);
    c.target_lang = j.value("target_lang", c.target_lang);
    c.glossary_id = j.value("glossary", c.glossary_id);
    c.use_glossary = j.value("use_glossary", false);
    if (j.contains("memory")) {
      c.translation_memory_id = j["memory"].value("translation", c.translation_memory_id);
      c.proofreading_memory_id = j["memory"].value("proofreading", c.proofreading_memory_id);
    }
    c.translator_example_origins = origins_from_json(j, "translator_example_origins");
    c.proofreader_example_origins = origins_from_json(j, "proofreader_example_origins");
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid pipeline config: ") + e.what());
  }
}

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(jsonl::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  auto c = from_json(j, path.parent_path());
  if (c.name.empty()) c.name = path.stem().string();
  return c;
}

Json PipelineConfig::to_json() const {
  Json j;
  j["name"] = name;
  j["translator"] = agent_to_json(translator);
  if (!annotator) {
    j["annotator"] = nullptr;
  } else if (const auto* a = std::get_if<AgentSpec>(&*annotator)) {
    j["annotator"] = agent_to_json(*a);
  } else {
    j["annotator"] = Json{{"manual", std::get<ManualAnnotation>(*annotator).annotations_file.string()}};
  }
  j["proofreader"] = proofreader ? agent_to_json(*proofreader) : Json(nullptr);
  j["source_lang"] = source_lang;
  j["target_lang"] = target_lang;
  j["glossary"] = glossary_id;
  j["use_glossary"] = use_glossary;
  j["memory"] = Json{{"translation", translation_memory_id}, {"proofreading", proofreading_memory_id}};
  auto origins = [](const std::set<Origin>& s) {
    Json a = Json::array();
    for (auto o : s) a.push_back(memory::to_string(o));
    return a;
  };
  if (!translator_example_origins.empty()) j["translator_example_origins"] = origins(translator_example_origins);
  if (!proofreader_example_origins.empty()) j["proofreader_example_origins"] = origins(proofreader_example_origins);
  return j;
}

// ---------------------------------------------------------------------------
// Run log

namespace {

Json keys_to_json(const std::vector<SegmentKey>& keys) {
  Json a = Json::array();
  for (const auto& k : keys) a.push_back(Json::array({k.doc_id, k.seg_id}));
  return a;
}

}  // namespace

std::string RunLogRecord::to_record(bool with_timestamp) const {
  Json j;
  j["run_id"] = run_id;
  j["doc_id"] = key.doc_id;
  j["seg_id"] = key.seg_id;
  j["phase"] = phase;
  j["backend_id"] = backend_id;
  j["prompt"] = prompt;
  j["response"] = response;
  j["warnings"] = warnings;
  j["input_tokens"] = input_tokens;
  j["output_tokens"] = output_tokens;
  j["estimated_tokens"] = estimated_tokens;
  j["attempts"] = attempts;
  j["examples"] = keys_to_json(examples);
  j["pool_same_doc"] = pool_same_doc;
  if (with_timestamp) j["timestamp"] = timestamp;
  return jsonl::dump_line(j);
}

RunLogRecord RunLogRecord::from_record(std::string_view line) {
  auto j = Json::parse(line);
  RunLogRecord r;
  r.run_id = j.value("run_id", std::string());
  r.key = {j.at("doc_id").get<std::string>(), j.at("seg_id").get<std::int64_t>()};
  r.phase = j.at("phase").get<std::string>();
  r.backend_id = j.value("backend_id", std::string());
  r.prompt = j.value("prompt", std::string());
  r.response = j.value("response", std::string());
  if (j.contains("warnings")) r.warnings = j["warnings"].get<std::vector<std::string>>();
  r.input_tokens = j.value("input_tokens", std::int64_t{0});
  r.output_tokens = j.value("output_tokens", std::int64_t{0});
  r.estimated_tokens = j.value("estimated_tokens", false);
  r.attempts = j.value("attempts", 0);
  if (j.contains("examples"))
    for (const auto& k : j["examples"]) r.examples.push_back({k.at(0).get<std::string>(), k.at(1).get<std::int64_t>()});
  if (j.contains("pool_same_doc")) r.pool_same_doc = j["pool_same_doc"].get<std::vector<std::int64_t>>();
  r.timestamp = j.value("timestamp", std::string());
  return r;
}

std::string RunResult::log_records(bool with_timestamps) const {
  std::string out;
  for (const auto& r : log) out += r.to_record(with_timestamps) + "\n";
  return out;
}

std::map<SegmentKey, std::string> load_manual_annotations(const std::filesystem::path& path) {
  std::map<SegmentKey, std::string> out;
  jsonl::for_each_record(path, [&](const Json& j, std::size_t line_no) {
    try {
      SegmentKey k{j.at("doc_id").get<std::string>(), j.at("seg_id").get<std::int64_t>()};
      if (!out.emplace(k, j.at("annotations").get<std::string>()).second)
        throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": duplicate key " + memory::to_string(k));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

struct Call {
  Generation generation;
  int attempts = 0;
};

class SegmentFailed : public std::exception {};

template <typename Entry>
std::vector<SegmentKey> keys_of(const std::vector<Entry>& entries) {
  std::vector<SegmentKey> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.key);
  return out;
}

class TapRun {
 public:
  TapRun(const PipelineConfig& config, RunContext& ctx) : config_(config), ctx_(ctx) {
    lang_ = prompts::LanguageNames::for_tags(config.source_lang, config.target_lang);
    if (config.annotator)
      if (const auto* m = std::get_if<ManualAnnotation>(&*config.annotator)) manual_ = load_manual_annotations(m->annotations_file);
  }

  RunResult run(const std::vector<SourceSegment>& doc) {
    result_.run_id = ctx_.run_id;
    std::map<std::string, std::int64_t> words;
    for (const auto& s : doc) words[s.key.doc_id] += static_cast<std::int64_t>(costing::count_words(s.text, config_.source_lang));
    for (const auto& [d, n] : words) result_.usage.set_source_words(d, n);
    std::size_t done = 0;
    for (const auto& seg : doc) {
      if (ctx_.before_segment) ctx_.before_segment(seg.key);
      try {
        process(seg);
        ++done;
        if (ctx_.on_progress) ctx_.on_progress(done, doc.size());
      } catch (const SegmentFailed&) {
        result_.failed.push_back(seg.key);
      }
    }
    return std::move(result_);
  }

 private:
  std::string now() const { return ctx_.clock ? ctx_.clock() : iso_timestamp_now(); }

  RunLogRecord record(const SegmentKey& key, std::string phase) const {
    RunLogRecord r;
    r.run_id = ctx_.run_id;
    r.key = key;
    r.phase = std::move(phase);
    r.timestamp = now();
    return r;
  }

  Call call(const SegmentKey& key, const AgentSpec& spec, const std::string& prompt, RunLogRecord& rec) {
    rec.backend_id = spec.backend_id;
    rec.prompt = prompt;
    try {
      auto backend = ctx_.backends.resolve(spec.backend_id, spec.role);
      auto out = generate_with_retry(*backend, prompt, spec.params, ctx_.retry);
      rec.response = out.generation.text;
      rec.attempts = out.attempts;
      rec.input_tokens = out.generation.input_tokens;
      rec.output_tokens = out.generation.output_tokens;
      rec.estimated_tokens = out.generation.estimated_usage;
      result_.usage.append({ctx_.run_id, key.doc_id, key.seg_id, std::string(to_string(spec.role)), spec.backend_id,
                            out.generation.input_tokens, out.generation.output_tokens, out.generation.estimated_usage});
      result_.log.push_back(rec);
      return {std::move(out.generation), out.attempts};
    } catch (const Error& e) {
      rec.warnings.push_back(e.what());
      result_.log.push_back(rec);
      auto failed = record(key, "failed");
      failed.warnings.push_back(std::string(to_string(spec.role)) + ": " + e.what());
      result_.log.push_back(std::move(failed));
      throw SegmentFailed{};
    }
  }

  void process(const SourceSegment& seg) {
    // 1. translation
    auto trec = record(seg.key, "translate");
    std::vector<TranslationEntry> t_examples;
    if (config_.translator.shots > 0) {
      trec.pool_same_doc = ctx_.translation_memory.seg_ids_in(seg.key.doc_id);
      memory::NeighborQuery q{seg.key, static_cast<std::size_t>(config_.translator.shots), true,
                              config_.translator_example_origins};
      t_examples = ctx_.translation_memory.pns_neighbors(q);
      trec.examples = keys_of(t_examples);
    }
    std::string role = ctx_.roles.translator;
    if (config_.use_glossary && ctx_.glossary) {
      auto block = glossary::constraint_block(glossary::glossary_inject(seg.text, *ctx_.glossary));
      if (!block.empty()) role += "\n" + block;
    }
    auto tprompt = prompts::build_translator_prompt(seg.text, t_examples, role, lang_);
    auto mt = std::string(text::trim(call(seg.key, config_.translator, tprompt, trec).generation.text));
    if (mt.empty()) {
      auto failed = record(seg.key, "failed");
      failed.warnings.push_back("translator returned an empty translation");
      result_.log.push_back(std::move(failed));
      throw SegmentFailed{};
    }

    // 2. annotation
    std::vector<codes::AnnotationRecord> annotations;
    if (config_.annotator) {
      auto arec = record(seg.key, "annotate");
      std::string raw;
      if (const auto* spec = std::get_if<AgentSpec>(&*config_.annotator)) {
        auto aprompt = prompts::build_annotator_prompt(seg.text, mt, ctx_.roles.annotator);
        raw = call(seg.key, *spec, aprompt, arec).generation.text;
        auto parsed = codes::parse_annotations(raw);
        annotations = std::move(parsed.records);
        for (auto& w : parsed.warnings) result_.log.back().warnings.push_back(w.message + ": " + w.fragment);
      } else {
        arec.backend_id = "manual";
        auto it = manual_.find(seg.key);
        if (it == manual_.end()) {
          arec.warnings.push_back("no manual annotation for segment; treated as NONE");
          raw = "NONE";
        } else {
          raw = it->second;
        }
        arec.response = raw;
        auto parsed = codes::parse_annotations(raw);
        annotations = std::move(parsed.records);
        for (auto& w : parsed.warnings) arec.warnings.push_back(w.message + ": " + w.fragment);
        result_.log.push_back(std::move(arec));
      }
    }
    auto errors_line = codes::format_annotations(annotations);

    // 3. proofreading
    std::string final_translation = mt;
    if (config_.proofreader) {
      auto prec = record(seg.key, "proofread");
      std::vector<ProofreadingEntry> p_examples;
      if (config_.proofreader->shots > 0) {
        prec.pool_same_doc = ctx_.proofreading_memory.seg_ids_in(seg.key.doc_id);
        memory::NeighborQuery q{seg.key, static_cast<std::size_t>(config_.proofreader->shots), true,
                                config_.proofreader_example_origins};
        p_examples = ctx_.proofreading_memory.pns_neighbors(q);
        prec.examples = keys_of(p_examples);
      }
      auto pprompt = prompts::build_proofreader_prompt(seg.text, mt, errors_line, p_examples, ctx_.roles.proofreader);
      auto out = std::string(text::trim(call(seg.key, *config_.proofreader, pprompt, prec).generation.text));
      if (out.empty()) {
        result_.log.back().warnings.push_back("proofreader returned nothing; keeping the machine translation");
      } else {
        final_translation = std::move(out);
      }
    }

    // 4. persist before the next paragraph
    ProofreadingEntry entry;
    entry.key = seg.key;
    entry.source_text = seg.text;
    entry.machine_translation = mt;
    entry.annotated_errors = std::move(annotations);
    entry.final_translation = final_translation;
    entry.origin = Origin::Pipeline;
    {
      std::unique_lock<std::mutex> lock;
      if (ctx_.lock_document) lock = ctx_.lock_document(seg.key.doc_id);
      if (auto prior = ctx_.proofreading_memory.get(seg.key)) entry.version = prior->version + 1;
      try {
        ctx_.proofreading_memory.upsert(entry);
        ctx_.translation_memory.upsert({seg.key, seg.text, final_translation, Origin::Pipeline});
      } catch (const Error& e) {
        auto failed = record(seg.key, "failed");
        failed.warnings.push_back(std::string("persist: ") + e.what());
        result_.log.push_back(std::move(failed));
        throw SegmentFailed{};
      }
    }
    auto prec = record(seg.key, "persist");
    prec.response = final_translation;
    result_.log.push_back(std::move(prec));
    result_.entries.push_back(std::move(entry));
  }

  const PipelineConfig& config_;
  RunContext& ctx_;
  prompts::LanguageNames lang_;
  std::map<SegmentKey, std::string> manual_;
  RunResult result_;
};

}  // namespace

RunResult run_tap(const std::vector<SourceSegment>& doc, const PipelineConfig& config, RunContext& ctx) {
  config.validate();
  return TapRun(config, ctx).run(doc);
}

}  // namespace hmit::agents
