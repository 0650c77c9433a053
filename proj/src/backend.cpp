#include "hmit/backend.hpp"

#include <httplib.h>

#include <thread>

#include "hmit/costing.hpp"
#include "hmit/error.hpp"
#include "hmit/jsonl.hpp"
#include "hmit/proofread_codes.hpp"
#include "hmit/text.hpp"

namespace hmit::agents {

using jsonl::Json;

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Translator:
      return "translator";
    case Role::Annotator:
      return "annotator";
    case Role::Proofreader:
      return "proofreader";
  }
  return "";
}

Role role_from_string(std::string_view s) {
  auto lower = text::to_lower_ascii(s);
  if (lower == "translator") return Role::Translator;
  if (lower == "annotator") return Role::Annotator;
  if (lower == "proofreader") return Role::Proofreader;
  throw ParseError("unknown role \"" + std::string(s) + "\"");
}

// ---------------------------------------------------------------------------
// Mock backend

namespace {

std::string_view strip_newlines(std::string_view s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Text between the last `open` and the next `close` after it.
std::string_view field_between(std::string_view prompt, std::size_t from, std::string_view open, std::string_view close,
                               std::size_t* end = nullptr) {
  auto a = prompt.find(open, from);
  if (a == std::string_view::npos) throw BackendError("mock: prompt lacks \"" + std::string(open) + "\"", false);
  a += open.size();
  auto b = close.empty() ? prompt.size() : prompt.find(close, a);
  if (b == std::string_view::npos) throw BackendError("mock: prompt lacks \"" + std::string(close) + "\"", false);
  if (end) *end = b;
  return strip_newlines(prompt.substr(a, b - a));
}

// FNV-1a leaves the low bits poorly mixed; spread them before taking remainders.
std::uint64_t mix(std::uint64_t h) {
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

std::string utf8_prefix(std::string_view s, std::size_t scalars) {
  auto u = text::decode_utf8(s);
  if (u.size() > scalars) u.resize(scalars);
  return text::encode_utf8(u);
}

}  // namespace

MockBackend::MockBackend(Role role, std::string id, std::uint64_t seed) : role_(role), id_(std::move(id)), seed_(seed) {}

void MockBackend::fail_next(int n, bool transient) {
  std::lock_guard lock(mutex_);
  fail_remaining_ = n;
  fail_transient_ = transient;
}

int MockBackend::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

Generation MockBackend::generate(const std::string& prompt, const GenerationParams&) {
  {
    std::lock_guard lock(mutex_);
    ++calls_;
    if (fail_remaining_ > 0) {
      --fail_remaining_;
      throw BackendError("mock: injected failure", fail_transient_);
    }
  }
  Generation g;
  switch (role_) {
    case Role::Translator:
      g.text = translate(prompt);
      break;
    case Role::Annotator:
      g.text = annotate(prompt);
      break;
    case Role::Proofreader:
      g.text = proofread(prompt);
      break;
  }
  g.input_tokens = costing::estimate_tokens(prompt).tokens;
  g.output_tokens = costing::estimate_tokens(g.text).tokens;
  g.estimated_usage = true;
  return g;
}

std::string MockBackend::translate(const std::string& prompt) const {
  std::string_view p(prompt);
  auto cue = p.rfind("\nTranslate to ");
  if (cue == std::string_view::npos) throw BackendError("mock: not a translator prompt", false);
  auto label = p.rfind("English text: ", cue);
  std::size_t start;
  if (label != std::string_view::npos) {
    start = label + std::string_view("English text: ").size();
  } else {
    label = p.rfind(" text: ", cue);
    if (label == std::string_view::npos) throw BackendError("mock: not a translator prompt", false);
    start = label + std::string_view(" text: ").size();
  }
  return std::string(kTranslationMarker) + std::string(strip_newlines(p.substr(start, cue - start)));
}

std::string MockBackend::annotate(const std::string& prompt) const {
  std::string_view p(prompt);
  auto task = p.rfind("Source text: ");
  if (task == std::string_view::npos) throw BackendError("mock: not an annotator prompt", false);
  std::size_t end = 0;
  auto src = field_between(p, task, "Source text: ", "machine translation: ", &end);
  auto mt = field_between(p, end, "machine translation: ", "\nAnnotated errors: ");

  auto h = mix(text::fnv1a64(std::string(src) + '\x1f' + std::string(mt), seed_));
  if (h % 4 == 0) return "NONE";
  auto tokens = text::split_whitespace(mt);
  if (tokens.empty()) return "NONE";
  auto reg = codes::registry();
  std::vector<codes::AnnotationRecord> records;
  std::size_t wanted = 1 + (h >> 8) % 2;
  for (std::size_t i = 0; i < wanted; ++i) {
    auto hi = mix(text::fnv1a64(std::to_string(i), h));
    auto excerpt = utf8_prefix(tokens[hi % tokens.size()], 6);
    bool dup = false;
    for (const auto& r : records) dup = dup || r.excerpt == excerpt;
    if (dup || excerpt.empty()) continue;
    codes::AnnotationRecord r;
    r.code = std::string(reg[(hi >> 16) % reg.size()].code);
    r.excerpt = excerpt;
    r.suggestion = "\xE3\x80\x88" + excerpt + "\xE3\x80\x89";  // 〈excerpt〉
    records.push_back(std::move(r));
  }
  return codes::format_annotations(records);
}

std::string MockBackend::proofread(const std::string& prompt) const {
  std::string_view p(prompt);
  auto task = p.rfind("Source text: ");
  if (task == std::string_view::npos) throw BackendError("mock: not a proofreader prompt", false);
  std::size_t end = 0;
  field_between(p, task, "Source text: ", "machine translation: ", &end);
  std::size_t end2 = 0;
  auto mt = field_between(p, end, "machine translation: ", "\nAnnotated errors: ", &end2);
  auto errors = field_between(p, end2, "Annotated errors: ", "\nFinal translation:");
  std::string out(mt);
  for (const auto& r : codes::parse_annotations(errors).records)
    if (r.suggestion) text::replace_all(out, r.excerpt, *r.suggestion);
  return out;
}

// ---------------------------------------------------------------------------
// Remote backend

RemoteBackend::RemoteBackend(RemoteBackendConfig config) : config_(std::move(config)) {
  auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("backend endpoint needs a scheme: " + config_.endpoint);
  auto path_start = config_.endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = config_.endpoint;
    path_ = "/";
  } else {
    scheme_host_port_ = config_.endpoint.substr(0, path_start);
    path_ = config_.endpoint.substr(path_start);
  }
}

std::string RemoteBackend::request_body(const std::string& prompt, const GenerationParams& params) const {
  Json body;
  body["model"] = config_.model;
  body["messages"] = Json::array({Json{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = params.temperature;
  body["max_tokens"] = params.max_tokens;
  body["frequency_penalty"] = params.frequency_penalty;
  body["presence_penalty"] = params.presence_penalty;
  return body.dump();
}

Generation RemoteBackend::parse_response(const std::string& prompt, const std::string& body) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("malformed backend response: ") + e.what(), false);
  }
  Generation g;
  try {
    g.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw BackendError("backend response has no choices[0].message.content", false);
  }
  if (j.contains("usage") && j["usage"].is_object() && j["usage"].contains("prompt_tokens")) {
    g.input_tokens = j["usage"]["prompt_tokens"].get<std::int64_t>();
    g.output_tokens = j["usage"].value("completion_tokens", std::int64_t{0});
    g.estimated_usage = false;
  } else {
    g.input_tokens = costing::estimate_tokens(prompt).tokens;
    g.output_tokens = costing::estimate_tokens(g.text).tokens;
    g.estimated_usage = true;
  }
  return g;
}

Generation RemoteBackend::generate(const std::string& prompt, const GenerationParams& params) {
  httplib::Client cli(scheme_host_port_);
  if (!cli.is_valid()) throw BackendError("cannot create client for " + scheme_host_port_, false);
  cli.set_connection_timeout(std::chrono::seconds(10));
  cli.set_read_timeout(config_.timeout);
  cli.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  auto res = cli.Post(path_, headers, request_body(prompt, params), "application/json");
  if (!res) throw BackendError("backend " + config_.id + ": " + httplib::to_string(res.error()), true);
  if (res->status == 429 || res->status >= 500)
    throw BackendError("backend " + config_.id + ": HTTP " + std::to_string(res->status), true);
  if (res->status != 200)
    throw BackendError("backend " + config_.id + ": HTTP " + std::to_string(res->status) + ": " + res->body, false);
  return parse_response(prompt, res->body);
}

RetryOutcome generate_with_retry(AgentBackend& backend, const std::string& prompt, const GenerationParams& params,
                                 const RetryPolicy& policy) {
  auto backoff = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return {backend.generate(prompt, params), attempt};
    } catch (const BackendError& e) {
      if (!e.transient() || attempt >= policy.attempts) throw;
    }
    if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
    backoff = std::chrono::milliseconds(static_cast<std::int64_t>(static_cast<double>(backoff.count()) * policy.multiplier));
  }
}

// ---------------------------------------------------------------------------

BackendRegistry::BackendRegistry() {
  add("mock", [](Role r) { return std::make_shared<MockBackend>(r); });
}

void BackendRegistry::add(const std::string& id, Factory factory) {
  std::lock_guard lock(mutex_);
  factories_[id] = std::move(factory);
  for (auto it = cache_.begin(); it != cache_.end();) {
    if (it->first.first == id) {
      it = cache_.erase(it);
    } else {
      ++it;
    }
  }
}

void BackendRegistry::add_shared(std::shared_ptr<AgentBackend> backend) {
  auto id = backend->id();
  add(id, [backend](Role) { return backend; });
}

bool BackendRegistry::has(std::string_view id) const {
  std::lock_guard lock(mutex_);
  return factories_.find(id) != factories_.end();
}

std::shared_ptr<AgentBackend> BackendRegistry::resolve(std::string_view id, Role role) {
  std::lock_guard lock(mutex_);
  auto key = std::make_pair(std::string(id), role);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  auto f = factories_.find(id);
  if (f == factories_.end()) throw NotFoundError("unknown backend \"" + std::string(id) + "\"");
  auto backend = f->second(role);
  cache_[key] = backend;
  return backend;
}

}  // namespace hmit::agents
