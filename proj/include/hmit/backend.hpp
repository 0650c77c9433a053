#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

namespace hmit::agents {

enum class Role { Translator, Annotator, Proofreader };

std::string_view to_string(Role r);
Role role_from_string(std::string_view s);

struct GenerationParams {
  double temperature = 0.0;
  int max_tokens = 4096;
  double frequency_penalty = 0.0;
  double presence_penalty = 0.0;

  friend bool operator==(const GenerationParams&, const GenerationParams&) = default;
};

struct Generation {
  std::string text;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  bool estimated_usage = false;
};

/// Text-in/text-out generation call.
class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  virtual const std::string& id() const = 0;
  /// Throws BackendError; transient errors are eligible for retry.
  virtual Generation generate(const std::string& prompt, const GenerationParams& params) = 0;
};

/// Deterministic stand-in for an LLM, one instance per role.
///
/// Translator: prefixes the task source with kTranslationMarker.
/// Annotator: a canonical annotation line chosen by a seeded hash of (source,
///   machine translation); about one call in four yields NONE.
/// Proofreader: the machine translation with every annotated excerpt replaced
///   by its suggestion.
class MockBackend final : public AgentBackend {
 public:
  static constexpr std::string_view kTranslationMarker = "\xE3\x80\x90\xE8\xAD\xAF\xE3\x80\x91";  // 【譯】

  explicit MockBackend(Role role, std::string id = "mock", std::uint64_t seed = 0x5eed);

  const std::string& id() const override { return id_; }
  Generation generate(const std::string& prompt, const GenerationParams& params) override;

  /// The next `n` calls fail with a BackendError of the given kind.
  void fail_next(int n, bool transient = true);
  int calls() const;

 private:
  std::string translate(const std::string& prompt) const;
  std::string annotate(const std::string& prompt) const;
  std::string proofread(const std::string& prompt) const;

  Role role_;
  std::string id_;
  std::uint64_t seed_;
  mutable std::mutex mutex_;
  int fail_remaining_ = 0;
  bool fail_transient_ = true;
  int calls_ = 0;
};

/// OpenAI-style chat-completions endpoint.
struct RemoteBackendConfig {
  std::string id;
  std::string endpoint;  // e.g. https://api.openai.com/v1/chat/completions
  std::string model;
  std::string api_key;   // resolved from the environment by the caller
  std::chrono::seconds timeout{120};
};

class RemoteBackend final : public AgentBackend {
 public:
  explicit RemoteBackend(RemoteBackendConfig config);

  const std::string& id() const override { return config_.id; }
  Generation generate(const std::string& prompt, const GenerationParams& params) override;

  /// Request body sent for `prompt`; exposed for wire-format tests.
  std::string request_body(const std::string& prompt, const GenerationParams& params) const;
  /// Extracts the completion text and usage from a response body.
  static Generation parse_response(const std::string& prompt, const std::string& body);

 private:
  RemoteBackendConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
};

struct RetryOutcome {
  Generation generation;
  int attempts = 0;
};

/// Retries transient BackendErrors with exponential backoff; anything else is rethrown at once.
RetryOutcome generate_with_retry(AgentBackend& backend, const std::string& prompt, const GenerationParams& params,
                                 const RetryPolicy& policy);

/// Resolves backend ids to instances. "mock" is always available and yields a
/// role-specific MockBackend.
class BackendRegistry {
 public:
  using Factory = std::function<std::shared_ptr<AgentBackend>(Role)>;

  BackendRegistry();

  void add(const std::string& id, Factory factory);
  /// Registers one shared instance for every role.
  void add_shared(std::shared_ptr<AgentBackend> backend);
  bool has(std::string_view id) const;
  /// Throws NotFoundError for unknown ids. Instances are cached per (id, role).
  std::shared_ptr<AgentBackend> resolve(std::string_view id, Role role);

 private:
  std::map<std::string, Factory, std::less<>> factories_;
  std::map<std::pair<std::string, Role>, std::shared_ptr<AgentBackend>> cache_;
  mutable std::mutex mutex_;
};

}  // namespace hmit::agents
