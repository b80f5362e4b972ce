#pragma once

// Chat-completion backends. The live backend speaks the OpenAI-compatible
// wire protocol; the scripted and heuristic backends are offline stand-ins
// with deterministic output.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng_fwd.hpp"

namespace mecopt {

struct CompletionRequest {
  std::string model_id = "gpt-4o-mini";
  std::string system_text;
  std::string user_text;
  double temperature = 1.0;
  std::optional<int> max_output_tokens;
  double request_timeout_s = 60.0;

  void validate() const;
};

enum class BackendKind { live, scripted, heuristic };
std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& text);

inline constexpr const char* kDefaultCredentialEnv = "OPENAI_API_KEY";
inline constexpr const char* kDefaultEndpoint = "https://api.openai.com/v1";

struct BackendDescriptor {
  BackendKind kind = BackendKind::heuristic;
  std::string endpoint;        // live
  std::string credential_env;  // live: name of the environment variable
  std::filesystem::path script_path;  // scripted
  std::optional<std::uint64_t> seed;  // heuristic
  std::size_t max_in_flight = 4;      // live

  void validate() const;
};

class BackendError : public std::runtime_error {
 public:
  enum class Kind {
    auth_failure,
    retries_exhausted,
    script_exhausted,
    prompt_unparseable,
    http_error,
    bad_response,
    configuration,
  };
  BackendError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};
std::string to_string(BackendError::Kind kind);

class Backend {
 public:
  virtual ~Backend() = default;
  // Returns the assistant message text or throws BackendError.
  virtual std::string complete(const CompletionRequest& req) = 0;
};

// Replies with canned responses in order; the call after the last one throws
// script_exhausted.
class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(std::vector<std::string> responses);
  ScriptedBackend(ScriptedBackend&& other) noexcept;
  // Responses separated by lines containing only "---".
  static ScriptedBackend from_text(const std::string& text);
  static ScriptedBackend from_file(const std::filesystem::path& path);

  std::string complete(const CompletionRequest& req) override;
  std::size_t calls() const;

 private:
  std::vector<std::string> responses_;
  std::size_t next_ = 0;
  mutable std::mutex mu_;
};

// Reads the matrix and observations back out of the prompt and replies with
// the requested number of "Allocation:" lines. Each line is, with
// probability 1/2, the best observation with one random user moved to a
// random server, otherwise a fresh uniform allocation.
class HeuristicBackend final : public Backend {
 public:
  explicit HeuristicBackend(std::uint64_t seed);
  ~HeuristicBackend() override;

  std::string complete(const CompletionRequest& req) override;

 private:
  std::unique_ptr<detail::Rng> rng_;
  std::mutex mu_;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_delay{1000};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{30000};
  std::function<void(std::chrono::milliseconds)> sleep;  // default: this_thread::sleep_for

  // Delay before retry number `attempt` (0-based).
  std::chrono::milliseconds delay_for(int attempt) const;
};

struct HttpResponse {
  int status = 0;  // 0 when the request never completed
  std::string body;
  std::string transport_error;
};

// POSTs a JSON body to a path below the configured base URL.
using HttpTransport = std::function<HttpResponse(
    const std::string& path, const std::string& body,
    const std::map<std::string, std::string>& headers, double timeout_s)>;

struct LiveConfig {
  std::string endpoint = kDefaultEndpoint;
  std::string credential;
  RetryPolicy retry;
  std::size_t max_in_flight = 4;
};

class LiveBackend final : public Backend {
 public:
  // Uses an HTTP(S) client against config.endpoint.
  explicit LiveBackend(LiveConfig config);
  LiveBackend(LiveConfig config, HttpTransport transport);
  ~LiveBackend() override;

  std::string complete(const CompletionRequest& req) override;

  // Base path of the endpoint URL plus "/chat/completions".
  const std::string& request_path() const { return path_; }

 private:
  struct Gate;
  LiveConfig config_;
  std::string path_;
  HttpTransport transport_;
  std::unique_ptr<Gate> gate_;
};

std::string build_chat_request_body(const CompletionRequest& req);
// choices[0].message.content; throws BackendError(bad_response).
std::string extract_chat_content(const std::string& body);

// Live backends read the credential from the named environment variable.
std::unique_ptr<Backend> make_backend(const BackendDescriptor& descriptor);

// Replaces every occurrence of secret in text with "[REDACTED]".
std::string redact(std::string text, const std::string& secret);

}  // namespace mecopt
