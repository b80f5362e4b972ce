#include "mecopt/llm_client.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mecopt/errors.hpp"
#include "mecopt/prompting.hpp"
#include "rng.hpp"

namespace mecopt {

void CompletionRequest::validate() const {
  if (user_text.empty()) throw ValidationError("completion request has empty user text");
  if (!(request_timeout_s > 0.0)) throw ValidationError("completion timeout must be > 0");
  if (!(temperature >= 0.0)) throw ValidationError("temperature must be >= 0");
  if (max_output_tokens && *max_output_tokens <= 0) {
    throw ValidationError("max_output_tokens must be positive");
  }
}

std::string to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::live: return "live";
    case BackendKind::scripted: return "scripted";
    case BackendKind::heuristic: return "heuristic";
  }
  return "unknown";
}

BackendKind backend_kind_from_string(const std::string& text) {
  if (text == "live") return BackendKind::live;
  if (text == "scripted") return BackendKind::scripted;
  if (text == "heuristic") return BackendKind::heuristic;
  throw ValidationError("unknown backend kind \"" + text + "\"");
}

void BackendDescriptor::validate() const {
  switch (kind) {
    case BackendKind::live:
      if (endpoint.empty()) throw ValidationError("live backend requires an endpoint");
      if (credential_env.empty()) {
        throw ValidationError("live backend requires a credential environment variable");
      }
      if (max_in_flight == 0) throw ValidationError("max_in_flight must be >= 1");
      break;
    case BackendKind::scripted:
      if (script_path.empty()) throw ValidationError("scripted backend requires a script path");
      break;
    case BackendKind::heuristic:
      if (!seed) throw ValidationError("heuristic backend requires a seed");
      break;
  }
}

std::string to_string(BackendError::Kind kind) {
  switch (kind) {
    case BackendError::Kind::auth_failure: return "auth_failure";
    case BackendError::Kind::retries_exhausted: return "retries_exhausted";
    case BackendError::Kind::script_exhausted: return "script_exhausted";
    case BackendError::Kind::prompt_unparseable: return "prompt_unparseable";
    case BackendError::Kind::http_error: return "http_error";
    case BackendError::Kind::bad_response: return "bad_response";
    case BackendError::Kind::configuration: return "configuration";
  }
  return "unknown";
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses)
    : responses_(std::move(responses)) {}

ScriptedBackend::ScriptedBackend(ScriptedBackend&& other) noexcept
    : responses_(std::move(other.responses_)), next_(other.next_) {}

ScriptedBackend ScriptedBackend::from_text(const std::string& text) {
  std::vector<std::string> responses;
  std::string current;
  bool any = false;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "---") {
      responses.push_back(current);
      current.clear();
      any = false;
      continue;
    }
    if (any) current += '\n';
    current += line;
    any = true;
  }
  if (any) responses.push_back(current);
  return ScriptedBackend(std::move(responses));
}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw BackendError(BackendError::Kind::configuration, "cannot open script " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

std::string ScriptedBackend::complete(const CompletionRequest& req) {
  req.validate();
  std::lock_guard lock(mu_);
  if (next_ >= responses_.size()) {
    throw BackendError(BackendError::Kind::script_exhausted,
                       "script exhausted after " + std::to_string(responses_.size()) +
                           " responses");
  }
  return responses_[next_++];
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return next_;
}

HeuristicBackend::HeuristicBackend(std::uint64_t seed)
    : rng_(std::make_unique<detail::Rng>(seed)) {}

HeuristicBackend::~HeuristicBackend() = default;

std::string HeuristicBackend::complete(const CompletionRequest& req) {
  req.validate();
  PromptView view;
  try {
    view = read_prompt(req.user_text);
  } catch (const ValidationError& e) {
    throw BackendError(BackendError::Kind::prompt_unparseable,
                       std::string("heuristic backend cannot read prompt: ") + e.what());
  }
  const std::size_t m = view.matrix.size();
  const std::size_t n = view.matrix.front().size();

  const std::vector<std::uint32_t>* best = nullptr;
  double best_value = 0.0;
  for (const auto& [assign, value] : view.observations) {
    if (!best || value < best_value) {
      best = &assign;
      best_value = value;
    }
  }

  std::lock_guard lock(mu_);
  std::ostringstream reply;
  for (std::size_t k = 0; k < view.candidates_requested; ++k) {
    std::vector<std::uint32_t> cand(n);
    if (best && rng_->bernoulli(0.5)) {
      cand = *best;
      cand[rng_->below(n)] = static_cast<std::uint32_t>(rng_->below(m));
    } else {
      for (auto& s : cand) s = static_cast<std::uint32_t>(rng_->below(m));
    }
    reply << "Allocation: [";
    for (std::size_t a = 0; a < n; ++a) reply << (a ? ", " : "") << cand[a] + 1;
    reply << "]\n";
  }
  return reply.str();
}

std::chrono::milliseconds RetryPolicy::delay_for(int attempt) const {
  double ms = static_cast<double>(initial_delay.count());
  for (int k = 0; k < attempt; ++k) ms *= multiplier;
  ms = std::min(ms, static_cast<double>(max_delay.count()));
  return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

std::string redact(std::string text, const std::string& secret) {
  if (secret.empty()) return text;
  static const std::string mask = "[REDACTED]";
  for (std::size_t pos = text.find(secret); pos != std::string::npos;
       pos = text.find(secret, pos + mask.size())) {
    text.replace(pos, secret.size(), mask);
  }
  return text;
}

std::unique_ptr<Backend> make_backend(const BackendDescriptor& d) {
  d.validate();
  switch (d.kind) {
    case BackendKind::scripted:
      return std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(d.script_path));
    case BackendKind::heuristic:
      return std::make_unique<HeuristicBackend>(*d.seed);
    case BackendKind::live: {
      const char* value = std::getenv(d.credential_env.c_str());
      if (!value || !*value) {
        throw BackendError(BackendError::Kind::configuration,
                           "environment variable " + d.credential_env + " is not set");
      }
      LiveConfig cfg;
      cfg.endpoint = d.endpoint;
      cfg.credential = value;
      cfg.max_in_flight = d.max_in_flight;
      return std::make_unique<LiveBackend>(std::move(cfg));
    }
  }
  throw BackendError(BackendError::Kind::configuration, "unknown backend kind");
}

}  // namespace mecopt
