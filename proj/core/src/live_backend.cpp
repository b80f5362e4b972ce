#include <regex>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mecopt/llm_client.hpp"

namespace mecopt {
namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string base_path;
};

Endpoint split_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) {
    throw BackendError(BackendError::Kind::configuration, "endpoint is not an http(s) URL: " + url);
  }
  std::string path = m[2].matched ? m[2].str() : std::string{};
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {m[1].str(), path};
}

HttpTransport http_transport(const std::string& origin) {
  return [origin](const std::string& path, const std::string& body,
                  const std::map<std::string, std::string>& headers,
                  double timeout_s) -> HttpResponse {
    httplib::Client client(origin);
    const auto secs = static_cast<time_t>(timeout_s);
    const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(path, h, body, "application/json");
    HttpResponse out;
    if (!res) {
      out.transport_error = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  };
}

bool retryable_status(int status) { return status == 429 || (status >= 500 && status < 600); }

}  // namespace

struct LiveBackend::Gate {
  explicit Gate(std::size_t n) : slots(static_cast<std::ptrdiff_t>(n)) {}
  std::counting_semaphore<1024> slots;
};

LiveBackend::LiveBackend(LiveConfig config)
    : LiveBackend(config, http_transport(split_endpoint(config.endpoint).origin)) {}

LiveBackend::LiveBackend(LiveConfig config, HttpTransport transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (config_.credential.empty()) {
    throw BackendError(BackendError::Kind::configuration, "live backend credential is empty");
  }
  if (config_.max_in_flight == 0 || config_.max_in_flight > 1024) {
    throw BackendError(BackendError::Kind::configuration, "max_in_flight must be in [1, 1024]");
  }
  path_ = split_endpoint(config_.endpoint).base_path + "/chat/completions";
  gate_ = std::make_unique<Gate>(config_.max_in_flight);
}

LiveBackend::~LiveBackend() = default;

std::string build_chat_request_body(const CompletionRequest& req) {
  nlohmann::json messages = nlohmann::json::array();
  if (!req.system_text.empty()) {
    messages.push_back({{"role", "system"}, {"content", req.system_text}});
  }
  messages.push_back({{"role", "user"}, {"content", req.user_text}});
  nlohmann::json body{{"model", req.model_id},
                      {"messages", std::move(messages)},
                      {"temperature", req.temperature}};
  if (req.max_output_tokens) body["max_tokens"] = *req.max_output_tokens;
  return body.dump();
}

std::string extract_chat_content(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(BackendError::Kind::bad_response,
                       std::string("chat completion response is malformed: ") + e.what());
  }
}

std::string LiveBackend::complete(const CompletionRequest& req) {
  req.validate();
  const std::string body = build_chat_request_body(req);
  const std::map<std::string, std::string> headers{
      {"Authorization", "Bearer " + config_.credential}};
  const auto& secret = config_.credential;

  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  };
  gate_->slots.acquire();
  Release release{gate_->slots};

  std::string last_error;
  for (int attempt = 0;; ++attempt) {
    const HttpResponse res = transport_(path_, body, headers, req.request_timeout_s);
    if (res.status == 200) return extract_chat_content(res.body);
    if (res.status == 401 || res.status == 403) {
      throw BackendError(BackendError::Kind::auth_failure,
                         "endpoint rejected the credential (HTTP " + std::to_string(res.status) +
                             ")");
    }
    const bool transient = res.status == 0 || retryable_status(res.status);
    last_error = res.status == 0 ? "transport error: " + res.transport_error
                                 : "HTTP " + std::to_string(res.status);
    if (!transient) {
      throw BackendError(BackendError::Kind::http_error,
                         redact(last_error + ": " + res.body.substr(0, 200), secret));
    }
    if (attempt >= config_.retry.max_retries) break;
    const auto delay = config_.retry.delay_for(attempt);
    if (config_.retry.sleep) {
      config_.retry.sleep(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
  }
  throw BackendError(BackendError::Kind::retries_exhausted,
                     redact("gave up after " + std::to_string(config_.retry.max_retries) +
                                " retries; last failure: " + last_error,
                            secret));
}

}  // namespace mecopt
