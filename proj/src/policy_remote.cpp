#include <chrono>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include "httplib.h"
#include "http_url.hpp"
#include "json.hpp"
#include "sand/errors.hpp"
#include "sand/policy.hpp"

namespace sand::policy {

using nlohmann::json;

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* value = std::getenv(name);
  return (value && *value) ? std::string(value) : std::move(fallback);
}

std::string completions_path(const std::string& endpoint_path) {
  if (endpoint_path.empty()) return "/v1/chat/completions";
  if (endpoint_path.size() >= 17 &&
      endpoint_path.compare(endpoint_path.size() - 17, 17, "/chat/completions") == 0)
    return endpoint_path;
  return endpoint_path + "/v1/chat/completions";
}

}  // namespace

// ============================================================================
// RemoteChatClient
// ============================================================================

struct RemoteChatClient::Impl {
  RemoteOptions options;
  std::string base;
  std::string path;
  // Compile-time ceiling only; the runtime bound is options.max_inflight.
  mutable std::counting_semaphore<256> inflight;

  explicit Impl(RemoteOptions opts) : options(std::move(opts)), inflight(0) {
    options.endpoint = options.endpoint.empty() ? env_or("SAND_API_BASE", "")
                                                : options.endpoint;
    options.api_key = options.api_key.empty() ? env_or("SAND_API_KEY", "") : options.api_key;
    if (options.endpoint.empty())
      raise(errc::config, "no chat endpoint: set RemoteOptions.endpoint or SAND_API_BASE");
    if (options.retries < 1) raise(errc::config, "retries must be >= 1");
    if (options.max_inflight < 1 || options.max_inflight > 256)
      raise(errc::config, "max_inflight must be in [1, 256]");
    const auto [b, p] = detail::split_url(options.endpoint);
    base = b;
    path = completions_path(p);
    inflight.release(options.max_inflight);
  }

  std::string complete(const std::vector<ChatMessage>& messages, double temperature) const {
    json request;
    request["model"] = options.model;
    json msgs = json::array();
    for (const ChatMessage& m : messages)
      msgs.push_back({{"role", m.role}, {"content", m.content}});
    request["messages"] = std::move(msgs);
    request["temperature"] = temperature;
    request["max_tokens"] = options.max_tokens;
    const std::string body = request.dump();

    inflight.acquire();
    struct Release {
      std::counting_semaphore<256>& sem;
      ~Release() { sem.release(); }
    } release{inflight};

    std::string last_error;
    for (int attempt = 1; attempt <= options.retries; ++attempt) {
      if (attempt > 1) {
        const auto wait = std::chrono::milliseconds(options.backoff_base_ms) * (1 << (attempt - 2));
        std::this_thread::sleep_for(wait);
      }
      httplib::Client client(base);
      client.set_connection_timeout(options.timeout_ms / 1000,
                                    (options.timeout_ms % 1000) * 1000);
      client.set_read_timeout(options.timeout_ms / 1000, (options.timeout_ms % 1000) * 1000);
      client.set_write_timeout(options.timeout_ms / 1000, (options.timeout_ms % 1000) * 1000);
      httplib::Headers headers;
      if (!options.api_key.empty())
        headers.emplace("Authorization", "Bearer " + options.api_key);

      auto res = client.Post(path, headers, body, "application/json");
      if (!res) {
        last_error = "connection failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
        continue;
      }
      if (res->status != 200)
        raise(errc::policy_unavailable,
              "chat endpoint rejected the request (HTTP " + std::to_string(res->status) +
                  "): " + res->body);
      try {
        const json reply = json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const json::exception& e) {
        last_error = std::string("malformed completion reply: ") + e.what();
        continue;
      }
    }
    raise(errc::policy_unavailable, "chat endpoint '" + base + path + "' failed after " +
                                        std::to_string(options.retries) +
                                        " attempts; last error: " + last_error);
  }
};

RemoteChatClient::RemoteChatClient(RemoteOptions options)
    : impl_(std::make_shared<Impl>(std::move(options))) {}

RemoteChatClient::~RemoteChatClient() = default;

std::string RemoteChatClient::complete(const std::vector<ChatMessage>& messages,
                                       double temperature) const {
  return impl_->complete(messages, temperature);
}

const RemoteOptions& RemoteChatClient::options() const { return impl_->options; }

// ============================================================================
// Policy and base-model adapters
// ============================================================================

RemoteChatPolicy::RemoteChatPolicy(RemoteOptions options, std::string system_prompt)
    : client_(std::move(options)), system_prompt_(std::move(system_prompt)) {}

StepSample RemoteChatPolicy::sample_step(const core::History& h, double temperature,
                                         std::uint64_t seed) const {
  (void)seed;  // the remote sampler owns its randomness
  const auto messages = chat_messages_for_history(system_prompt_, h);
  return parse_step_text(client_.complete(messages, temperature));
}

RemoteChatBase::RemoteChatBase(RemoteOptions options) : client_(std::move(options)) {}

std::string RemoteChatBase::complete_text(const std::string& prompt, double temperature) const {
  return client_.complete({ChatMessage{"user", prompt}}, temperature);
}

}  // namespace sand::policy
