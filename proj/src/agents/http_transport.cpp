#include "consultrl/agents/http_transport.hpp"

#include <chrono>
#include <regex>
#include <thread>

#include <httplib.h>

#include "consultrl/common/error.hpp"

namespace consultrl::agents {

using nlohmann::json;

HttpTarget parse_endpoint(const std::string& url) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) {
    throw InvalidRequest("endpoint must be an http(s) URL: '" + url + "'");
  }
  HttpTarget target{m[1].str(), m[2].matched ? m[2].str() : std::string()};
  while (!target.base_path.empty() && target.base_path.back() == '/') target.base_path.pop_back();
  return target;
}

JsonHttpTransport::JsonHttpTransport(const std::string& endpoint_url, HttpPolicy policy)
    : target_(parse_endpoint(endpoint_url)),
      policy_(std::move(policy)),
      slots_(std::make_shared<std::counting_semaphore<>>(std::max(1, policy_.max_connections))) {
  if (policy_.retry_limit < 0) throw InvalidRequest("retry_limit must be >= 0");
}

namespace {

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

struct SlotGuard {
  explicit SlotGuard(std::counting_semaphore<>& s) : sem(s) { sem.acquire(); }
  ~SlotGuard() { sem.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;
  std::counting_semaphore<>& sem;
};

}  // namespace

json JsonHttpTransport::post(const std::string& path, const json& body) const {
  const std::string full_path = target_.base_path + path;
  const std::string payload = body.dump();
  httplib::Headers headers;
  if (!policy_.api_key.empty()) headers.emplace("Authorization", "Bearer " + policy_.api_key);

  std::string last_error;
  for (int attempt = 0; attempt <= policy_.retry_limit; ++attempt) {
    if (attempt > 0 && policy_.retry_backoff_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(policy_.retry_backoff_ms * attempt));
    }
    httplib::Result res;
    {
      SlotGuard slot(*slots_);
      httplib::Client client(target_.scheme_host_port);
      const auto timeout = std::chrono::milliseconds(policy_.timeout_ms);
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      res = client.Post(full_path, headers, payload, "application/json");
    }
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (retryable_status(res->status)) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw ProtocolError("HTTP " + std::to_string(res->status) + " from " +
                          target_.scheme_host_port + full_path + ": " + res->body.substr(0, 200));
    }
    auto parsed = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) throw ProtocolError("response body is not JSON");
    return parsed;
  }
  throw TransportError("POST " + target_.scheme_host_port + full_path + " failed after " +
                       std::to_string(policy_.retry_limit + 1) + " attempt(s): " + last_error);
}

}  // namespace consultrl::agents
