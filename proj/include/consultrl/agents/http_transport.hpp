#pragma once

#include <memory>
#include <semaphore>
#include <string>

#include <nlohmann/json.hpp>

namespace consultrl::agents {

struct HttpTarget {
  std::string scheme_host_port;  // e.g. "http://127.0.0.1:8000"
  std::string base_path;         // e.g. "/v1", never ends with '/'
};

// Splits "http://host:port/base" into its origin and path prefix.
// Throws InvalidRequest for anything that is not http(s).
HttpTarget parse_endpoint(const std::string& url);

struct HttpPolicy {
  int timeout_ms = 60000;
  int retry_limit = 2;
  int retry_backoff_ms = 250;
  int max_connections = 8;
  std::string api_key;
};

// POSTs JSON and returns the parsed JSON body.
//
// Connection failures, timeouts, 408/429 and 5xx are retried up to
// retry_limit times and then surface as TransportError. Any other non-2xx
// status, or a body that is not JSON, raises ProtocolError immediately.
// A fresh client is opened per request so the transport is thread-safe;
// the semaphore caps how many requests are in flight at once.
class JsonHttpTransport {
 public:
  JsonHttpTransport(const std::string& endpoint_url, HttpPolicy policy);

  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

  const HttpTarget& target() const noexcept { return target_; }

 private:
  HttpTarget target_;
  HttpPolicy policy_;
  std::shared_ptr<std::counting_semaphore<>> slots_;
};

}  // namespace consultrl::agents
