#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <random>
#include <string>

#include "argos/error.hpp"

namespace argos::http {

struct Response {
  int status = 0;  // 0 means the request never completed (transport failure)
  std::string body;
  std::string error;
};

/// Minimal POST-JSON transport so remote backends can be exercised without a
/// network.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual Response post_json(const std::string& url, const std::string& bearer_token, const std::string& body) = 0;
};

/// cpp-httplib backed transport; http:// and https:// URLs.
std::shared_ptr<Transport> make_default_transport(std::chrono::seconds timeout = std::chrono::seconds(120));

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base{500};
  double factor = 2.0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Retries on transport failures, 429 and 5xx.
bool is_retryable_status(int status);

/// Full-jitter delay for the given zero-based retry: uniform in
/// [0, base * factor^retry].
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry, std::mt19937_64& rng);

/// Performs the request with the retry policy. Returns the first 2xx response;
/// otherwise throws Error(failure_code) carrying the last status.
Response post_with_retries(Transport& transport, const std::string& url, const std::string& bearer_token,
                           const std::string& body, const RetryPolicy& policy, const Sleeper& sleep,
                           ErrorCode failure_code);

Sleeper real_sleeper();

}  // namespace argos::http
