#include "argos/http.hpp"

#include <cmath>
#include <regex>
#include <thread>

#include "httplib.h"

namespace argos::http {

namespace {

class HttplibTransport : public Transport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

  Response post_json(const std::string& url, const std::string& bearer_token, const std::string& body) override {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
    std::smatch m;
    if (!std::regex_match(url, m, kUrl)) return {0, "", "invalid URL: " + url};
    std::string path = m[2].matched ? m[2].str() : "/";

    httplib::Client client(m[1].str());
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);

    auto res = client.Post(path, headers, body, "application/json");
    if (!res) return {0, "", httplib::to_string(res.error())};
    return {res->status, res->body, ""};
  }

 private:
  std::chrono::seconds timeout_;
};

}  // namespace

std::shared_ptr<Transport> make_default_transport(std::chrono::seconds timeout) {
  return std::make_shared<HttplibTransport>(timeout);
}

bool is_retryable_status(int status) { return status == 0 || status == 429 || status >= 500; }

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry, std::mt19937_64& rng) {
  double cap = static_cast<double>(policy.base.count()) * std::pow(policy.factor, retry);
  std::uniform_real_distribution<double> dist(0.0, cap);
  return std::chrono::milliseconds(static_cast<long long>(dist(rng)));
}

Response post_with_retries(Transport& transport, const std::string& url, const std::string& bearer_token,
                           const std::string& body, const RetryPolicy& policy, const Sleeper& sleep,
                           ErrorCode failure_code) {
  std::mt19937_64 rng(std::random_device{}());
  Response last;
  for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
    if (attempt > 0 && sleep) sleep(backoff_delay(policy, attempt - 1, rng));
    last = transport.post_json(url, bearer_token, body);
    if (last.status >= 200 && last.status < 300) return last;
    if (!is_retryable_status(last.status)) break;
  }
  std::string message = last.status == 0 ? last.error : last.body.substr(0, 500);
  throw Error(failure_code, url + ": " + message, last.status);
}

Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

}  // namespace argos::http
