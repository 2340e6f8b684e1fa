#include <atomic>
#include <chrono>
#include <cmath>
#include <memory>
#include <set>
#include <thread>

#include "argos/error.hpp"
#include "argos/http.hpp"
#include "argos/llm.hpp"
#include "argos/parallel.hpp"
#include "argos/util.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support/expect.hpp"
#include "support/fake_transport.hpp"
#include "support/gen.hpp"

using namespace argos;
using namespace std::chrono_literals;

namespace {

http::Response chat_reply(const std::string& content) {
  nlohmann::json j = {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
  return testing::status(200, j.dump());
}

}  // namespace

TEST_CASE("retryable statuses") {
  CHECK(http::is_retryable_status(0));
  CHECK(http::is_retryable_status(429));
  CHECK(http::is_retryable_status(500));
  CHECK(http::is_retryable_status(503));
  CHECK_FALSE(http::is_retryable_status(400));
  CHECK_FALSE(http::is_retryable_status(401));
  CHECK_FALSE(http::is_retryable_status(404));
}

TEST_CASE("full-jitter backoff stays inside its window") {
  http::RetryPolicy policy;
  std::mt19937_64 rng(1);
  for (int retry = 0; retry < 3; ++retry) {
    auto cap = std::chrono::milliseconds(static_cast<long>(500 * std::pow(2.0, retry)));
    for (int i = 0; i < 200; ++i) {
      auto d = http::backoff_delay(policy, retry, rng);
      CHECK(d >= 0ms);
      CHECK(d <= cap);
    }
  }
}

TEST_CASE("chat backend sends one user message and returns the first choice") {
  auto t = std::make_shared<testing::ScriptedTransport>(std::vector<http::Response>{chat_reply("hello")});
  testing::RecordingSleeper sleeper;
  llm::ChatCompletionsBackend b({"http://llm/v1/chat/completions", "gpt-x", "secret", {}}, t, sleeper.fn());
  llm::GenerationParams params{0.2, 64, 7};
  CHECK(b.complete("prompt text", params) == "hello");
  REQUIRE(t->requests.size() == 1);
  auto body = nlohmann::json::parse(t->requests[0].body);
  CHECK(body["model"] == "gpt-x");
  CHECK(body["messages"].size() == 1);
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"] == "prompt text");
  CHECK(body["temperature"].get<double>() == 0.2);
  CHECK(body["max_tokens"] == 64);
  CHECK(body["seed"] == 7);
  CHECK(t->requests[0].token == "secret");
}

TEST_CASE("transport failure four times exhausts the retry budget") {
  auto t = std::make_shared<testing::ScriptedTransport>(std::vector<http::Response>{testing::transport_failure()});
  testing::RecordingSleeper sleeper;
  llm::ChatCompletionsBackend b({"http://llm", "m", "", {}}, t, sleeper.fn());
  auto err = testing::capture_error([&] { b.complete("p", {}); });
  REQUIRE(err);
  CHECK(err->code() == ErrorCode::BackendError);
  CHECK(err->status() == 0);
  CHECK(t->requests.size() == 4);
  REQUIRE(sleeper.delays.size() == 3);
  CHECK(sleeper.delays[0] <= 500ms);
  CHECK(sleeper.delays[1] <= 1000ms);
  CHECK(sleeper.delays[2] <= 2000ms);
}

TEST_CASE("chat backend recovers within the budget and rejects odd bodies") {
  testing::RecordingSleeper sleeper;
  auto t = std::make_shared<testing::ScriptedTransport>(
      std::vector<http::Response>{testing::status(500), testing::status(429), testing::transport_failure(),
                                  chat_reply("ok")});
  llm::ChatCompletionsBackend b({"http://llm", "m", "", {}}, t, sleeper.fn());
  CHECK(b.complete("p", {}) == "ok");

  auto bad = std::make_shared<testing::ScriptedTransport>(
      std::vector<http::Response>{testing::status(200, R"({"choices":[]})"), testing::status(200, "nope")});
  llm::ChatCompletionsBackend c({"http://llm", "m", "", {}}, bad, sleeper.fn());
  CHECK_ERROR(c.complete("p", {}), ErrorCode::BackendError);
  CHECK_ERROR(c.complete("p", {}), ErrorCode::BackendError);

  auto zero_retries = std::make_shared<testing::ScriptedTransport>(std::vector<http::Response>{testing::status(503)});
  llm::ChatCompletionsBackend d({"http://llm", "m", "", {0, 500ms, 2.0}}, zero_retries, sleeper.fn());
  CHECK_ERROR(d.complete("p", {}), ErrorCode::BackendError);
  CHECK(zero_retries->requests.size() == 1);
}

TEST_CASE("mock backend is a pure function of the prompt") {
  llm::MockLlmBackend mock;
  gen::Rng rng(21);
  for (int i = 0; i < 50; ++i) {
    auto prompt = rng.sentence(5, 40);
    CHECK(mock.complete(prompt, {}) == mock.complete(prompt, {0.0, 1, 1}));
  }
}

TEST_CASE("mock prompt classification by sentinel") {
  using K = llm::PromptKind;
  CHECK(llm::classify_prompt("You are a Principal Functional Safety Auditor ... Risk Factor A") == K::FsrAudit);
  CHECK(llm::classify_prompt("a robotic safety engineer ... [FSR SYNTHESIS TASK]") == K::ScenarioJudge);
  CHECK(llm::classify_prompt("[FSR SYNTHESIS TASK] Risk Factor A") == K::FsrSynthesis);
  CHECK(llm::classify_prompt("list the risk-relevant entities and tasks") == K::UnitExtraction);
  CHECK(llm::classify_prompt("Risk Factor A: Child (") == K::HazardOurs);
  CHECK(llm::classify_prompt("[REASONING INSTRUCTIONS]") == K::HazardCot);
  CHECK(llm::classify_prompt("anything else") == K::HazardVanilla);
}

TEST_CASE("generate records calls and refuses empty prompts") {
  llm::MockLlmBackend mock("mock-x");
  llm::CallLog log;
  auto out = llm::generate(mock, "p2", {}, &log, "b");
  llm::generate(mock, "p1", {}, &log, "a");
  auto calls = log.sorted();
  REQUIRE(calls.size() == 2);
  CHECK(calls[0].key == "a");
  CHECK(calls[1].key == "b");
  CHECK(calls[1].model == "mock-x");
  CHECK(calls[1].prompt_sha256 == sha256_hex("p2"));
  CHECK(calls[1].response_sha256 == sha256_hex(out));
  CHECK_ERROR(llm::generate(mock, "  \n", {}), ErrorCode::InvalidArgument);
}

TEST_CASE("parallel_map keeps index order and honours the in-flight cap") {
  gen::Rng rng(4);
  for (int round = 0; round < 20; ++round) {
    std::size_t n = static_cast<std::size_t>(rng.integer(0, 40));
    std::size_t cap = static_cast<std::size_t>(rng.integer(1, 6));
    std::atomic<int> live{0}, peak{0};
    auto out = parallel_map(n, cap, [&](std::size_t i) {
      int now = ++live;
      int prev = peak.load();
      while (now > prev && !peak.compare_exchange_weak(prev, now)) {
      }
      std::this_thread::sleep_for(std::chrono::microseconds(200));
      --live;
      return i * i;
    });
    REQUIRE(out.size() == n);
    for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == i * i);
    CHECK(peak.load() <= static_cast<int>(cap));
  }
}

TEST_CASE("parallel_map rethrows the lowest failing index") {
  auto err = testing::capture_error([] {
    parallel_map(20, 4, [](std::size_t i) -> int {
      if (i == 7 || i == 13) throw Error(ErrorCode::EmptyResponse, std::to_string(i));
      return 0;
    });
  });
  REQUIRE(err);
  CHECK(err->detail() == "7");
}
