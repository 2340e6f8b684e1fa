#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "argos/http.hpp"

namespace argos::llm {

struct GenerationParams {
  double temperature = 0.7;
  int max_tokens = 2048;
  std::optional<std::uint64_t> seed;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string name() const = 0;
  virtual std::string model() const = 0;
  virtual std::string complete(const std::string& prompt, const GenerationParams& params) = 0;
};

/// What the mock backend thinks a prompt is asking for.
enum class PromptKind {
  HazardOurs,
  HazardCot,
  HazardVanilla,
  FsrSynthesis,
  UnitExtraction,
  FsrAudit,
  ScenarioJudge,
};

/// Sentinel-substring classification used by the mock backend.
PromptKind classify_prompt(std::string_view prompt);

/// Well-formed response of the prompt's kind; variable content is chosen by
/// a 64-bit hash of the prompt, so the result is a pure function of it.
std::string render_mock_response(std::string_view prompt);

class MockLlmBackend : public LlmBackend {
 public:
  explicit MockLlmBackend(std::string model = "mock-llm") : model_(std::move(model)) {}
  std::string name() const override { return "mock"; }
  std::string model() const override { return model_; }
  std::string complete(const std::string& prompt, const GenerationParams&) override {
    return render_mock_response(prompt);
  }

 private:
  std::string model_;
};

struct ChatBackendOptions {
  std::string endpoint;  // full URL of the chat completions route
  std::string model;
  std::string api_token;
  http::RetryPolicy retry;
};

/// OpenAI-compatible chat completions client: one user message in, the first
/// choice's content out. Failures after the retry budget raise BackendError.
class ChatCompletionsBackend : public LlmBackend {
 public:
  ChatCompletionsBackend(ChatBackendOptions options, std::shared_ptr<http::Transport> transport,
                         http::Sleeper sleeper = http::real_sleeper());

  std::string name() const override { return "remote"; }
  std::string model() const override { return options_.model; }
  std::string complete(const std::string& prompt, const GenerationParams& params) override;

 private:
  ChatBackendOptions options_;
  std::shared_ptr<http::Transport> transport_;
  http::Sleeper sleeper_;
};

struct CallRecord {
  std::string key;  // caller-chosen ordering key, e.g. hazard id
  std::string model;
  std::string prompt_sha256;
  std::string response_sha256;
};

/// Collects backend calls made during a stage; appends are serialized.
class CallLog {
 public:
  void append(CallRecord record);
  /// Records sorted by key, independent of completion order.
  std::vector<CallRecord> sorted() const;

 private:
  mutable std::mutex mu_;
  std::vector<CallRecord> records_;
};

/// Runs one completion and records it in `log` when given.
std::string generate(LlmBackend& backend, const std::string& prompt, const GenerationParams& params,
                     CallLog* log = nullptr, const std::string& key = {});

}  // namespace argos::llm
