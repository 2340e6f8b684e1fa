#include "argos/llm.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <tuple>

#include "argos/error.hpp"
#include "argos/util.hpp"
#include "json.hpp"

namespace argos::llm {

using nlohmann::json;

PromptKind classify_prompt(std::string_view prompt) {
  auto has = [&](std::string_view s) { return prompt.find(s) != std::string_view::npos; };
  if (has("Functional Safety Auditor")) return PromptKind::FsrAudit;
  if (has("robotic safety engineer")) return PromptKind::ScenarioJudge;
  if (has("[FSR SYNTHESIS TASK]")) return PromptKind::FsrSynthesis;
  if (has("list the risk-relevant entities and tasks")) return PromptKind::UnitExtraction;
  if (has("Risk Factor A")) return PromptKind::HazardOurs;
  if (has("[REASONING INSTRUCTIONS]")) return PromptKind::HazardCot;
  return PromptKind::HazardVanilla;
}

namespace {

// splitmix64 stream seeded by the prompt hash.
class Picker {
 public:
  explicit Picker(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  template <typename C>
  const auto& pick(const C& options) {
    return options[next() % options.size()];
  }
  int score(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }

 private:
  std::uint64_t state_;
};

const std::vector<std::string> kActions = {
    "brakes abruptly close to the person",
    "turns sharply inside the narrow passage",
    "extends its arm toward the recipient",
    "accelerates to recover its schedule",
    "holds the load at arm's length while waiting",
    "reverses along its trajectory buffer",
};

const std::vector<std::string> kConsequences = {
    "The carried hot liquid sloshes over the rim and scalds the person",
    "The gripper strikes the person before the reflex loop can stop the arm",
    "The load slips from the gripper and falls onto the person",
    "The chassis loses traction and the robot collides with the person",
    "The person trips over the chassis while standing inside its blind zone",
    "The arm pins the person's hand against the table edge",
};

const std::vector<std::string> kLimits = {
    "50 ms cognitive loop latency",
    "0.2 m blind zone of the head camera",
    "dynamic grip force ceiling",
    "traction limit of the mobility chassis",
    "1.2 m range of the thermal perception system",
    "3 m vertical coverage limit of the chassis LiDAR",
};

const std::vector<std::string> kTitles = {
    "Deceleration limit while carrying thermal hazards",
    "Speed reduction inside the proximity envelope",
    "Contact force ceiling during handover",
    "Traction-aware motion on low-friction floors",
    "Degraded perception safe state",
    "Retraction along trajectory buffer after protective stop",
};

const std::vector<std::string> kRequirements = {
    "The Mobility Chassis System shall limit deceleration to the configured safe value whenever a thermal hazard is carried and a person is detected within 1.5 m.",
    "The Reactive Control Engine shall reduce travel speed below 0.3 m/s while any person is tracked inside the proximity safety range.",
    "The Smart End-Effector shall cap grip and contact force at the dynamic force ceiling while the recipient's hand is within 0.05 m.",
    "The Localization System shall lower the acceleration limit when wheel slip is detected on the current floor segment.",
    "The Safety Compute Engine shall enter a reduced-speed safe state when head camera confidence drops below its operating threshold.",
    "The Retraction and Recovery Logic shall back the robot out along the trajectory buffer after a protective stop inside a blind zone.",
};

const std::vector<std::string> kTriggers = {
    "Thermal perception reports a hot load and proximity sensing reports a person within 1.5 m.",
    "A person is tracked inside the proximity safety range.",
    "Tactile sensing reports contact above 5 N during handover.",
    "Wheel slip detection flags a velocity mismatch.",
    "Vision confidence falls below threshold for more than 100 ms.",
    "A protective stop is raised while the target lies inside a blind zone.",
};

const std::vector<std::string> kExits = {
    "No person is detected within 1.5 m for 2 s and the load temperature is below the hazard threshold.",
    "The proximity range has been clear for 2 s.",
    "Contact force stays below 2 N for 500 ms and the recipient grasp is confirmed.",
    "Wheel speeds and IMU velocity agree for 1 s.",
    "Vision confidence recovers for 1 s and the path is re-verified by LiDAR.",
    "The retraction completes and the path is verified free by LiDAR and proximity sensing.",
};

const std::vector<std::string> kJustifications = {
    "coupled physical factors with a clear causal chain",
    "plausible hazard but relies on generic assumptions",
    "grounded in the stated sensor limits",
    "stays within the seed's closed world",
    "identifies a secondary consequence of the robot's reaction",
};

std::string quoted_after(std::string_view prompt, std::string_view marker) {
  auto pos = prompt.rfind(marker);
  if (pos == std::string_view::npos) return "the assigned task";
  auto open = prompt.find('"', pos + marker.size());
  if (open == std::string_view::npos) return "the assigned task";
  auto close = prompt.find('"', open + 1);
  if (close == std::string_view::npos) return "the assigned task";
  return std::string(prompt.substr(open + 1, close - open - 1));
}

std::vector<std::string> factor_names(std::string_view prompt) {
  static const std::regex kFactor(R"(Risk Factor [A-Z]: (.+) \()");
  std::vector<std::string> out;
  for (const auto& line : split_lines(prompt)) {
    std::smatch m;
    if (std::regex_search(line, m, kFactor)) out.push_back(to_lower_ascii(m[1].str()));
  }
  return out;
}

std::string hazard_lines(Picker& p, const std::string& seed, const std::vector<std::string>& factors) {
  std::string cause;
  if (factors.empty()) {
    cause = "an ordinary condition of the task";
  } else {
    cause = factors.front();
    for (std::size_t i = 1; i < factors.size(); ++i) cause += (i + 1 == factors.size() ? " and " : ", ") + factors[i];
  }
  std::string line1 = "While executing \"" + seed + "\", the robot " + p.pick(kActions) + " as " + cause +
                      " coincide. " + p.pick(kConsequences) + ".";
  std::string line2 = "Hazard mechanism: " + cause + " push the required response beyond the " + p.pick(kLimits) +
                      ", so the protective reaction itself causes harm.";
  return line1 + "\n" + line2;
}

std::string mock_units(std::string_view prompt) {
  static const std::vector<std::string> kStop = {"while", "with", "from", "across", "that", "this", "into", "the",
                                                 "over", "under", "then", "when", "where", "near", "some", "their"};
  std::string seed = quoted_after(prompt, "Seed scenario:");
  std::vector<std::string> units;
  std::string word;
  auto flush = [&] {
    if (word.size() >= 4 && std::find(kStop.begin(), kStop.end(), to_lower_ascii(word)) == kStop.end() &&
        std::find(units.begin(), units.end(), word) == units.end()) {
      units.push_back(word);
    }
    word.clear();
  };
  for (char c : seed) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-') {
      word.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  std::string out;
  for (const auto& u : units) out += "- " + u + "\n";
  return out;
}

// Scenario lines listed under "**Method X Scenarios**:" in the judge prompt.
std::size_t count_method_scenarios(std::string_view prompt, char label) {
  std::string header = std::string("**Method ") + label + " Scenarios**:";
  auto pos = prompt.rfind(header);
  if (pos == std::string_view::npos) return 0;
  auto section = prompt.substr(pos + header.size());
  auto end = section.find("**Method ");
  if (end == std::string_view::npos) end = section.find("Please begin your evaluation");
  if (end != std::string_view::npos) section = section.substr(0, end);
  static const std::regex kScenario(R"(^\s*Scenario \d+:)");
  std::size_t n = 0;
  for (const auto& line : split_lines(section)) {
    if (std::regex_search(line, kScenario)) ++n;
  }
  return n;
}

std::string mock_scenario_judgment(Picker& p, std::string_view prompt) {
  std::string out = "[Global Comparative Analysis]\nThe three methods differ in how tightly they stay within the seed.\n\n";
  for (char label : {'A', 'B', 'C'}) {
    out += std::string("[Method ") + label + " Scenario Evaluation]\n";
    std::size_t n = count_method_scenarios(prompt, label);
    for (std::size_t i = 1; i <= n; ++i) {
      out += "Scenario " + std::to_string(i) + ": " + p.pick(kJustifications) + "\n";
      out += "Physical Reliability: " + std::to_string(p.score(5, 10)) + " pts, Long-tail Risk: " +
             std::to_string(p.score(4, 10)) + " pts, Safety Requirements: " + std::to_string(p.score(4, 10)) +
             " pts\n";
    }
    out += "\n";
  }
  out += "[Conclusion]\nScores reflect grounding in the seed and the robot's limits.\n";
  return out;
}

std::string mock_audit(Picker& p) {
  int cc = p.score(5, 10), prc = p.score(4, 10), lrc = p.score(4, 10);
  std::string out;
  out += "**1. Detailed Audit Analysis (Chain of Thought)**\n";
  out += "*   **Hardware Alignment Analysis**: Requirements reference listed sensors only.\n";
  out += "*   **Scenario Risk & Long-tail Coverage Analysis**: Primary and secondary risks are addressed.\n";
  out += "*   **Logic Robustness & Recovery Analysis**: Entry and exit conditions are stated.\n\n";
  out += "**2. Capability Violation Report**\n*   None\n\n";
  out += "**3. Final Scores**\n\n";
  out += " **Capability Compliance (CC)** | " + std::to_string(cc) + "/10 | " + p.pick(kJustifications) + " \n";
  out += " **Scenario Risk Coverage (PRC)** | " + std::to_string(prc) + "/10 | " + p.pick(kJustifications) + "\n";
  out += "|**Logic Robustness (LRC)** | " + std::to_string(lrc) + "/10 | " + p.pick(kJustifications) + " \n\n";
  out += "**4. Final Verdict**\n*   Adequate FSR set for the scenario.\n";
  return out;
}

std::vector<std::string> offered_clause_ids(std::string_view prompt) {
  static const std::regex kClause(R"(^\[([^\]]+)\] \()");
  std::vector<std::string> ids;
  auto pos = prompt.find("[RETRIEVED REGULATORY CLAUSES]");
  if (pos == std::string_view::npos) return ids;
  auto section = prompt.substr(pos);
  auto end = section.find("[ROBOT HARDWARE SPECIFICATION]");
  if (end != std::string_view::npos) section = section.substr(0, end);
  for (const auto& line : split_lines(section)) {
    std::smatch m;
    if (std::regex_search(line, m, kClause)) ids.push_back(m[1].str());
  }
  return ids;
}

std::string mock_fsrs(Picker& p, std::string_view prompt) {
  auto clauses = offered_clause_ids(prompt);
  int count = p.score(1, 3);
  std::size_t first = p.next() % kTitles.size();
  std::string out;
  for (int i = 0; i < count; ++i) {
    std::size_t k = (first + static_cast<std::size_t>(i)) % kTitles.size();
    std::string cites = "none";
    if (!clauses.empty()) {
      cites = clauses[static_cast<std::size_t>(i) % clauses.size()];
      if (clauses.size() > 1 && p.next() % 2 == 0) cites += ", " + clauses[(static_cast<std::size_t>(i) + 1) % clauses.size()];
    }
    if (i) out += "\n";
    out += "FSR-ID: FSR-" + std::to_string(i + 1) + "\n";
    out += "TITLE: " + kTitles[k] + "\n";
    out += "REQUIREMENT: " + kRequirements[k] + "\n";
    out += "TRIGGER: " + kTriggers[k] + "\n";
    out += "EXIT: " + kExits[k] + "\n";
    out += "CITES: " + cites + "\n";
  }
  return out;
}

}  // namespace

std::string render_mock_response(std::string_view prompt) {
  Picker p(fnv1a64(prompt));
  switch (classify_prompt(prompt)) {
    case PromptKind::HazardOurs:
      return hazard_lines(p, quoted_after(prompt, "Seed scenario:"), factor_names(prompt)) + "\n";
    case PromptKind::HazardVanilla:
      return hazard_lines(p, quoted_after(prompt, "[SEED SCENARIO]"), {}) + "\n";
    case PromptKind::HazardCot: {
      std::string seed = quoted_after(prompt, "[SEED SCENARIO]");
      std::string out = "[ANALYSIS]\n\n";
      out += "Decomposition: entities in \"" + seed + "\" and their physical vulnerabilities.\n";
      out += "Simulation: approach, grasp, transport and release are traced step by step.\n";
      out += "Prediction: the " + p.pick(kLimits) + " is the binding constraint.\n\n";
      return out + hazard_lines(p, seed, {}) + "\n";
    }
    case PromptKind::FsrSynthesis: return mock_fsrs(p, prompt);
    case PromptKind::UnitExtraction: return mock_units(prompt);
    case PromptKind::FsrAudit: return mock_audit(p);
    case PromptKind::ScenarioJudge: return mock_scenario_judgment(p, prompt);
  }
  return {};
}

ChatCompletionsBackend::ChatCompletionsBackend(ChatBackendOptions options, std::shared_ptr<http::Transport> transport,
                                               http::Sleeper sleeper)
    : options_(std::move(options)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  if (options_.endpoint.empty()) throw Error(ErrorCode::ConfigError, "llm.endpoint");
  if (options_.model.empty()) throw Error(ErrorCode::ConfigError, "llm.model");
}

std::string ChatCompletionsBackend::complete(const std::string& prompt, const GenerationParams& params) {
  json request = {
      {"model", options_.model},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", params.temperature},
      {"max_tokens", params.max_tokens},
  };
  if (params.seed) request["seed"] = *params.seed;
  auto res = http::post_with_retries(*transport_, options_.endpoint, options_.api_token, request.dump(),
                                     options_.retry, sleeper_, ErrorCode::BackendError);
  json body = json::parse(res.body, nullptr, false);
  if (body.is_discarded() || !body.contains("choices") || !body["choices"].is_array() || body["choices"].empty()) {
    throw Error(ErrorCode::BackendError, "unexpected chat response shape", res.status);
  }
  const auto& message = body["choices"][0]["message"];
  if (!message.is_object() || !message.contains("content") || !message["content"].is_string()) {
    throw Error(ErrorCode::BackendError, "chat response has no message content", res.status);
  }
  return message["content"].get<std::string>();
}

void CallLog::append(CallRecord record) {
  std::lock_guard lock(mu_);
  records_.push_back(std::move(record));
}

std::vector<CallRecord> CallLog::sorted() const {
  std::lock_guard lock(mu_);
  auto out = records_;
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.key, a.prompt_sha256) < std::tie(b.key, b.prompt_sha256);
  });
  return out;
}

std::string generate(LlmBackend& backend, const std::string& prompt, const GenerationParams& params, CallLog* log,
                     const std::string& key) {
  if (trim(prompt).empty()) throw Error(ErrorCode::InvalidArgument, "empty prompt");
  std::string response = backend.complete(prompt, params);
  if (log) log->append({key, backend.model(), sha256_hex(prompt), sha256_hex(response)});
  return response;
}

}  // namespace argos::llm
