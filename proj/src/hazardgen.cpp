#include "argos/hazardgen.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "argos/error.hpp"
#include "argos/parallel.hpp"
#include "argos/util.hpp"
#include "json.hpp"

namespace argos::hazardgen {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Ours: return "ours";
    case Method::Vanilla: return "vanilla";
    case Method::Cot: return "cot";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  if (s == "ours") return Method::Ours;
  if (s == "vanilla") return Method::Vanilla;
  if (s == "cot") return Method::Cot;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(s) + "'");
}

std::string FactorCombination::key() const { return join(rule_ids, "+"); }

std::vector<std::vector<std::string>> enumerate_subsets(std::vector<std::string> ids, int k_max) {
  if (k_max < 1) throw Error(ErrorCode::InvalidArgument, "k_max must be >= 1");
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const std::size_t n = ids.size();
  const std::size_t kmax = std::min<std::size_t>(static_cast<std::size_t>(k_max), n);

  std::vector<std::vector<std::string>> out;
  for (std::size_t k = 1; k <= kmax; ++k) {
    // Index tuples in lexicographic order: idx[0] < idx[1] < ... < idx[k-1].
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      std::vector<std::string> combo;
      for (auto i : idx) combo.push_back(ids[i]);
      out.push_back(std::move(combo));
      std::size_t pos = k;
      while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t i = pos; i < k; ++i) idx[i] = idx[i - 1] + 1;
    }
  }
  return out;
}

std::vector<FactorCombination> enumerate_combinations(const std::vector<grounding::AttributeMatch>& matches,
                                                      int k_max, const std::string& seed_id) {
  std::vector<std::string> ids;
  for (const auto& m : matches) ids.push_back(m.rule_id);
  std::vector<FactorCombination> out;
  for (auto& subset : enumerate_subsets(std::move(ids), k_max)) out.push_back({seed_id, std::move(subset)});
  return out;
}

std::string hazard_id(const std::string& seed_id, Method method, const std::vector<std::string>& rule_ids) {
  std::string id = seed_id + "-" + std::string(to_string(method));
  if (method == Method::Ours) id += "-" + join(rule_ids, "+");
  return id;
}

namespace {

constexpr std::string_view kOursRole =
    "[SYSTEM ROLE]\n"
    "You are a safety engineer identifying how SPECIFIC, REAL-WORLD risk conditions can lead to harm during home "
    "robot tasks.\n"
    "\n"
    "Generate a scenario where a hazard occurs due to the interaction of the specified risk factors.\n"
    "\n";

constexpr std::string_view kOursConstraintsHead =
    "[CONSTRAINTS FOR SCENARIO GENERATION]\n"
    "\n"
    "1.The scenario must remain strictly within the semantic boundary defined by the seed scenario.\n"
    "2.Only entities explicitly mentioned in the seed or logically indispensable for the task may be used.\n"
    "3.No unmentioned object, state, event, or environmental condition may be introduced under any circumstance.\n";

constexpr std::string_view kOursConstraintsTail =
    "6.Robots will not have emotions.\n"
    "7.[STRICT CLOSED WORLD] ROBOT CAPABILITIES: Strictly control the robot's behavior within the defined "
    "capabilities.\n"
    "8.STRICT ADHERENCE TO SPECIFICATIONS: Strictly enforce the union of all sensor coverage ranges defined in the "
    "robot capabilities.\n"
    "9.[CRITICAL] MAINTAIN PHYSICAL REALISM.\n"
    "10.[LOGICAL CONSISTENCY] CAUSAL VALIDITY (DETECTION != PREVENTION).\n"
    "[OUTPUT FORMAT]\n"
    "EXACTLY TWO LINES:\n";

constexpr std::string_view kOursLine2 =
    "Line 2: \"Hazard mechanism: [one sentence explaining the coupling effect].\"\n";

constexpr std::string_view kBaselineHead =
    "[SYSTEM ROLE]\n"
    "You are a safety engineer identifying how real-world conditions can lead to harm during home robot tasks.\n"
    "\n"
    "Generate a scenario where a hazard occurs due to potential risks inherent in the task or environment.\n"
    "\n"
    "[ROBOT CAPABILITIES]\n";

constexpr std::string_view kBaselineConstraints =
    "[CONSTRAINTS]\n"
    "\n"
    "1.The scenario must remain strictly within the semantic boundary defined by the seed scenario.\n"
    "2.Only entities explicitly mentioned in the seed or logically indispensable for the task may be used.\n"
    "3.Robots will not have emotions similar to humans, such as fear or anxiety, startle.\n"
    "4.No unmentioned object, state, event, or environmental condition may be introduced under any circumstance.\n"
    "5.STRICT ADHERENCE TO SPECIFICATIONS: Strictly enforce the union of all sensor coverage ranges defined in the "
    "robot capabilities.\n"
    "6.[STRICT CLOSED WORLD] ROBOT CAPABILITIES: Strictly control the robot's behavior within the defined "
    "capabilities.\n"
    "7.[CRITICAL] MAINTAIN PHYSICAL REALISM.\n"
    "8.[LOGICAL CONSISTENCY] CAUSAL VALIDITY (DETECTION != PREVENTION).\n";

constexpr std::string_view kBaselineOutput =
    "[OUTPUT FORMAT]\n"
    "Line 1: 2-3 sentences describing the robot's task execution and how the two factors combined to cause the "
    "hazard.\n"
    "Line 2: \"Hazard mechanism: [one sentence explaining the coupling effect].\n";

constexpr std::string_view kReasoning =
    "[REASONING INSTRUCTIONS]\n"
    "Before generating the final result, you must analyze the seed scenario step-by-step inside an [ANALYSIS] "
    "block:\n"
    "\n"
    "Entity & Vulnerability Analysis (Decomposition):\n"
    "\n"
    "Extract all key Entities (Who/What), Actions (Task), and Environmental Context.\n"
    "Vulnerability Inference: Analyze inherent physical limitations or vulnerabilities.\n"
    "Micro-Action Simulation (Step-by-Step Trace):\n"
    "\n"
    "Break down the robot's task into a sequence of logical micro-actions.\n"
    "Simulate the physical interaction between the robot and identified entities.\n"
    "Consequence Analysis:\n"
    "\n"
    "Identify identifies accident chains.\n"
    "[OUTPUT FORMAT]\n"
    "[ANALYSIS]\n"
    "\n"
    "Decomposition: [Entities, Context, and vulnerabilities...]\n"
    "Simulation: [Step-by-step trace...]\n"
    "Prediction: [Logical deduction...]\n";

constexpr std::array<std::string_view, 11> kCountWords = {"ZERO", "ONE", "TWO",   "THREE", "FOUR", "FIVE",
                                                          "SIX",  "SEVEN", "EIGHT", "NINE",  "TEN"};

std::string count_word(std::size_t k) {
  return k < kCountWords.size() ? std::string(kCountWords[k]) : std::to_string(k);
}

std::string factor_letter(std::size_t i) { return std::string(1, static_cast<char>('A' + i)); }

std::string factor_list(std::size_t k) {
  std::string out;
  for (std::size_t i = 0; i < k; ++i) {
    if (i > 0) out += (i + 1 == k) ? " and " : ", ";
    out += "Factor " + factor_letter(i);
  }
  return out;
}

std::string baseline_common(const corpus::SeedScenario& seed, const corpus::RobotSpec& spec) {
  std::string p(kBaselineHead);
  p += spec.canonical_text + "\n";
  p += "\n[SEED SCENARIO]\n\"" + seed.text + "\"\n\n";
  p += kBaselineConstraints;
  return p;
}

}  // namespace

std::string build_prompt_ours(const corpus::SeedScenario& seed, const FactorCombination& combo,
                              const corpus::RuleBase& rules, const corpus::RobotSpec& spec) {
  const std::size_t k = combo.rule_ids.size();
  if (k == 0 || k > 26) throw Error(ErrorCode::InvalidArgument, "combination size must be in [1, 26]");
  std::vector<const corpus::RiskRule*> factors;
  for (const auto& id : combo.rule_ids) factors.push_back(&rules.at(id));

  std::string p(kOursRole);
  p += spec.canonical_text + "\n\n";
  p += "[RISK INTERACTION]\n";
  if (k == 1) {
    p += "The hazard must be caused by the single specified risk factor.\n";
    p += "Condition: The hazard occurs because this factor is present.\n";
  } else {
    p += "The hazard must be caused by the INTERACTION of " + count_word(k) + " specific risk factors.\n";
    p += k == 2 ? std::string("Condition: The hazard occurs because BOTH factors are present simultaneously.\n")
                : "Condition: The hazard occurs because all " + count_word(k) +
                      " factors are present simultaneously.\n";
  }
  p += "\n";
  for (std::size_t i = 0; i < k; ++i) {
    const auto& r = *factors[i];
    p += "Risk Factor " + factor_letter(i) + ": " + r.name + " (" + std::string(corpus::dimension_label(r.dimension)) +
         ")\n";
    p += "Definition: \"" + r.definition + "\"\n\n";
  }
  p += "Seed scenario: \"" + seed.text + "\"\n\n";
  p += kOursConstraintsHead;
  if (k == 1) {
    p += "4.The root cause must be the effect of Factor A.\n";
    p += "5.If the factor is removed, the accident must become impossible.\n";
  } else {
    p += "4.The root cause must be the coupling effect of " + factor_list(k) + ".\n";
    p += k == 2 ? "5.If one factor is removed, the accident must become impossible.\n"
                : "5.If any one factor is removed, the accident must become impossible.\n";
  }
  p += kOursConstraintsTail;
  if (k == 1) {
    p += "Line 1: 2-3 sentences describing the robot's task execution and how the factor caused the hazard.\n";
  } else {
    p += "Line 1: 2-3 sentences describing the robot's task execution and how the " + to_lower_ascii(count_word(k)) +
         " factors combined to cause the hazard.\n";
  }
  p += kOursLine2;
  return p;
}

std::string build_prompt_vanilla(const corpus::SeedScenario& seed, const corpus::RobotSpec& spec) {
  return baseline_common(seed, spec) + "\n" + std::string(kBaselineOutput);
}

std::string build_prompt_cot(const corpus::SeedScenario& seed, const corpus::RobotSpec& spec) {
  return baseline_common(seed, spec) + std::string(kReasoning) + std::string(kBaselineOutput);
}

namespace {

constexpr std::string_view kMechanismPrefix = "Hazard mechanism:";

// Tolerates the "Line 1:" / "Line 2:" labels and wrapping quotes that models
// copy from the format block.
std::string clean_line(std::string_view line) {
  line = trim(line);
  if (starts_with_ci(line, "line 1:") || starts_with_ci(line, "line 2:")) line = trim(line.substr(7));
  if (line.size() >= 2 && line.front() == '"' && line.back() == '"') line = trim(line.substr(1, line.size() - 2));
  else if (!line.empty() && line.front() == '"' && starts_with_ci(line.substr(1), kMechanismPrefix)) line = line.substr(1);
  return std::string(line);
}

ParsedHazard parse_two(const std::vector<std::string>& lines, std::string_view raw) {
  std::string first = clean_line(lines[0]);
  std::string second = clean_line(lines[1]);
  if (!starts_with_ci(second, kMechanismPrefix)) throw Error(ErrorCode::MissingMechanismPrefix, std::string(raw));
  std::string mechanism(trim(std::string_view(second).substr(kMechanismPrefix.size())));
  if (first.empty() || mechanism.empty()) throw Error(ErrorCode::EmptyResponse, std::string(raw));
  return {std::move(first), std::move(mechanism)};
}

std::vector<std::string> non_empty_lines(std::string_view text) {
  std::vector<std::string> out;
  for (auto& l : split_lines(text)) {
    if (!trim(l).empty()) out.push_back(std::move(l));
  }
  return out;
}

}  // namespace

ParsedHazard parse_hazard(std::string_view raw, ParseMode mode) {
  auto lines = non_empty_lines(raw);
  if (lines.empty()) throw Error(ErrorCode::EmptyResponse, std::string(raw));

  if (mode == ParseMode::Strict) {
    if (lines.size() != 2) throw Error(ErrorCode::WrongLineCount, std::string(raw));
    return parse_two(lines, raw);
  }

  auto marker = std::find_if(lines.begin(), lines.end(),
                             [](const std::string& l) { return trim(l).starts_with("[ANALYSIS]"); });
  std::vector<std::string> tail(marker == lines.end() ? lines.begin() : marker + 1, lines.end());
  if (tail.empty()) throw Error(ErrorCode::EmptyResponse, std::string(raw));
  if (!starts_with_ci(clean_line(tail.back()), kMechanismPrefix)) {
    throw Error(ErrorCode::MissingMechanismPrefix, std::string(raw));
  }
  if (tail.size() < 2) throw Error(ErrorCode::WrongLineCount, std::string(raw));
  return parse_two({tail[tail.size() - 2], tail.back()}, raw);
}

ParsedHazard parse_hazard(std::string_view raw, Method method) {
  return parse_hazard(raw, method == Method::Cot ? ParseMode::Lenient : ParseMode::Strict);
}

std::vector<HazardJob> plan_ours(const corpus::SeedScenario& seed, const std::vector<FactorCombination>& combos,
                                 const corpus::RuleBase& rules, const corpus::RobotSpec& spec) {
  std::vector<HazardJob> jobs;
  for (const auto& c : combos) {
    jobs.push_back({hazard_id(seed.id, Method::Ours, c.rule_ids), seed.id, Method::Ours, c.rule_ids,
                    build_prompt_ours(seed, c, rules, spec)});
  }
  return jobs;
}

HazardJob plan_baseline(const corpus::SeedScenario& seed, Method method, const corpus::RobotSpec& spec) {
  if (method == Method::Ours) throw Error(ErrorCode::InvalidArgument, "plan_baseline needs vanilla or cot");
  auto prompt = method == Method::Cot ? build_prompt_cot(seed, spec) : build_prompt_vanilla(seed, spec);
  return {hazard_id(seed.id, method), seed.id, method, {}, std::move(prompt)};
}

std::vector<HazardScenario> run_jobs(llm::LlmBackend& backend, const std::vector<HazardJob>& jobs,
                                     const llm::GenerationParams& params, std::size_t max_in_flight,
                                     llm::CallLog* log) {
  return parallel_map(jobs.size(), max_in_flight, [&](std::size_t i) {
    const auto& job = jobs[i];
    auto raw = llm::generate(backend, job.prompt, params, log, job.id);
    ParsedHazard parsed;
    try {
      parsed = parse_hazard(raw, job.method);
    } catch (const Error& e) {
      throw Error(e.code(), job.id + ": " + e.detail());
    }
    return HazardScenario{job.id,
                          job.seed_id,
                          job.method,
                          job.rule_ids,
                          std::move(parsed.description),
                          std::move(parsed.mechanism),
                          std::move(raw),
                          backend.model(),
                          sha256_hex(job.prompt)};
  });
}

std::string serialize_hazard(const HazardScenario& h) {
  nlohmann::ordered_json j;
  j["id"] = h.id;
  j["seed_id"] = h.seed_id;
  j["method"] = to_string(h.method);
  j["rule_ids"] = h.rule_ids;
  j["description"] = h.description;
  j["mechanism"] = h.mechanism;
  j["backend_model"] = h.backend_model;
  j["prompt_sha256"] = h.prompt_sha256;
  return j.dump();
}

HazardScenario parse_hazard_record(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::MalformedRecord, std::string(line));
  try {
    HazardScenario h;
    h.id = j.at("id").get<std::string>();
    h.seed_id = j.at("seed_id").get<std::string>();
    h.method = parse_method(j.at("method").get<std::string>());
    h.rule_ids = j.at("rule_ids").get<std::vector<std::string>>();
    h.description = j.at("description").get<std::string>();
    h.mechanism = j.at("mechanism").get<std::string>();
    h.backend_model = j.at("backend_model").get<std::string>();
    h.prompt_sha256 = j.at("prompt_sha256").get<std::string>();
    return h;
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::MalformedRecord, std::string(line));
  }
}

}  // namespace argos::hazardgen
