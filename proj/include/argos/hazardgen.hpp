#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "argos/corpus.hpp"
#include "argos/grounding.hpp"
#include "argos/llm.hpp"

namespace argos::hazardgen {

inline constexpr int kDefaultKMax = 3;

enum class Method { Ours, Vanilla, Cot };
std::string_view to_string(Method m);
Method parse_method(std::string_view s);  // "ours" | "vanilla" | "cot"

struct FactorCombination {
  std::string seed_id;
  std::vector<std::string> rule_ids;  // strictly ascending

  /// "U02+T01"-style key used in hazard ids.
  std::string key() const;
  bool operator==(const FactorCombination&) const = default;
};

/// All subsets of size 1..min(k_max, n) of the distinct ids, each sorted,
/// ordered by size then lexicographically.
std::vector<std::vector<std::string>> enumerate_subsets(std::vector<std::string> ids, int k_max);

std::vector<FactorCombination> enumerate_combinations(const std::vector<grounding::AttributeMatch>& matches,
                                                      int k_max = kDefaultKMax, const std::string& seed_id = {});

struct HazardScenario {
  std::string id;
  std::string seed_id;
  Method method = Method::Ours;
  std::vector<std::string> rule_ids;
  std::string description;
  std::string mechanism;
  std::string raw_output;  // not persisted
  std::string backend_model;
  std::string prompt_sha256;

  bool operator==(const HazardScenario&) const = default;
};

std::string hazard_id(const std::string& seed_id, Method method, const std::vector<std::string>& rule_ids = {});

std::string build_prompt_ours(const corpus::SeedScenario& seed, const FactorCombination& combo,
                              const corpus::RuleBase& rules, const corpus::RobotSpec& spec);
std::string build_prompt_vanilla(const corpus::SeedScenario& seed, const corpus::RobotSpec& spec);
std::string build_prompt_cot(const corpus::SeedScenario& seed, const corpus::RobotSpec& spec);

enum class ParseMode { Strict, Lenient };

struct ParsedHazard {
  std::string description;
  std::string mechanism;
};

/// Strict: exactly two non-empty lines, the second starting with
/// "Hazard mechanism:". Lenient drops everything up to and including the
/// [ANALYSIS] block and strict-parses the final two non-empty lines.
ParsedHazard parse_hazard(std::string_view raw, ParseMode mode);
ParsedHazard parse_hazard(std::string_view raw, Method method);

struct HazardJob {
  std::string id;
  std::string seed_id;
  Method method = Method::Ours;
  std::vector<std::string> rule_ids;
  std::string prompt;
};

std::vector<HazardJob> plan_ours(const corpus::SeedScenario& seed, const std::vector<FactorCombination>& combos,
                                 const corpus::RuleBase& rules, const corpus::RobotSpec& spec);
HazardJob plan_baseline(const corpus::SeedScenario& seed, Method method, const corpus::RobotSpec& spec);

/// Runs the jobs under the in-flight limit; output order follows `jobs`.
std::vector<HazardScenario> run_jobs(llm::LlmBackend& backend, const std::vector<HazardJob>& jobs,
                                     const llm::GenerationParams& params, std::size_t max_in_flight,
                                     llm::CallLog* log = nullptr);

std::string serialize_hazard(const HazardScenario& h);
HazardScenario parse_hazard_record(std::string_view line);

}  // namespace argos::hazardgen
