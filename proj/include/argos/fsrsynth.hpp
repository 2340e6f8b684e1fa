#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "argos/corpus.hpp"
#include "argos/embedding.hpp"
#include "argos/hazardgen.hpp"
#include "argos/llm.hpp"

namespace argos::fsrsynth {

inline constexpr double kDefaultTauReg = 0.7;

/// Ablation arms: which hazards feed synthesis and whether clauses are retrieved.
enum class Arm { Full, NoIso, IsoOnly, Vanilla };
std::string_view to_string(Arm a);
Arm parse_arm(std::string_view s);  // "full" | "no-iso" | "iso-only" | "vanilla"
hazardgen::Method source_method(Arm a);
bool uses_clauses(Arm a);

struct RetrievedClause {
  corpus::RegClause clause;
  double similarity = 0.0;
};

struct ConstraintContext {
  std::string hazard_id;
  std::vector<RetrievedClause> clauses;  // descending similarity, then id
};

/// description + " " + mechanism
std::string hazard_text(const hazardgen::HazardScenario& h);

/// Clauses whose cosine to the hazard text is strictly above `tau_reg`.
ConstraintContext retrieve_clauses(const hazardgen::HazardScenario& hazard, const std::vector<corpus::RegClause>& kb,
                                   embedding::Embedder& embedder, double tau_reg = kDefaultTauReg);

std::string build_synthesis_prompt(const hazardgen::HazardScenario& hazard, const ConstraintContext& context,
                                   const corpus::RobotSpec& spec);

struct FSRecord {
  std::string id;
  std::string hazard_id;
  std::string title;
  std::string requirement;
  std::string trigger;
  std::string exit;
  std::vector<std::string> cited_clause_ids;
  std::string raw_output;  // not persisted
  std::string prompt_sha256;

  bool operator==(const FSRecord&) const = default;
};

struct FsrParseResult {
  std::vector<FSRecord> records;
  std::vector<std::string> warnings;
};

/// Splits the response at "FSR-ID:" labels and keeps every block carrying
/// TITLE, REQUIREMENT (with "shall"), TRIGGER and EXIT. Records are numbered
/// `hazard_id`-FSR1, -FSR2, ... Citations not in `offered_ids` are dropped
/// with a warning. Throws FsrParseError when no block survives.
FsrParseResult parse_fsr(std::string_view raw, const std::string& hazard_id,
                         const std::vector<std::string>& offered_ids);

/// Labeled-field block that parse_fsr reads back.
std::string serialize_fsr_block(const FSRecord& r);

FsrParseResult synthesize(llm::LlmBackend& backend, const hazardgen::HazardScenario& hazard,
                          const ConstraintContext& context, const corpus::RobotSpec& spec,
                          const llm::GenerationParams& params, llm::CallLog* log = nullptr);

std::string serialize_fsr(const FSRecord& r);
FSRecord parse_fsr_record(std::string_view line);

}  // namespace argos::fsrsynth
