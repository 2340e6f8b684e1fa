#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "argos/corpus.hpp"
#include "argos/embedding.hpp"
#include "argos/llm.hpp"

namespace argos::grounding {

inline constexpr double kDefaultTauAttr = 0.7;

enum class UnitSource { Lexicon, Llm };
std::string_view to_string(UnitSource s);

struct SemanticUnit {
  std::string text;
  UnitSource source = UnitSource::Lexicon;

  bool operator==(const SemanticUnit&) const = default;
};

struct AttributeMatch {
  SemanticUnit unit;
  std::string rule_id;
  double similarity = 0.0;  // always > the threshold used to produce it

  bool operator==(const AttributeMatch&) const = default;
};

/// Whole-word, case-insensitive matches of rule names and aliases in the seed
/// text. Units keep the seed's surface form, deduplicated case-insensitively
/// in order of first occurrence.
std::vector<SemanticUnit> extract_units_lexicon(const corpus::SeedScenario& seed, const corpus::RuleBase& rules,
                                                const std::vector<corpus::Alias>& aliases = {});

std::string build_extraction_prompt(const corpus::SeedScenario& seed);

/// Accepts one short item per line (bullets and numbering stripped). Throws
/// LlmExtractionUnparseable when nothing list-like is found.
std::vector<std::string> parse_unit_list(std::string_view raw);

std::vector<SemanticUnit> extract_units_llm(const corpus::SeedScenario& seed, llm::LlmBackend& backend,
                                            const llm::GenerationParams& params, llm::CallLog* log = nullptr);

/// Emits one match for every (unit, rule) pair whose cosine between the unit
/// text and the rule's embedding text is strictly above `tau_attr`. Ordered by
/// unit order, then descending similarity, then ascending rule id.
std::vector<AttributeMatch> match_attributes(const std::vector<SemanticUnit>& units, const corpus::RuleBase& rules,
                                             embedding::Embedder& embedder, double tau_attr = kDefaultTauAttr);

}  // namespace argos::grounding
