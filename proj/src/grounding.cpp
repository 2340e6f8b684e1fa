#include "argos/grounding.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <tuple>

#include "argos/error.hpp"
#include "argos/util.hpp"

namespace argos::grounding {

std::string_view to_string(UnitSource s) { return s == UnitSource::Lexicon ? "lexicon" : "llm"; }

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

struct Hit {
  std::size_t pos;
  std::size_t len;
};

void find_whole_word(const std::string& haystack_lower, const std::string& needle_lower, std::vector<Hit>& hits) {
  if (needle_lower.empty()) return;
  for (auto pos = haystack_lower.find(needle_lower); pos != std::string::npos;
       pos = haystack_lower.find(needle_lower, pos + 1)) {
    std::size_t end = pos + needle_lower.size();
    bool left_ok = pos == 0 || !is_word_char(haystack_lower[pos - 1]);
    bool right_ok = end == haystack_lower.size() || !is_word_char(haystack_lower[end]);
    if (left_ok && right_ok) hits.push_back({pos, needle_lower.size()});
  }
}

std::vector<SemanticUnit> dedup(std::vector<SemanticUnit> units) {
  std::set<std::string> seen;
  std::vector<SemanticUnit> out;
  for (auto& u : units) {
    if (seen.insert(to_lower_ascii(u.text)).second) out.push_back(std::move(u));
  }
  return out;
}

}  // namespace

std::vector<SemanticUnit> extract_units_lexicon(const corpus::SeedScenario& seed, const corpus::RuleBase& rules,
                                                const std::vector<corpus::Alias>& aliases) {
  const std::string lower = to_lower_ascii(seed.text);
  std::vector<Hit> hits;
  for (const auto& [id, rule] : rules) find_whole_word(lower, to_lower_ascii(trim(rule.name)), hits);
  for (const auto& a : aliases) find_whole_word(lower, to_lower_ascii(trim(a.alias)), hits);

  // Leftmost first; at the same position the longer phrase wins the order.
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    return std::tie(a.pos, b.len) < std::tie(b.pos, a.len);
  });
  std::vector<SemanticUnit> units;
  for (const auto& h : hits) units.push_back({seed.text.substr(h.pos, h.len), UnitSource::Lexicon});
  return dedup(std::move(units));
}

std::string build_extraction_prompt(const corpus::SeedScenario& seed) {
  return "From the seed scenario below, list the risk-relevant entities and tasks, one per line.\n"
         "Use short noun or verb phrases taken from the scenario. Do not add explanations.\n\n"
         "Seed scenario: \"" + seed.text + "\"\n";
}

namespace {

std::string_view strip_list_marker(std::string_view line) {
  line = trim(line);
  if (line.starts_with("\u2022")) return trim(line.substr(3));
  if (line.starts_with("-") || line.starts_with("*")) return trim(line.substr(1));
  std::size_t digits = 0;
  while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
  if (digits > 0 && digits < line.size() && (line[digits] == '.' || line[digits] == ')')) {
    return trim(line.substr(digits + 1));
  }
  return line;
}

}  // namespace

std::vector<std::string> parse_unit_list(std::string_view raw) {
  std::vector<std::string> items;
  std::set<std::string> seen;
  for (auto line : split_lines(raw)) {
    std::string item(strip_list_marker(line));
    if (item.size() >= 2 && item.front() == '"' && item.back() == '"') item = item.substr(1, item.size() - 2);
    if (item.empty()) continue;
    auto words = std::count(item.begin(), item.end(), ' ') + 1;
    if (words > 6 || item.size() > 60) throw Error(ErrorCode::LlmExtractionUnparseable, std::string(raw));
    if (seen.insert(to_lower_ascii(item)).second) items.push_back(std::move(item));
  }
  if (items.empty()) throw Error(ErrorCode::LlmExtractionUnparseable, std::string(raw));
  return items;
}

std::vector<SemanticUnit> extract_units_llm(const corpus::SeedScenario& seed, llm::LlmBackend& backend,
                                            const llm::GenerationParams& params, llm::CallLog* log) {
  auto raw = llm::generate(backend, build_extraction_prompt(seed), params, log, seed.id);
  std::vector<SemanticUnit> units;
  for (auto& item : parse_unit_list(raw)) units.push_back({std::move(item), UnitSource::Llm});
  return units;
}

std::vector<AttributeMatch> match_attributes(const std::vector<SemanticUnit>& units, const corpus::RuleBase& rules,
                                             embedding::Embedder& embedder, double tau_attr) {
  if (!(tau_attr > -1.0 && tau_attr <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "tau_attr must lie in (-1, 1]");
  }
  if (rules.empty()) throw Error(ErrorCode::EmptyCorpus, "rule base is empty");
  if (units.empty()) return {};

  std::vector<std::string> unit_texts;
  for (const auto& u : units) unit_texts.push_back(u.text);
  std::vector<const corpus::RiskRule*> rule_list;
  std::vector<std::string> rule_texts;
  for (const auto& [id, r] : rules) {
    rule_list.push_back(&r);
    rule_texts.push_back(r.embedding_text());
  }
  auto unit_vecs = embedder.embed_all(unit_texts);
  auto rule_vecs = embedder.embed_all(rule_texts);

  std::vector<AttributeMatch> out;
  for (std::size_t i = 0; i < units.size(); ++i) {
    std::vector<AttributeMatch> row;
    for (std::size_t j = 0; j < rule_list.size(); ++j) {
      double sim = embedding::cosine(unit_vecs[i], rule_vecs[j]);
      if (sim > tau_attr) row.push_back({units[i], rule_list[j]->id, sim});
    }
    std::sort(row.begin(), row.end(), [](const AttributeMatch& a, const AttributeMatch& b) {
      if (a.similarity != b.similarity) return a.similarity > b.similarity;
      return a.rule_id < b.rule_id;
    });
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

}  // namespace argos::grounding
