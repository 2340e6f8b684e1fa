#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace argos::corpus {

struct SeedScenario {
  std::string id;
  std::string text;
  std::vector<std::string> tags;  // carried through to reports only

  bool operator==(const SeedScenario&) const = default;
};

enum class Dimension { UserState, Environment, Supervision, Task };

/// U -> UserState, E -> Environment, S -> Supervision, T -> Task.
std::optional<Dimension> dimension_for_letter(char letter);
std::string_view dimension_label(Dimension d);

struct RiskRule {
  std::string id;  // [A-Z][0-9]{2}
  Dimension dimension = Dimension::UserState;
  std::string name;
  std::string definition;

  /// Text embedded for attribute retrieval: name + " " + definition.
  std::string embedding_text() const { return name + " " + definition; }

  bool operator==(const RiskRule&) const = default;
};

/// Builds a rule, validating the id and deriving its dimension.
RiskRule make_rule(std::string id, std::string name, std::string definition);

class RuleBase {
 public:
  RuleBase() = default;
  /// Throws DuplicateId or EmptyCorpus.
  explicit RuleBase(std::vector<RiskRule> rules);

  const RiskRule* find(std::string_view id) const;
  const RiskRule& at(std::string_view id) const;  // throws UnknownRule
  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }

  /// Rules in ascending id order.
  auto begin() const { return rules_.begin(); }
  auto end() const { return rules_.end(); }

  bool operator==(const RuleBase&) const = default;

 private:
  std::map<std::string, RiskRule, std::less<>> rules_;
};

struct RegClause {
  std::string id;
  std::string standard;
  std::string text;

  bool operator==(const RegClause&) const = default;
};

struct RobotSpecSection {
  std::string heading;
  std::string body;

  bool operator==(const RobotSpecSection&) const = default;
};

struct RobotSpec {
  std::vector<RobotSpecSection> sections;
  std::string canonical_text;

  bool operator==(const RobotSpec&) const = default;
};

/// Renders each section as heading + "\n" + body + "\n", sections separated
/// by a blank line.
RobotSpec make_robot_spec(std::vector<RobotSpecSection> sections);

/// Lexicon alias: an extra surface form that the lexicon extractor treats as
/// a mention of `rule_id`.
struct Alias {
  std::string alias;
  std::string rule_id;

  bool operator==(const Alias&) const = default;
};

// Parsers operate on file content; `source` labels MalformedRecord details.
RuleBase parse_rules(std::string_view content, std::string_view source = "<rules>");
std::vector<SeedScenario> parse_seeds(std::string_view content, std::string_view source = "<seeds>");
std::vector<RegClause> parse_clauses(std::string_view content, std::string_view source = "<clauses>");
RobotSpec parse_robot_spec(std::string_view content, std::string_view source = "<robot_spec>");
std::vector<Alias> parse_aliases(std::string_view content, const RuleBase& rules,
                                 std::string_view source = "<aliases>");

RuleBase load_rules(const std::filesystem::path& path);
std::vector<SeedScenario> load_seeds(const std::filesystem::path& path);
std::vector<RegClause> load_clauses(const std::filesystem::path& path);
RobotSpec load_robot_spec(const std::filesystem::path& path);
std::vector<Alias> load_aliases(const std::filesystem::path& path, const RuleBase& rules);

std::string serialize_rules(const RuleBase& rules);
std::string serialize_seeds(const std::vector<SeedScenario>& seeds);
std::string serialize_clauses(const std::vector<RegClause>& clauses);
std::string serialize_robot_spec(const RobotSpec& spec);

}  // namespace argos::corpus
