#include "argos/corpus.hpp"

#include <regex>
#include <set>

#include "argos/error.hpp"
#include "argos/util.hpp"
#include "json.hpp"

namespace argos::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

std::optional<Dimension> dimension_for_letter(char letter) {
  switch (letter) {
    case 'U': return Dimension::UserState;
    case 'E': return Dimension::Environment;
    case 'S': return Dimension::Supervision;
    case 'T': return Dimension::Task;
    default: return std::nullopt;
  }
}

std::string_view dimension_label(Dimension d) {
  switch (d) {
    case Dimension::UserState: return "User State";
    case Dimension::Environment: return "Environment";
    case Dimension::Supervision: return "Supervision";
    case Dimension::Task: return "Task";
  }
  return "";
}

RiskRule make_rule(std::string id, std::string name, std::string definition) {
  static const std::regex kIdPattern("^[A-Z][0-9]{2}$");
  if (!std::regex_match(id, kIdPattern)) throw Error(ErrorCode::BadIdPattern, id);
  auto dim = dimension_for_letter(id.front());
  if (!dim) throw Error(ErrorCode::InconsistentDimension, id);
  if (trim(definition).empty()) throw Error(ErrorCode::MalformedRecord, id + ": empty definition");
  if (trim(name).empty()) throw Error(ErrorCode::MalformedRecord, id + ": empty name");
  return RiskRule{std::move(id), *dim, std::move(name), std::move(definition)};
}

RuleBase::RuleBase(std::vector<RiskRule> rules) {
  if (rules.empty()) throw Error(ErrorCode::EmptyCorpus, "rule base has no rules");
  for (auto& r : rules) {
    auto id = r.id;
    if (!rules_.emplace(id, std::move(r)).second) throw Error(ErrorCode::DuplicateId, id);
  }
}

const RiskRule* RuleBase::find(std::string_view id) const {
  auto it = rules_.find(id);
  return it == rules_.end() ? nullptr : &it->second;
}

const RiskRule& RuleBase::at(std::string_view id) const {
  if (const auto* r = find(id)) return *r;
  throw Error(ErrorCode::UnknownRule, std::string(id));
}

RobotSpec make_robot_spec(std::vector<RobotSpecSection> sections) {
  RobotSpec spec;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    if (i) spec.canonical_text += "\n";
    spec.canonical_text += sections[i].heading + "\n" + sections[i].body + "\n";
  }
  spec.sections = std::move(sections);
  return spec;
}

namespace {

struct Record {
  json value;
  std::size_t line = 0;
};

std::string where(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

std::vector<Record> parse_records(std::string_view content, std::string_view source) {
  if (content.size() >= 3 && static_cast<unsigned char>(content[0]) == 0xEF &&
      static_cast<unsigned char>(content[1]) == 0xBB && static_cast<unsigned char>(content[2]) == 0xBF) {
    throw Error(ErrorCode::MalformedRecord, where(source, 1) + ": byte order mark not allowed");
  }
  std::vector<Record> out;
  auto lines = split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    json j = json::parse(lines[i], nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(ErrorCode::MalformedRecord, where(source, i + 1));
    }
    out.push_back({std::move(j), i + 1});
  }
  if (out.empty()) throw Error(ErrorCode::EmptyCorpus, std::string(source));
  return out;
}

void require_keys(const Record& r, std::string_view source, std::initializer_list<std::string_view> required,
                  std::initializer_list<std::string_view> optional = {}) {
  std::set<std::string, std::less<>> allowed;
  for (auto k : required) {
    allowed.emplace(k);
    auto it = r.value.find(std::string(k));
    if (it == r.value.end() || !it->is_string()) {
      throw Error(ErrorCode::MalformedRecord, where(source, r.line) + ": missing string field '" + std::string(k) + "'");
    }
  }
  for (auto k : optional) allowed.emplace(k);
  for (const auto& item : r.value.items()) {
    if (!allowed.count(item.key())) {
      throw Error(ErrorCode::MalformedRecord, where(source, r.line) + ": unexpected field '" + item.key() + "'");
    }
  }
}

std::string str(const Record& r, const char* key) { return r.value.at(key).get<std::string>(); }

}  // namespace

RuleBase parse_rules(std::string_view content, std::string_view source) {
  std::vector<RiskRule> rules;
  std::set<std::string, std::less<>> seen;
  for (const auto& r : parse_records(content, source)) {
    require_keys(r, source, {"id", "name", "definition"});
    auto id = str(r, "id");
    if (!seen.insert(id).second) throw Error(ErrorCode::DuplicateId, id);
    rules.push_back(make_rule(id, str(r, "name"), str(r, "definition")));
  }
  return RuleBase(std::move(rules));
}

std::vector<SeedScenario> parse_seeds(std::string_view content, std::string_view source) {
  std::vector<SeedScenario> seeds;
  std::set<std::string, std::less<>> seen;
  for (const auto& r : parse_records(content, source)) {
    require_keys(r, source, {"id", "text"}, {"tags"});
    SeedScenario s{str(r, "id"), str(r, "text"), {}};
    if (trim(s.id).empty()) throw Error(ErrorCode::MalformedRecord, where(source, r.line) + ": empty id");
    if (trim(s.text).empty()) throw Error(ErrorCode::MalformedRecord, where(source, r.line) + ": empty text");
    if (auto it = r.value.find("tags"); it != r.value.end()) {
      if (!it->is_array()) throw Error(ErrorCode::MalformedRecord, where(source, r.line) + ": tags must be an array");
      for (const auto& t : *it) {
        if (!t.is_string()) throw Error(ErrorCode::MalformedRecord, where(source, r.line) + ": tag must be a string");
        s.tags.push_back(t.get<std::string>());
      }
    }
    if (!seen.insert(s.id).second) throw Error(ErrorCode::DuplicateId, s.id);
    seeds.push_back(std::move(s));
  }
  return seeds;
}

std::vector<RegClause> parse_clauses(std::string_view content, std::string_view source) {
  std::vector<RegClause> clauses;
  std::set<std::string, std::less<>> seen;
  for (const auto& r : parse_records(content, source)) {
    require_keys(r, source, {"id", "standard", "text"});
    RegClause c{str(r, "id"), str(r, "standard"), str(r, "text")};
    if (trim(c.id).empty()) throw Error(ErrorCode::MalformedRecord, where(source, r.line) + ": empty id");
    if (trim(c.text).empty()) throw Error(ErrorCode::MalformedRecord, where(source, r.line) + ": empty text");
    if (!seen.insert(c.id).second) throw Error(ErrorCode::DuplicateId, c.id);
    clauses.push_back(std::move(c));
  }
  return clauses;
}

RobotSpec parse_robot_spec(std::string_view content, std::string_view source) {
  if (trim(content).empty()) throw Error(ErrorCode::EmptyCorpus, std::string(source));
  json j = json::parse(content, nullptr, false);
  if (j.is_discarded() || !j.is_object() || j.size() != 1 || !j.contains("sections") || !j["sections"].is_array()) {
    throw Error(ErrorCode::MalformedRecord, where(source, 1) + ": expected {\"sections\":[...]}");
  }
  std::vector<RobotSpecSection> sections;
  for (const auto& s : j["sections"]) {
    if (!s.is_object() || s.size() != 2 || !s.contains("heading") || !s.contains("body") ||
        !s["heading"].is_string() || !s["body"].is_string()) {
      throw Error(ErrorCode::MalformedRecord, where(source, 1) + ": section needs exactly {heading, body}");
    }
    sections.push_back({s["heading"].get<std::string>(), s["body"].get<std::string>()});
  }
  if (sections.empty()) throw Error(ErrorCode::EmptyCorpus, std::string(source) + ": no sections");
  return make_robot_spec(std::move(sections));
}

std::vector<Alias> parse_aliases(std::string_view content, const RuleBase& rules, std::string_view source) {
  std::vector<Alias> aliases;
  for (const auto& r : parse_records(content, source)) {
    require_keys(r, source, {"alias", "rule_id"});
    Alias a{str(r, "alias"), str(r, "rule_id")};
    if (trim(a.alias).empty()) throw Error(ErrorCode::MalformedRecord, where(source, r.line) + ": empty alias");
    rules.at(a.rule_id);
    aliases.push_back(std::move(a));
  }
  return aliases;
}

RuleBase load_rules(const std::filesystem::path& path) { return parse_rules(read_file(path), path.string()); }
std::vector<SeedScenario> load_seeds(const std::filesystem::path& path) {
  return parse_seeds(read_file(path), path.string());
}
std::vector<RegClause> load_clauses(const std::filesystem::path& path) {
  return parse_clauses(read_file(path), path.string());
}
RobotSpec load_robot_spec(const std::filesystem::path& path) {
  return parse_robot_spec(read_file(path), path.string());
}
std::vector<Alias> load_aliases(const std::filesystem::path& path, const RuleBase& rules) {
  return parse_aliases(read_file(path), rules, path.string());
}

std::string serialize_rules(const RuleBase& rules) {
  std::string out;
  for (const auto& [id, r] : rules) {
    ordered_json j;
    j["id"] = r.id;
    j["name"] = r.name;
    j["definition"] = r.definition;
    out += j.dump() + "\n";
  }
  return out;
}

std::string serialize_seeds(const std::vector<SeedScenario>& seeds) {
  std::string out;
  for (const auto& s : seeds) {
    ordered_json j;
    j["id"] = s.id;
    j["text"] = s.text;
    if (!s.tags.empty()) j["tags"] = s.tags;
    out += j.dump() + "\n";
  }
  return out;
}

std::string serialize_clauses(const std::vector<RegClause>& clauses) {
  std::string out;
  for (const auto& c : clauses) {
    ordered_json j;
    j["id"] = c.id;
    j["standard"] = c.standard;
    j["text"] = c.text;
    out += j.dump() + "\n";
  }
  return out;
}

std::string serialize_robot_spec(const RobotSpec& spec) {
  ordered_json sections = ordered_json::array();
  for (const auto& s : spec.sections) {
    ordered_json j;
    j["heading"] = s.heading;
    j["body"] = s.body;
    sections.push_back(std::move(j));
  }
  ordered_json root;
  root["sections"] = std::move(sections);
  return root.dump() + "\n";
}

}  // namespace argos::corpus
