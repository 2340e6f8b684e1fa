#include "argos/fsrsynth.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <set>

#include "argos/error.hpp"
#include "argos/util.hpp"
#include "json.hpp"

namespace argos::fsrsynth {

std::string_view to_string(Arm a) {
  switch (a) {
    case Arm::Full: return "full";
    case Arm::NoIso: return "no-iso";
    case Arm::IsoOnly: return "iso-only";
    case Arm::Vanilla: return "vanilla";
  }
  return "?";
}

Arm parse_arm(std::string_view s) {
  if (s == "full") return Arm::Full;
  if (s == "no-iso") return Arm::NoIso;
  if (s == "iso-only") return Arm::IsoOnly;
  if (s == "vanilla") return Arm::Vanilla;
  throw Error(ErrorCode::InvalidArgument, "unknown arm '" + std::string(s) + "'");
}

hazardgen::Method source_method(Arm a) {
  return (a == Arm::Full || a == Arm::NoIso) ? hazardgen::Method::Ours : hazardgen::Method::Vanilla;
}

bool uses_clauses(Arm a) { return a == Arm::Full || a == Arm::IsoOnly; }

std::string hazard_text(const hazardgen::HazardScenario& h) { return h.description + " " + h.mechanism; }

ConstraintContext retrieve_clauses(const hazardgen::HazardScenario& hazard, const std::vector<corpus::RegClause>& kb,
                                   embedding::Embedder& embedder, double tau_reg) {
  if (!(tau_reg > -1.0 && tau_reg <= 1.0)) throw Error(ErrorCode::InvalidArgument, "tau_reg must lie in (-1, 1]");
  if (kb.empty()) throw Error(ErrorCode::EmptyCorpus, "clause base is empty");

  std::vector<std::string> texts{hazard_text(hazard)};
  for (const auto& c : kb) texts.push_back(c.text);
  auto vecs = embedder.embed_all(texts);

  ConstraintContext ctx{hazard.id, {}};
  for (std::size_t i = 0; i < kb.size(); ++i) {
    double sim = embedding::cosine(vecs[0], vecs[i + 1]);
    if (sim > tau_reg) ctx.clauses.push_back({kb[i], sim});
  }
  std::sort(ctx.clauses.begin(), ctx.clauses.end(), [](const RetrievedClause& a, const RetrievedClause& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.clause.id < b.clause.id;
  });
  return ctx;
}

std::string build_synthesis_prompt(const hazardgen::HazardScenario& hazard, const ConstraintContext& context,
                                   const corpus::RobotSpec& spec) {
  std::string p =
      "[FSR SYNTHESIS TASK]\n"
      "You are a functional safety engineer deriving Functional Safety Requirements (FSRs) for a home service "
      "robot from a single hazard scenario.\n\n";
  p += "[HAZARD SCENARIO]\n";
  p += "Hazard ID: " + hazard.id + "\n";
  p += "Description: " + hazard.description + "\n";
  p += "Hazard mechanism: " + hazard.mechanism + "\n\n";

  p += "[RETRIEVED REGULATORY CLAUSES]\n";
  if (context.clauses.empty()) {
    p += "No regulatory clauses retrieved. Ground every requirement directly in the robot hardware specification "
         "below.\n";
  }
  for (const auto& rc : context.clauses) {
    p += "[" + rc.clause.id + "] (" + rc.clause.standard + ") " + rc.clause.text + "\n";
  }
  p += "\n[ROBOT HARDWARE SPECIFICATION]\n";
  p += spec.canonical_text + "\n";

  p +=
      "[INSTRUCTIONS]\n"
      "1. Derive functional safety requirements that prevent or mitigate the hazard mechanism above.\n"
      "2. Perform a counterfactual feasibility check: for every standard mitigation suggested by the clauses or by "
      "common practice, ask whether it would still prevent this hazard given the robot's hardware limits (sensing "
      "ranges, blind zones, speed, acceleration, payload). Drop or adapt any mitigation the hardware cannot "
      "deliver.\n"
      "3. Write each requirement as a normative \"shall\" statement that stays inside the hardware specification.\n"
      "4. Give the entry condition (TRIGGER) and the exit or recovery condition (EXIT) of each safety state.\n"
      "5. Cite only clause ids listed under [RETRIEVED REGULATORY CLAUSES]; write \"none\" when no clause applies.\n"
      "\n"
      "[OUTPUT FORMAT]\n"
      "One block per requirement, blocks separated by a blank line:\n"
      "FSR-ID: <sequential id>\n"
      "TITLE: <one line>\n"
      "REQUIREMENT: <The robot shall ...>\n"
      "TRIGGER: <entry condition>\n"
      "EXIT: <exit or recovery condition>\n"
      "CITES: <comma-separated clause ids, or none>\n";
  return p;
}

namespace {

const std::regex& label_regex() {
  static const std::regex re(R"(^\s*[-*_]*\s*(FSR-ID|TITLE|REQUIREMENT|TRIGGER|EXIT|CITES)\s*[*_]*\s*:\s*[*_]*\s*(.*)$)",
                             std::regex::icase);
  return re;
}

std::vector<std::string> parse_cites(std::string_view value) {
  std::vector<std::string> ids;
  std::string token;
  auto flush = [&] {
    std::string t(trim(token));
    token.clear();
    while (!t.empty() && (t.front() == '[' || t.front() == '(')) t.erase(t.begin());
    while (!t.empty() && (t.back() == ']' || t.back() == ')' || t.back() == '.')) t.pop_back();
    if (t.empty()) return;
    auto lower = to_lower_ascii(t);
    if (lower == "none" || lower == "n/a") return;
    if (std::find(ids.begin(), ids.end(), t) == ids.end()) ids.push_back(t);
  };
  for (char c : value) {
    if (c == ',' || c == ';' || c == ' ' || c == '\t') {
      flush();
    } else {
      token.push_back(c);
    }
  }
  flush();
  return ids;
}

bool has_shall(const std::string& text) {
  static const std::regex re(R"(\bshall\b)", std::regex::icase);
  return std::regex_search(text, re);
}

}  // namespace

FsrParseResult parse_fsr(std::string_view raw, const std::string& hazard_id,
                         const std::vector<std::string>& offered_ids) {
  using Block = std::map<std::string, std::string>;
  std::vector<Block> blocks;
  std::string last_label;
  for (const auto& line : split_lines(raw)) {
    std::smatch m;
    if (std::regex_match(line, m, label_regex())) {
      std::string label = m[1].str();
      std::transform(label.begin(), label.end(), label.begin(), [](unsigned char c) { return std::toupper(c); });
      std::string value(trim(m[2].str()));
      while (!value.empty() && (value.back() == '*' || value.back() == '_')) value.pop_back();
      if (label == "FSR-ID") blocks.emplace_back();
      if (blocks.empty()) continue;
      blocks.back().try_emplace(label, std::string(trim(value)));
      last_label = label;
    } else if (!blocks.empty() && !last_label.empty() && !trim(line).empty()) {
      auto& field = blocks.back()[last_label];
      field += (field.empty() ? "" : " ") + std::string(trim(line));
    }
  }

  FsrParseResult result;
  const std::set<std::string> offered(offered_ids.begin(), offered_ids.end());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto& block = blocks[b];
    std::string where = hazard_id + " block " + std::to_string(b + 1);
    std::string missing;
    for (const char* label : {"TITLE", "REQUIREMENT", "TRIGGER", "EXIT"}) {
      auto it = block.find(label);
      if (it == block.end() || it->second.empty()) missing += std::string(missing.empty() ? "" : ",") + label;
    }
    if (!missing.empty()) {
      result.warnings.push_back(where + ": missing " + missing);
      continue;
    }
    if (!has_shall(block["REQUIREMENT"])) {
      result.warnings.push_back(where + ": requirement has no 'shall'");
      continue;
    }
    FSRecord r;
    r.hazard_id = hazard_id;
    r.id = hazard_id + "-FSR" + std::to_string(result.records.size() + 1);
    r.title = block["TITLE"];
    r.requirement = block["REQUIREMENT"];
    r.trigger = block["TRIGGER"];
    r.exit = block["EXIT"];
    for (auto& id : parse_cites(block["CITES"])) {
      if (offered.contains(id)) {
        r.cited_clause_ids.push_back(std::move(id));
      } else {
        result.warnings.push_back(r.id + ": dropped citation '" + id + "' not in retrieved clauses");
      }
    }
    r.raw_output = std::string(raw);
    result.records.push_back(std::move(r));
  }
  if (result.records.empty()) throw Error(ErrorCode::FsrParseError, std::string(raw));
  return result;
}

std::string serialize_fsr_block(const FSRecord& r) {
  std::string out = "FSR-ID: " + r.id + "\n";
  out += "TITLE: " + r.title + "\n";
  out += "REQUIREMENT: " + r.requirement + "\n";
  out += "TRIGGER: " + r.trigger + "\n";
  out += "EXIT: " + r.exit + "\n";
  out += "CITES: " + (r.cited_clause_ids.empty() ? std::string("none") : join(r.cited_clause_ids, ", ")) + "\n";
  return out;
}

FsrParseResult synthesize(llm::LlmBackend& backend, const hazardgen::HazardScenario& hazard,
                          const ConstraintContext& context, const corpus::RobotSpec& spec,
                          const llm::GenerationParams& params, llm::CallLog* log) {
  auto prompt = build_synthesis_prompt(hazard, context, spec);
  auto raw = llm::generate(backend, prompt, params, log, hazard.id);
  std::vector<std::string> offered;
  for (const auto& rc : context.clauses) offered.push_back(rc.clause.id);
  auto result = parse_fsr(raw, hazard.id, offered);
  auto digest = sha256_hex(prompt);
  for (auto& r : result.records) r.prompt_sha256 = digest;
  return result;
}

std::string serialize_fsr(const FSRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["hazard_id"] = r.hazard_id;
  j["title"] = r.title;
  j["requirement"] = r.requirement;
  j["trigger"] = r.trigger;
  j["exit"] = r.exit;
  j["cited_clause_ids"] = r.cited_clause_ids;
  j["prompt_sha256"] = r.prompt_sha256;
  return j.dump();
}

FSRecord parse_fsr_record(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::MalformedRecord, std::string(line));
  try {
    FSRecord r;
    r.id = j.at("id").get<std::string>();
    r.hazard_id = j.at("hazard_id").get<std::string>();
    r.title = j.at("title").get<std::string>();
    r.requirement = j.at("requirement").get<std::string>();
    r.trigger = j.at("trigger").get<std::string>();
    r.exit = j.at("exit").get<std::string>();
    r.cited_clause_ids = j.at("cited_clause_ids").get<std::vector<std::string>>();
    r.prompt_sha256 = j.at("prompt_sha256").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::MalformedRecord, std::string(line));
  }
}

}  // namespace argos::fsrsynth
