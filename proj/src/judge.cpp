#include <algorithm>
#include <cmath>
#include <regex>
#include <utility>

#include "argos/error.hpp"
#include "argos/evalkit.hpp"
#include "argos/util.hpp"
#include "judge_templates.hpp"

namespace argos::evalkit {

std::string_view to_string(Rubric r) { return r == Rubric::ScenarioQuality ? "scenario_quality" : "fsr_audit"; }

namespace {

// Single left-to-right pass so substituted text is never rescanned.
std::string render(std::string_view tmpl, const std::vector<std::pair<std::string_view, std::string>>& vars) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool hit = false;
    for (const auto& [key, value] : vars) {
      if (tmpl.substr(i, key.size()) == key) {
        out += value;
        i += key.size();
        hit = true;
        break;
      }
    }
    if (!hit) out.push_back(tmpl[i++]);
  }
  return out;
}

std::string single_line(std::string_view s) {
  std::string out;
  for (const auto& l : split_lines(s)) {
    auto t = trim(l);
    if (t.empty()) continue;
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

int checked_score(const std::string& digits, const std::string& line) {
  int v = 0;
  try {
    v = std::stoi(digits);
  } catch (const std::exception&) {
    throw Error(ErrorCode::JudgeParseError, line);
  }
  if (v < 1 || v > 10) throw Error(ErrorCode::ScoreOutOfRange, line);
  return v;
}

std::string strip_stars(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != '*') out.push_back(c);
  }
  return out;
}

}  // namespace

std::string scenario_listing(const std::vector<std::string>& scenarios) {
  if (scenarios.empty()) return "(none)";
  std::string out;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (i) out += "\n";
    out += "Scenario " + std::to_string(i + 1) + ": " + single_line(scenarios[i]);
  }
  return out;
}

std::string build_scenario_judge_prompt(const std::string& seed_text, const ScenarioBlocks& blocks,
                                        const corpus::RobotSpec& spec) {
  return render(detail::kScenarioJudgeTemplate, {{"{{ROBOT_HARDWARE_SPECIFICATION_DOC}}", spec.canonical_text},
                                                 {"{seed_scenario}", seed_text},
                                                 {"{method_a_scenarios}", scenario_listing(blocks.method_a)},
                                                 {"{method_b_scenarios}", scenario_listing(blocks.method_b)},
                                                 {"{method_c_scenarios}", scenario_listing(blocks.method_c)}});
}

std::vector<JudgeResult> parse_scenario_judgment(std::string_view raw) {
  static const std::regex kSection(R"(^\s*\[Method ([ABC]) Scenario Evaluation\])");
  static const std::regex kOtherSection(R"(^\s*\[[^\]]+\]\s*$)");
  static const std::regex kEntry(R"(^\s*Scenario (\d+)\s*:\s*(.*)$)");
  static const std::regex kScores(
      R"(Physical Reliability:\s*(-?\d+)\s*pts,\s*Long-tail Risk:\s*(-?\d+)\s*pts,\s*Safety Requirements:\s*(-?\d+)\s*pts)");

  std::vector<JudgeResult> results;
  std::string method;
  struct Pending {
    std::string ordinal;
    std::string justification;
    bool open = false;
  } pending;

  auto close_pending = [&] {
    if (pending.open) throw Error(ErrorCode::JudgeParseError, "Scenario " + pending.ordinal + " has no score line");
  };

  for (const auto& original : split_lines(raw)) {
    std::string line = strip_stars(original);
    std::smatch m;
    if (std::regex_search(line, m, kSection)) {
      close_pending();
      method = m[1].str();
      continue;
    }
    if (std::regex_search(line, kOtherSection)) {
      close_pending();
      method.clear();
      continue;
    }
    if (method.empty()) continue;

    if (std::regex_match(line, m, kEntry)) {
      close_pending();
      pending = {m[1].str(), std::string(trim(m[2].str())), true};
    }
    if (line.find("Physical Reliability") == std::string::npos) continue;
    if (!std::regex_search(line, m, kScores)) throw Error(ErrorCode::JudgeParseError, std::string(trim(original)));

    JudgeResult r;
    r.method = method;
    r.rubric = Rubric::ScenarioQuality;
    r.target_id = pending.open ? pending.ordinal : std::to_string(1 + std::count_if(results.begin(), results.end(),
                                                                                   [&](const JudgeResult& x) {
                                                                                     return x.method == method;
                                                                                   }));
    r.justification = pending.justification;
    // The justification may share the line with the scores.
    if (auto cut = r.justification.find("Physical Reliability"); cut != std::string::npos) {
      r.justification = std::string(trim(r.justification.substr(0, cut)));
    }
    std::string text(trim(original));
    r.scores = {{"PR", checked_score(m[1].str(), text)},
                {"LR", checked_score(m[2].str(), text)},
                {"FSR", checked_score(m[3].str(), text)}};
    r.raw_transcript = std::string(raw);
    results.push_back(std::move(r));
    pending = {};
  }
  close_pending();
  if (results.empty()) throw Error(ErrorCode::JudgeParseError, "no score lines");
  return results;
}

std::string build_fsr_audit_prompt(const std::string& seed_text, const std::vector<fsrsynth::FSRecord>& records,
                                   const corpus::RobotSpec& spec) {
  std::string content;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i) content += "\n";
    content += fsrsynth::serialize_fsr_block(records[i]);
  }
  if (content.empty()) content = "(none)\n";
  if (content.back() == '\n') content.pop_back();
  return render(detail::kFsrAuditTemplate, {{"{{ROBOT_HARDWARE_SPECIFICATION_DOC}}", spec.canonical_text},
                                            {"{seed_scenario}", seed_text},
                                            {"{fsr_content}", content}});
}

JudgeResult parse_fsr_audit(std::string_view raw) {
  static const std::regex kRow(R"(\((CC|PRC|LRC)\)\**\s*\|\s*(-?\d+)\s*/\s*10\s*\|?(.*)$)");
  static const std::regex kRowShape(R"(^\s*\|?\s*\**[^|]*\((CC|PRC|LRC)\)\**\s*\|)");

  std::string_view body = raw;
  if (auto pos = raw.find("Final Scores"); pos != std::string_view::npos) body = raw.substr(pos);

  JudgeResult r;
  r.rubric = Rubric::FsrAudit;
  r.raw_transcript = std::string(raw);
  std::vector<std::string> notes;
  for (const auto& line : split_lines(body)) {
    std::smatch m;
    if (std::regex_search(line, m, kRow)) {
      std::string metric = m[1].str();
      if (r.scores.contains(metric)) continue;
      r.scores[metric] = checked_score(m[2].str(), std::string(trim(line)));
      std::string note(trim(m[3].str()));
      while (!note.empty() && (note.back() == '|')) note = std::string(trim(note.substr(0, note.size() - 1)));
      if (!note.empty()) notes.push_back(metric + ": " + note);
    } else if (std::regex_search(line, m, kRowShape) && !r.scores.contains(m[1].str())) {
      throw Error(ErrorCode::JudgeParseError, std::string(trim(line)));
    }
  }
  for (const char* metric : {"CC", "PRC", "LRC"}) {
    if (!r.scores.contains(metric)) throw Error(ErrorCode::MissingMetric, metric);
  }
  r.justification = join(notes, "; ");
  return r;
}

ScoreSummary summarize(std::string method, std::string metric, const std::vector<double>& values) {
  ScoreSummary s{std::move(method), std::move(metric), 0.0, 0.0, values.size()};
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::vector<ScoreSummary> aggregate(const std::vector<JudgeResult>& results) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& r : results) {
    for (const auto& [metric, score] : r.scores) groups[{r.method, metric}].push_back(score);
  }
  std::vector<ScoreSummary> out;
  for (const auto& [key, values] : groups) out.push_back(summarize(key.first, key.second, values));
  return out;
}

}  // namespace argos::evalkit
