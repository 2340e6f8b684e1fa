#include "argos/report.hpp"

#include <algorithm>
#include <cstdio>

#include "argos/error.hpp"
#include "json.hpp"

namespace argos::evalkit {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string opt_fixed(const std::optional<double>& v, int digits) { return v ? fixed(*v, digits) : "undefined"; }

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Display width in code points, so "±" counts as one column.
std::size_t width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

const ScoreSummary* find_summary(const std::vector<ScoreSummary>& ss, std::string_view method, std::string_view metric) {
  for (const auto& s : ss) {
    if (s.method == method && s.metric == metric) return &s;
  }
  return nullptr;
}

Table grid(const std::vector<ScoreSummary>& ss, const std::vector<std::pair<std::string, std::string>>& rows,
           const std::vector<std::string>& metrics, const std::string& row_title) {
  Table t;
  t.header.push_back(row_title);
  for (const auto& m : metrics) t.header.push_back(m);
  t.header.push_back("n");
  for (const auto& [key, display] : rows) {
    std::vector<std::string> row{display};
    std::size_t n = 0;
    bool any = false;
    for (const auto& m : metrics) {
      const auto* s = find_summary(ss, key, m);
      row.push_back(s ? format_mean_sd(*s) : "-");
      if (s) {
        any = true;
        n = std::max(n, s->n);
      }
    }
    row.push_back(std::to_string(n));
    if (any) t.rows.push_back(std::move(row));
  }
  return t;
}

std::optional<double> opt_number(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_number()) return v.get<double>();
  return std::nullopt;
}

}  // namespace

std::string to_markdown(const Table& t) {
  std::vector<std::size_t> w(t.header.size(), 3);
  for (std::size_t c = 0; c < t.header.size(); ++c) w[c] = std::max(w[c], width(t.header[c]));
  for (const auto& r : t.rows) {
    for (std::size_t c = 0; c < r.size() && c < w.size(); ++c) w[c] = std::max(w[c], width(r[c]));
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out = "|";
    for (std::size_t c = 0; c < w.size(); ++c) {
      std::string cell = c < cells.size() ? cells[c] : "";
      out += " " + cell + std::string(w[c] - width(cell), ' ') + " |";
    }
    return out + "\n";
  };
  std::string out = line(t.header);
  out += "|";
  for (auto cw : w) out += std::string(cw + 2, '-') + "|";
  out += "\n";
  for (const auto& r : t.rows) out += line(r);
  return out;
}

std::string to_csv(const Table& t) {
  auto line = [](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ",";
      out += csv_cell(cells[i]);
    }
    return out + "\n";
  };
  std::string out = line(t.header);
  for (const auto& r : t.rows) out += line(r);
  return out;
}

std::string format_mean_sd(const ScoreSummary& s) { return fixed(s.mean, 2) + " ± " + fixed(s.sd, 2); }

Table scenario_quality_table(const std::vector<ScoreSummary>& summaries) {
  return grid(summaries, {{"vanilla", "Vanilla"}, {"cot", "CoT"}, {"ours", "Ours"}}, {"PR", "LR", "FSR"}, "Method");
}

Table fsr_audit_table(const std::vector<ScoreSummary>& summaries) {
  return grid(summaries,
              {{"full", "Full"}, {"no-iso", "w/o ISO"}, {"iso-only", "ISO-only"}, {"vanilla", "Vanilla"}},
              {"CC", "PRC", "LRC", "Overall"}, "Arm");
}

Table topology_table(const std::vector<TopologyReport>& reports) {
  Table t;
  t.header = {"Method", "Eff. Rank", "Shift", "Aligned Var.", "CSE", "Dir. Sim.", "Anchor"};
  for (const auto& r : reports) {
    t.rows.push_back({r.label, opt_fixed(r.eff_rank, 4), opt_fixed(r.shift, 4), opt_fixed(r.aligned_var, 4),
                      opt_fixed(r.cse, 4), opt_fixed(r.dir_sim, 4), r.anchor_label});
  }
  return t;
}

Table summary_csv_table(const std::vector<ScoreSummary>& summaries, const std::vector<std::string>& metrics) {
  Table t;
  t.header = {"method", "metric", "mean", "sd", "n"};
  for (const auto& s : summaries) {
    if (std::find(metrics.begin(), metrics.end(), s.metric) == metrics.end()) continue;
    t.rows.push_back({s.method, s.metric, fixed(s.mean, 6), fixed(s.sd, 6), std::to_string(s.n)});
  }
  return t;
}

std::string serialize_topology(const TopologyReport& r) {
  auto num = [](const std::optional<double>& v) -> nlohmann::ordered_json {
    if (v) return *v;
    return "undefined";
  };
  nlohmann::ordered_json j;
  j["label"] = r.label;
  j["eff_rank"] = num(r.eff_rank);
  j["shift"] = num(r.shift);
  j["aligned_var"] = num(r.aligned_var);
  j["cse"] = num(r.cse);
  j["dir_sim"] = num(r.dir_sim);
  j["anchor_label"] = r.anchor_label;
  return j.dump();
}

TopologyReport parse_topology(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::MalformedRecord, std::string(line));
  try {
    return {j.at("label").get<std::string>(), opt_number(j, "eff_rank"),   opt_number(j, "shift"),
            opt_number(j, "aligned_var"),     opt_number(j, "cse"),        opt_number(j, "dir_sim"),
            j.at("anchor_label").get<std::string>()};
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::MalformedRecord, std::string(line));
  }
}

std::string serialize_summary(const ScoreSummary& s) {
  nlohmann::ordered_json j;
  j["method"] = s.method;
  j["metric"] = s.metric;
  j["mean"] = s.mean;
  j["sd"] = s.sd;
  j["n"] = s.n;
  return j.dump();
}

ScoreSummary parse_summary(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::MalformedRecord, std::string(line));
  try {
    return {j.at("method").get<std::string>(), j.at("metric").get<std::string>(), j.at("mean").get<double>(),
            j.at("sd").get<double>(), j.at("n").get<std::size_t>()};
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::MalformedRecord, std::string(line));
  }
}

std::string serialize_judge(const JudgeResult& r, const std::string& prompt_sha256) {
  nlohmann::ordered_json j;
  j["target_id"] = r.target_id;
  j["method"] = r.method;
  j["rubric"] = to_string(r.rubric);
  nlohmann::ordered_json scores = nlohmann::ordered_json::object();
  const std::vector<std::string> order = r.rubric == Rubric::ScenarioQuality
                                             ? std::vector<std::string>{"PR", "LR", "FSR"}
                                             : std::vector<std::string>{"CC", "PRC", "LRC"};
  for (const auto& m : order) {
    if (auto it = r.scores.find(m); it != r.scores.end()) scores[m] = it->second;
  }
  j["scores"] = scores;
  j["prompt_sha256"] = prompt_sha256;
  return j.dump();
}

}  // namespace argos::evalkit
