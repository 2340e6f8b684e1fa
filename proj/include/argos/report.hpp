#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "argos/evalkit.hpp"

namespace argos::evalkit {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Pipe table with columns padded to a common width.
std::string to_markdown(const Table& t);
std::string to_csv(const Table& t);

std::string format_mean_sd(const ScoreSummary& s);

/// Methods as rows ("vanilla", "cot", "ours" when present), PR/LR/FSR columns.
Table scenario_quality_table(const std::vector<ScoreSummary>& summaries);
/// Arms as rows, CC/PRC/LRC/Overall columns.
Table fsr_audit_table(const std::vector<ScoreSummary>& summaries);
Table topology_table(const std::vector<TopologyReport>& reports);
/// Long format: method,metric,mean,sd,n.
Table summary_csv_table(const std::vector<ScoreSummary>& summaries, const std::vector<std::string>& metrics);

std::string serialize_topology(const TopologyReport& r);
TopologyReport parse_topology(std::string_view line);

std::string serialize_summary(const ScoreSummary& s);
ScoreSummary parse_summary(std::string_view line);

std::string serialize_judge(const JudgeResult& r, const std::string& prompt_sha256);

}  // namespace argos::evalkit
