#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "argos/corpus.hpp"
#include "argos/embedding.hpp"
#include "argos/fsrsynth.hpp"

namespace argos::evalkit {

using embedding::EmbeddingVector;

inline constexpr double kDefaultEpsShift = 1e-6;
inline constexpr int kDefaultAlignedDims = 32;

struct EmbeddingSet {
  std::string label;
  std::vector<EmbeddingVector> vectors;
};

// ---- latent topology ------------------------------------------------------

/// exp(entropy) of the normalized singular values of the mean-centered set.
/// Throws TooFewVectors (< 2) or DegenerateSet (all vectors identical).
double effective_rank(const EmbeddingSet& set);

double centroid_shift(const EmbeddingSet& set, const EmbeddingSet& anchor);

/// Mean pairwise Euclidean distance.
double diversity(const EmbeddingSet& set);

/// diversity / shift; nullopt when shift < eps_shift.
std::optional<double> cse(const EmbeddingSet& set, const EmbeddingSet& anchor, double eps_shift = kDefaultEpsShift);

/// Mean pairwise cosine of the differences v_i - seed. Differences of zero
/// norm are skipped and counted in `excluded`.
double directional_similarity(const EmbeddingSet& set, const EmbeddingVector& seed, std::size_t* excluded = nullptr);

/// Same, with one seed vector per set member.
double directional_similarity(const EmbeddingSet& set, const std::vector<EmbeddingVector>& seeds,
                              std::size_t* excluded = nullptr);

/// Projects the target set (centered on its own mean) onto the top
/// min(p, rank) principal directions of all sets pooled and centered, and
/// returns the mean sample variance per direction.
double aligned_variance(const std::vector<EmbeddingSet>& sets, std::string_view target_label,
                        int p = kDefaultAlignedDims);

struct TopologyReport {
  std::string label;
  std::optional<double> eff_rank;
  std::optional<double> shift;
  std::optional<double> aligned_var;
  std::optional<double> cse;
  std::optional<double> dir_sim;
  std::string anchor_label;
};

// ---- judges ---------------------------------------------------------------

enum class Rubric { ScenarioQuality, FsrAudit };
std::string_view to_string(Rubric r);

struct JudgeResult {
  std::string target_id;
  std::string method;
  Rubric rubric = Rubric::ScenarioQuality;
  std::map<std::string, int> scores;  // PR/LR/FSR or CC/PRC/LRC
  std::string justification;
  std::string raw_transcript;
};

/// Blind labels: Method A = vanilla, B = cot, C = ours.
struct ScenarioBlocks {
  std::vector<std::string> method_a;
  std::vector<std::string> method_b;
  std::vector<std::string> method_c;
};

/// Scenario text shown to the judge: description followed by the mechanism line.
std::string scenario_listing(const std::vector<std::string>& scenarios);

std::string build_scenario_judge_prompt(const std::string& seed_text, const ScenarioBlocks& blocks,
                                        const corpus::RobotSpec& spec);

/// One result per "Scenario N:" entry; `method` is "A", "B" or "C" and
/// `target_id` the 1-based ordinal within that method.
std::vector<JudgeResult> parse_scenario_judgment(std::string_view raw);

std::string build_fsr_audit_prompt(const std::string& seed_text, const std::vector<fsrsynth::FSRecord>& records,
                                   const corpus::RobotSpec& spec);

/// Reads CC, PRC and LRC from the "Final Scores" rows.
JudgeResult parse_fsr_audit(std::string_view raw);

struct ScoreSummary {
  std::string method;
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;  // sample SD, 0 when n == 1
  std::size_t n = 0;
};

/// Groups by (method, metric), sorted by method then metric.
std::vector<ScoreSummary> aggregate(const std::vector<JudgeResult>& results);

ScoreSummary summarize(std::string method, std::string metric, const std::vector<double>& values);

}  // namespace argos::evalkit
