#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "argos/config.hpp"
#include "argos/corpus.hpp"
#include "argos/embedding.hpp"
#include "argos/fsrsynth.hpp"
#include "argos/hazardgen.hpp"
#include "argos/llm.hpp"

namespace argos::pipeline {

struct Backends {
  std::shared_ptr<embedding::EmbeddingProvider> embedding;
  std::shared_ptr<llm::LlmBackend> llm;
  std::shared_ptr<llm::LlmBackend> judge;
};

/// Mock or remote backends per config. Remote tokens come from
/// ARGOS_EMBEDDING_API_KEY / ARGOS_LLM_API_KEY / ARGOS_JUDGE_API_KEY, each
/// falling back to OPENAI_API_KEY.
Backends make_backends(const RunConfig& cfg);

/// Exclusive advisory lock on `<run_dir>/.lock`; throws LockHeld when another
/// process owns it.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& run_dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  int fd_ = -1;
};

struct StageRecord {
  std::string fingerprint;
  std::map<std::string, std::size_t> records;  // file name -> line count
  std::map<std::string, std::string> params;   // per-invocation settings, e.g. k_max
};

/// Stage runner over one run directory. Every stage rewrites its files
/// atomically and then updates manifest.json.
class Pipeline {
 public:
  Pipeline(RunConfig cfg, Backends backends);

  void ground();
  void generate(hazardgen::Method method);
  void synthesize(fsrsynth::Arm arm);
  void evaluate();
  void report();
  void run_all();

  const std::filesystem::path& run_dir() const { return cfg_.run_dir; }
  const std::map<std::string, StageRecord>& stages() const { return stages_; }

 private:
  /// Fingerprint the stage would have given the current config and corpus.
  /// Per-invocation params come from the recorded stage when one exists.
  std::string expected_fingerprint(const std::string& stage) const;
  bool fresh(const std::string& stage) const;
  void require(const std::string& stage) const;
  std::vector<std::string> evaluate_inputs() const;
  std::vector<corpus::SeedScenario> selected_seeds() const;
  std::vector<hazardgen::HazardScenario> read_hazards(hazardgen::Method m) const;

  void write_records(const std::string& file, const std::vector<std::string>& lines,
                     std::map<std::string, std::size_t>& counts) const;
  void write_calls(const std::string& file, const llm::CallLog& log, std::map<std::string, std::size_t>& counts) const;
  void finish_stage(const std::string& stage, std::map<std::string, std::size_t> counts,
                    std::map<std::string, std::string> params = {});
  void load_manifest();
  void save_manifest() const;
  std::string run_id() const;

  RunConfig cfg_;
  Backends backends_;
  std::unique_ptr<RunLock> lock_;
  corpus::RuleBase rules_;
  std::vector<corpus::SeedScenario> seeds_;
  std::vector<corpus::RegClause> clauses_;
  corpus::RobotSpec spec_;
  std::vector<corpus::Alias> aliases_;
  std::map<std::string, std::string> input_hashes_;
  std::shared_ptr<embedding::EmbeddingCache> cache_;
  std::unique_ptr<embedding::Embedder> embedder_;
  std::map<std::string, StageRecord> stages_;
};

}  // namespace argos::pipeline
