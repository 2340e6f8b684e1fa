#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "argos/evalkit.hpp"
#include "argos/fsrsynth.hpp"
#include "argos/grounding.hpp"
#include "argos/hazardgen.hpp"

namespace argos::pipeline {

struct BackendConfig {
  std::string backend = "mock";  // mock | remote
  std::string endpoint;
  std::string model = "mock-llm";
  double temperature = 0.7;
  int max_tokens = 2048;
  std::optional<std::uint64_t> seed;
};

struct RunConfig {
  struct Corpus {
    std::filesystem::path rules;
    std::filesystem::path seeds;
    std::filesystem::path clauses;
    std::filesystem::path robot_spec;
    std::filesystem::path aliases;  // optional
  } corpus;

  struct Embedding {
    std::string provider = "mock";  // mock | remote
    std::string endpoint;
    std::string model = "fnv1a-bow";
    std::size_t dims = 64;  // 0: remote accepts what the endpoint returns, mock uses 64
    bool cache = true;
  } embedding;

  BackendConfig llm;
  BackendConfig judge;  // unset judge.* keys inherit llm.*

  double tau_attr = grounding::kDefaultTauAttr;
  double tau_reg = fsrsynth::kDefaultTauReg;
  double eps_shift = evalkit::kDefaultEpsShift;
  int k_max = hazardgen::kDefaultKMax;

  std::size_t max_in_flight = 4;
  int retries = 3;

  std::string grounding_mode = "lexicon";  // lexicon | llm
  std::string eval_anchor = "vanilla";     // vanilla | seed
  std::string eval_embed_text = "description+mechanism";  // or "description"
  int aligned_dims = evalkit::kDefaultAlignedDims;

  std::string seed_filter;
  std::filesystem::path run_dir;

  /// Every recognised dotted key, in snapshot order.
  static const std::vector<std::string>& keys();

  /// Resolved key=value pairs (all keys except run_dir).
  std::map<std::string, std::string> snapshot() const;

  /// Throws ConfigError(key) when a value is out of range.
  void validate() const;
};

using KeyValues = std::map<std::string, std::string>;

/// Flat `key = value` lines; '#' starts a comment. Relative corpus.* paths are
/// resolved against `base_dir`. Throws ConfigError on unknown keys or
/// malformed lines.
KeyValues parse_config_text(std::string_view text, const std::filesystem::path& base_dir);

/// Builds a validated config from merged key/values.
RunConfig make_config(const KeyValues& values);

/// Reads `path` (if non-empty), overlays `overrides`, and builds the config.
RunConfig load_config(const std::filesystem::path& path, const KeyValues& overrides = {});

/// Forces mock embedding, LLM and judge backends.
void force_mock(KeyValues& values);

}  // namespace argos::pipeline
