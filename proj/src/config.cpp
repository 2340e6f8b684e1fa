#include "argos/config.hpp"

#include <charconv>

#include "argos/error.hpp"
#include "argos/util.hpp"

namespace argos::pipeline {

namespace fs = std::filesystem;

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {
      "corpus.rules",        "corpus.seeds",           "corpus.clauses",      "corpus.robot_spec",
      "corpus.aliases",      "embedding.provider",     "embedding.endpoint",  "embedding.model",
      "embedding.dims",      "embedding.cache",        "llm.backend",         "llm.endpoint",
      "llm.model",           "llm.temperature",        "llm.max_tokens",      "llm.seed",
      "judge.backend",       "judge.endpoint",         "judge.model",         "judge.temperature",
      "judge.max_tokens",    "judge.seed",             "thresholds.tau_attr", "thresholds.tau_reg",
      "thresholds.eps_shift", "k_max",                 "concurrency.max_in_flight", "concurrency.retries",
      "grounding.mode",      "eval.anchor",            "eval.embed_text",     "eval.aligned_dims",
      "seed_filter",         "run_dir",
  };
  return k;
}

namespace {

bool known_key(std::string_view key) {
  for (const auto& k : RunConfig::keys()) {
    if (k == key) return true;
  }
  return false;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw Error(ErrorCode::ConfigError, key + "=" + v);
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw Error(ErrorCode::ConfigError, key + "=" + v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  auto l = to_lower_ascii(v);
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  throw Error(ErrorCode::ConfigError, key + "=" + v);
}

void apply_backend(BackendConfig& b, const std::string& prefix, const KeyValues& kv) {
  auto get = [&](const char* name) -> const std::string* {
    auto it = kv.find(prefix + name);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto v = get("backend")) b.backend = *v;
  if (auto v = get("endpoint")) b.endpoint = *v;
  if (auto v = get("model")) b.model = *v;
  if (auto v = get("temperature")) b.temperature = to_double(prefix + "temperature", *v);
  if (auto v = get("max_tokens")) b.max_tokens = static_cast<int>(to_int(prefix + "max_tokens", *v));
  if (auto v = get("seed")) {
    if (v->empty()) {
      b.seed.reset();
    } else {
      auto s = to_int(prefix + "seed", *v);
      if (s < 0) throw Error(ErrorCode::ConfigError, prefix + "seed");
      b.seed = static_cast<std::uint64_t>(s);
    }
  }
}

void snapshot_backend(std::map<std::string, std::string>& out, const BackendConfig& b, const std::string& prefix) {
  out[prefix + "backend"] = b.backend;
  out[prefix + "endpoint"] = b.endpoint;
  out[prefix + "model"] = b.model;
  out[prefix + "temperature"] = format_double(b.temperature);
  out[prefix + "max_tokens"] = std::to_string(b.max_tokens);
  out[prefix + "seed"] = b.seed ? std::to_string(*b.seed) : "";
}

bool is_path_key(std::string_view key) { return key.starts_with("corpus.") || key == "run_dir"; }

}  // namespace

std::map<std::string, std::string> RunConfig::snapshot() const {
  std::map<std::string, std::string> s;
  s["corpus.rules"] = corpus.rules.generic_string();
  s["corpus.seeds"] = corpus.seeds.generic_string();
  s["corpus.clauses"] = corpus.clauses.generic_string();
  s["corpus.robot_spec"] = corpus.robot_spec.generic_string();
  s["corpus.aliases"] = corpus.aliases.generic_string();
  s["embedding.provider"] = embedding.provider;
  s["embedding.endpoint"] = embedding.endpoint;
  s["embedding.model"] = embedding.model;
  s["embedding.dims"] = std::to_string(embedding.dims);
  s["embedding.cache"] = embedding.cache ? "true" : "false";
  snapshot_backend(s, llm, "llm.");
  snapshot_backend(s, judge, "judge.");
  s["thresholds.tau_attr"] = format_double(tau_attr);
  s["thresholds.tau_reg"] = format_double(tau_reg);
  s["thresholds.eps_shift"] = format_double(eps_shift);
  s["k_max"] = std::to_string(k_max);
  s["concurrency.max_in_flight"] = std::to_string(max_in_flight);
  s["concurrency.retries"] = std::to_string(retries);
  s["grounding.mode"] = grounding_mode;
  s["eval.anchor"] = eval_anchor;
  s["eval.embed_text"] = eval_embed_text;
  s["eval.aligned_dims"] = std::to_string(aligned_dims);
  s["seed_filter"] = seed_filter;
  return s;
}

void RunConfig::validate() const {
  auto fail = [](const char* key) { throw Error(ErrorCode::ConfigError, key); };
  if (!(tau_attr > -1.0 && tau_attr <= 1.0)) fail("thresholds.tau_attr");
  if (!(tau_reg > -1.0 && tau_reg <= 1.0)) fail("thresholds.tau_reg");
  if (!(eps_shift >= 0.0)) fail("thresholds.eps_shift");
  if (k_max < 1) fail("k_max");
  if (max_in_flight < 1) fail("concurrency.max_in_flight");
  if (retries < 0) fail("concurrency.retries");
  if (aligned_dims < 1) fail("eval.aligned_dims");
  if (embedding.provider != "mock" && embedding.provider != "remote") fail("embedding.provider");
  if (embedding.provider == "remote" && embedding.endpoint.empty()) fail("embedding.endpoint");
  for (const auto* b : {&llm, &judge}) {
    const char* prefix = b == &llm ? "llm" : "judge";
    if (b->backend != "mock" && b->backend != "remote") throw Error(ErrorCode::ConfigError, std::string(prefix) + ".backend");
    if (b->backend == "remote" && b->endpoint.empty()) throw Error(ErrorCode::ConfigError, std::string(prefix) + ".endpoint");
    if (b->max_tokens < 1) throw Error(ErrorCode::ConfigError, std::string(prefix) + ".max_tokens");
    if (!(b->temperature >= 0.0)) throw Error(ErrorCode::ConfigError, std::string(prefix) + ".temperature");
  }
  if (grounding_mode != "lexicon" && grounding_mode != "llm") fail("grounding.mode");
  if (eval_anchor != "vanilla" && eval_anchor != "seed") fail("eval.anchor");
  if (eval_embed_text != "description+mechanism" && eval_embed_text != "description") fail("eval.embed_text");
  if (corpus.rules.empty()) fail("corpus.rules");
  if (corpus.seeds.empty()) fail("corpus.seeds");
  if (corpus.clauses.empty()) fail("corpus.clauses");
  if (corpus.robot_spec.empty()) fail("corpus.robot_spec");
}

KeyValues parse_config_text(std::string_view text, const fs::path& base_dir) {
  KeyValues out;
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(i + 1) + ": expected key = value");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (!known_key(key)) throw Error(ErrorCode::ConfigError, key);
    if (is_path_key(key) && !value.empty() && fs::path(value).is_relative()) {
      value = (base_dir / value).lexically_normal().generic_string();
    }
    out[key] = value;
  }
  return out;
}

RunConfig make_config(const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    if (!known_key(key)) throw Error(ErrorCode::ConfigError, key);
  }
  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };

  RunConfig c;
  if (auto v = get("corpus.rules")) c.corpus.rules = *v;
  if (auto v = get("corpus.seeds")) c.corpus.seeds = *v;
  if (auto v = get("corpus.clauses")) c.corpus.clauses = *v;
  if (auto v = get("corpus.robot_spec")) c.corpus.robot_spec = *v;
  if (auto v = get("corpus.aliases")) c.corpus.aliases = *v;
  if (auto v = get("embedding.provider")) c.embedding.provider = *v;
  if (auto v = get("embedding.endpoint")) c.embedding.endpoint = *v;
  if (auto v = get("embedding.model")) c.embedding.model = *v;
  if (auto v = get("embedding.dims")) {
    auto d = to_int("embedding.dims", *v);
    if (d < 0) throw Error(ErrorCode::ConfigError, "embedding.dims");
    c.embedding.dims = static_cast<std::size_t>(d);
  }
  if (c.embedding.provider == "mock" && c.embedding.dims == 0) c.embedding.dims = RunConfig::Embedding{}.dims;
  if (auto v = get("embedding.cache")) c.embedding.cache = to_bool("embedding.cache", *v);

  apply_backend(c.llm, "llm.", kv);
  c.judge = c.llm;
  apply_backend(c.judge, "judge.", kv);

  if (auto v = get("thresholds.tau_attr")) c.tau_attr = to_double("thresholds.tau_attr", *v);
  if (auto v = get("thresholds.tau_reg")) c.tau_reg = to_double("thresholds.tau_reg", *v);
  if (auto v = get("thresholds.eps_shift")) c.eps_shift = to_double("thresholds.eps_shift", *v);
  if (auto v = get("k_max")) c.k_max = static_cast<int>(to_int("k_max", *v));
  if (auto v = get("concurrency.max_in_flight")) {
    auto n = to_int("concurrency.max_in_flight", *v);
    if (n < 1) throw Error(ErrorCode::ConfigError, "concurrency.max_in_flight");
    c.max_in_flight = static_cast<std::size_t>(n);
  }
  if (auto v = get("concurrency.retries")) c.retries = static_cast<int>(to_int("concurrency.retries", *v));
  if (auto v = get("grounding.mode")) c.grounding_mode = *v;
  if (auto v = get("eval.anchor")) c.eval_anchor = *v;
  if (auto v = get("eval.embed_text")) c.eval_embed_text = *v;
  if (auto v = get("eval.aligned_dims")) c.aligned_dims = static_cast<int>(to_int("eval.aligned_dims", *v));
  if (auto v = get("seed_filter")) c.seed_filter = *v;
  if (auto v = get("run_dir")) c.run_dir = *v;
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path, const KeyValues& overrides) {
  KeyValues kv;
  if (!path.empty()) {
    std::string text;
    try {
      text = read_file(path);
    } catch (const Error&) {
      throw Error(ErrorCode::ConfigError, "cannot read config file " + path.string());
    }
    kv = parse_config_text(text, fs::absolute(path).parent_path());
  }
  for (const auto& [key, value] : overrides) {
    if (!known_key(key)) throw Error(ErrorCode::ConfigError, key);
    kv[key] = (is_path_key(key) && !value.empty()) ? fs::absolute(value).lexically_normal().generic_string() : value;
  }
  return make_config(kv);
}

void force_mock(KeyValues& values) {
  values["embedding.provider"] = "mock";
  values["llm.backend"] = "mock";
  values["judge.backend"] = "mock";
  values["embedding.model"] = "fnv1a-bow";
  values["llm.model"] = "mock-llm";
  values["judge.model"] = "mock-llm";
}

}  // namespace argos::pipeline
