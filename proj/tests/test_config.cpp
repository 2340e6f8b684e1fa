#include <string>

#include "argos/config.hpp"
#include "argos/error.hpp"
#include "doctest.h"
#include "support/expect.hpp"
#include "support/tempdir.hpp"

using namespace argos;
using namespace argos::pipeline;

namespace {

KeyValues corpus_keys() {
  return {{"corpus.rules", "r.jsonl"}, {"corpus.seeds", "s.jsonl"}, {"corpus.clauses", "c.jsonl"},
          {"corpus.robot_spec", "spec.json"}};
}

}  // namespace

TEST_CASE("default constants") {
  RunConfig c;
  CHECK(c.tau_attr == 0.7);
  CHECK(c.k_max == 3);
  CHECK(c.tau_reg == 0.7);
  CHECK(c.eps_shift == 1e-6);
  CHECK(c.max_in_flight == 4);
  CHECK(c.retries == 3);
  CHECK(c.aligned_dims == 32);
  CHECK(c.embedding.provider == "mock");
  CHECK(c.embedding.dims == 64);
  CHECK(c.llm.temperature == 0.7);
  CHECK(c.llm.backend == "mock");
}

TEST_CASE("config text parsing") {
  auto kv = parse_config_text("# demo\ncorpus.rules = rules.jsonl  # trailing\n\nk_max=2\nrun_dir = out\n", "/base");
  CHECK(kv.at("corpus.rules") == "/base/rules.jsonl");
  CHECK(kv.at("k_max") == "2");
  CHECK(kv.at("run_dir") == "/base/out");
  CHECK(parse_config_text("corpus.rules = /abs/r.jsonl", "/base").at("corpus.rules") == "/abs/r.jsonl");

  CHECK_ERROR_DETAIL(parse_config_text("tau = 0.5", "/"), ErrorCode::ConfigError, "tau");
  CHECK_ERROR(parse_config_text("k_max 2", "/"), ErrorCode::ConfigError);
}

TEST_CASE("values are validated") {
  auto base = corpus_keys();
  CHECK_NOTHROW(make_config(base));
  auto with = [&](const std::string& key, const std::string& value) {
    auto kv = base;
    kv[key] = value;
    return kv;
  };
  CHECK_ERROR_DETAIL(make_config(with("thresholds.tau_attr", "2")), ErrorCode::ConfigError, "thresholds.tau_attr");
  CHECK_ERROR(make_config(with("thresholds.tau_attr", "abc")), ErrorCode::ConfigError);
  CHECK_ERROR_DETAIL(make_config(with("k_max", "0")), ErrorCode::ConfigError, "k_max");
  CHECK_ERROR(make_config(with("concurrency.max_in_flight", "0")), ErrorCode::ConfigError);
  CHECK_ERROR(make_config(with("embedding.provider", "onnx")), ErrorCode::ConfigError);
  CHECK_ERROR(make_config(with("llm.backend", "remote")), ErrorCode::ConfigError);
  CHECK_ERROR(make_config(with("embedding.cache", "maybe")), ErrorCode::ConfigError);
  CHECK_ERROR(make_config(with("eval.anchor", "ours")), ErrorCode::ConfigError);
  CHECK_ERROR(make_config(with("bogus", "1")), ErrorCode::ConfigError);
  auto no_rules = base;
  no_rules.erase("corpus.rules");
  CHECK_ERROR_DETAIL(make_config(no_rules), ErrorCode::ConfigError, "corpus.rules");

  CHECK(make_config(with("thresholds.tau_attr", "1.0")).tau_attr == 1.0);
  CHECK(make_config(with("k_max", "2")).k_max == 2);
}

TEST_CASE("judge inherits llm settings") {
  auto kv = corpus_keys();
  kv["llm.model"] = "m1";
  kv["llm.temperature"] = "0.3";
  kv["judge.temperature"] = "0";
  auto c = make_config(kv);
  CHECK(c.judge.model == "m1");
  CHECK(c.judge.temperature == 0.0);
  CHECK(c.llm.temperature == 0.3);
}

TEST_CASE("file plus overrides, and mock forcing") {
  testing::TempDir dir;
  auto path = dir.write("run.conf",
                        "corpus.rules = r.jsonl\ncorpus.seeds = s.jsonl\ncorpus.clauses = c.jsonl\n"
                        "corpus.robot_spec = spec.json\nllm.backend = remote\nllm.endpoint = http://x\n"
                        "llm.model = big\nembedding.provider = remote\nembedding.endpoint = http://e\n"
                        "embedding.dims = 0\nk_max = 2\n");
  auto c = load_config(path, {{"k_max", "1"}});
  CHECK(c.k_max == 1);
  CHECK(c.llm.backend == "remote");
  CHECK(c.corpus.rules == (dir.path() / "r.jsonl").lexically_normal());

  KeyValues overrides;
  force_mock(overrides);
  auto m = load_config(path, overrides);
  CHECK(m.llm.backend == "mock");
  CHECK(m.judge.backend == "mock");
  CHECK(m.llm.model == "mock-llm");
  CHECK(m.embedding.provider == "mock");

  CHECK_ERROR(load_config(dir.path() / "missing.conf"), ErrorCode::ConfigError);
  CHECK_ERROR(load_config(path, {{"nope", "1"}}), ErrorCode::ConfigError);
}

TEST_CASE("snapshot covers every key but run_dir and uses shortest round-trip numbers") {
  auto c = make_config(corpus_keys());
  auto s = c.snapshot();
  for (const auto& k : RunConfig::keys()) CHECK((k == "run_dir") != s.contains(k));
  CHECK(s.at("thresholds.tau_attr") == "0.7");
  CHECK(s.at("thresholds.eps_shift") == "1e-06");
  CHECK(make_config(s).snapshot() == s);
}

TEST_CASE("mock embedding with zero dims uses the default width") {
  auto kv = corpus_keys();
  kv["embedding.dims"] = "0";
  CHECK(make_config(kv).embedding.dims == 64);
  kv["embedding.provider"] = "remote";
  kv["embedding.endpoint"] = "http://e";
  CHECK(make_config(kv).embedding.dims == 0);
}
