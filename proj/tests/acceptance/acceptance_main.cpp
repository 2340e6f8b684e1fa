// Acceptance checks: one PASS/FAIL/SKIP line per criterion. Criteria 1-7 gate
// the exit status; 8 needs ARGOS_LIVE_CONFIG and never gates.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "argos/config.hpp"
#include "argos/corpus.hpp"
#include "argos/embedding.hpp"
#include "argos/error.hpp"
#include "argos/evalkit.hpp"
#include "argos/fsrsynth.hpp"
#include "argos/grounding.hpp"
#include "argos/hazardgen.hpp"
#include "argos/llm.hpp"
#include "argos/pipeline.hpp"
#include "argos/util.hpp"
#include "json.hpp"
#include "support/gen.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace argos;
namespace fs = std::filesystem;

namespace {

struct Failure {
  std::string why;
};

void expect(bool ok, const std::string& why) {
  if (!ok) throw Failure{why};
}

template <class F>
void expect_error(F&& f, ErrorCode code, const std::string& what) {
  try {
    f();
  } catch (const Error& e) {
    expect(e.code() == code, what + ": got " + std::string(to_string(e.code())));
    return;
  }
  throw Failure{what + ": no error"};
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

struct Demo {
  corpus::RuleBase rules;
  std::vector<corpus::SeedScenario> seeds;
  std::vector<corpus::RegClause> clauses;
  corpus::RobotSpec spec;
};

Demo load_demo() {
  const fs::path d = fs::path(ARGOS_DATA_DIR) / "demo";
  return {corpus::load_rules(d / "rules.jsonl"), corpus::load_seeds(d / "seeds.jsonl"),
          corpus::load_clauses(d / "clauses.jsonl"), corpus::load_robot_spec(d / "robot_spec.json")};
}

std::map<std::string, std::string> snapshot_dir(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) files[e.path().filename().string()] = testing::slurp(e.path());
  }
  return files;
}

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

// ---- 1 ----------------------------------------------------------------------

std::string mock_determinism() {
  testing::TempDir a, b;
  const fs::path conf = fs::path(ARGOS_DATA_DIR) / "demo/demo.conf";
  double slowest = 0.0;
  for (const auto* dir : {&a, &b}) {
    std::string cmd = std::string("\"") + ARGOS_CLI_PATH + "\" --config \"" + conf.string() + "\" --mock --run-dir \"" +
                      dir->path().string() + "\" run-all >/dev/null 2>&1";
    auto t0 = std::chrono::steady_clock::now();
    int status = std::system(cmd.c_str());
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    slowest = std::max(slowest, secs);
    expect(WIFEXITED(status) && WEXITSTATUS(status) == 0, "run-all exited with status " + std::to_string(status));
    expect(secs < 10.0, "run-all took " + std::to_string(secs) + " s");
  }
  auto fa = snapshot_dir(a.path());
  auto fb = snapshot_dir(b.path());
  expect(fa.size() == fb.size(), "runs produced different file sets");
  for (const auto& [name, content] : fa) expect(fb[name] == content, name + " differs between runs");

  auto manifest = nlohmann::json::parse(fa.at("manifest.json"));
  const auto& stages = manifest.at("stages");
  for (const char* s : {"ground", "generate.ours", "generate.vanilla", "generate.cot", "synthesize.full",
                        "synthesize.no-iso", "synthesize.iso-only", "synthesize.vanilla", "evaluate", "report"}) {
    expect(stages.contains(s), std::string("stage missing from manifest: ") + s);
  }
  for (const auto& [stage, rec] : stages.items()) {
    for (const auto& [file, n] : rec.at("records").items()) {
      std::size_t header = fs::path(file).extension() == ".csv" ? 1 : 0;
      expect(fa.contains(file) && line_count(fa.at(file)) == n.get<std::size_t>() + header,
             "manifest count mismatch for " + file);
    }
  }
  std::ostringstream out;
  out << fa.size() << " files identical, slowest run " << std::fixed;
  out.precision(2);
  out << slowest << " s";
  return out.str();
}

// ---- 2 ----------------------------------------------------------------------

std::string enumeration_oracle() {
  std::size_t cases = 0;
  for (int n = 0; n <= 8; ++n) {
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("E0" + std::to_string(i));
    std::vector<grounding::AttributeMatch> matches;
    for (const auto& id : ids) matches.push_back({{"u", grounding::UnitSource::Lexicon}, id, 0.9});
    for (int k = 1; k <= 3; ++k) {
      auto got = hazardgen::enumerate_combinations(matches, k, "S");
      auto brute = oracle::power_set_filtered(n, k);
      expect(got.size() == brute.size(), "count differs at n=" + std::to_string(n) + " k=" + std::to_string(k));
      std::set<std::vector<std::string>> a, b;
      for (const auto& c : got) a.insert(c.rule_ids);
      for (const auto& s : brute) {
        std::vector<std::string> v;
        for (int i : s) v.push_back(ids[static_cast<std::size_t>(i)]);
        b.insert(v);
      }
      expect(a == b, "subsets differ at n=" + std::to_string(n) + " k=" + std::to_string(k));
      ++cases;
    }
  }
  return std::to_string(cases) + " (n, k_max) cases";
}

// ---- 3 ----------------------------------------------------------------------

std::string retrieval_thresholding() {
  corpus::RuleBase rules({corpus::make_rule("U02", "Child", "courier"), corpus::make_rule("T01", "Courier", "child delivery"),
                          corpus::make_rule("U12", "Pet Animal", "dog"), corpus::make_rule("E09", "Stairs", "steps"),
                          corpus::make_rule("U07", "Drowsy", "user"), corpus::make_rule("U01", "Elderly", "aged person"),
                          corpus::make_rule("E03", "Wet Floor", "slippery surface")});
  const std::string unit = "child courier";
  embedding::Embedder embedder(std::make_shared<embedding::MockEmbeddingProvider>());

  auto over = [&](double tau) {
    std::set<std::string> s;
    for (const auto& [id, r] : rules) {
      if (oracle::cosine(oracle::mock_embed(unit), oracle::mock_embed(r.embedding_text())) > tau) s.insert(id);
    }
    return s;
  };
  auto matched = [&](double tau) {
    std::set<std::string> s;
    for (const auto& m : grounding::match_attributes({{unit, grounding::UnitSource::Lexicon}}, rules, embedder, tau))
      s.insert(m.rule_id);
    return s;
  };
  auto at05 = matched(0.5), at07 = matched(0.7), at09 = matched(0.9);
  expect(at07 == std::set<std::string>{"T01", "U02"}, "tau 0.7 set is not {T01, U02}");
  expect(at07 == over(0.7), "tau 0.7 set differs from the cosine table");
  expect(at05 == over(0.5) && at09 == over(0.9), "tau 0.5/0.9 sets differ from the cosine table");
  expect(std::includes(at05.begin(), at05.end(), at07.begin(), at07.end()) &&
             std::includes(at07.begin(), at07.end(), at09.begin(), at09.end()),
         "sets do not form a chain");
  return "|0.5|=" + std::to_string(at05.size()) + " |0.7|=" + std::to_string(at07.size()) +
         " |0.9|=" + std::to_string(at09.size());
}

// ---- 4 ----------------------------------------------------------------------

evalkit::EmbeddingSet make_set(const std::string& label, const oracle::Matrix& rows) {
  evalkit::EmbeddingSet s{label, {}};
  for (const auto& r : rows) s.vectors.push_back({r});
  return s;
}

std::string topology_oracle() {
  using namespace evalkit;
  gen::Rng rng(4242);
  for (int round = 0; round < 100; ++round) {
    const auto n = static_cast<std::size_t>(rng.integer(3, 10));
    const auto d = static_cast<std::size_t>(rng.integer(2, 8));
    oracle::Matrix x, anchor, other, seeds;
    for (std::size_t i = 0; i < n; ++i) x.push_back(rng.gaussian(d));
    for (int i = 0, m = rng.integer(1, 10); i < m; ++i) anchor.push_back(rng.gaussian(d));
    for (int i = 0, m = rng.integer(2, 10); i < m; ++i) other.push_back(rng.gaussian(d));
    for (std::size_t i = 0; i < n; ++i) seeds.push_back(rng.gaussian(d));
    const int p = rng.integer(1, static_cast<int>(d));
    auto xs = make_set("x", x);
    auto as = make_set("a", anchor);
    std::vector<EmbeddingVector> sv;
    for (const auto& s : seeds) sv.push_back({s});
    const std::string where = " (set " + std::to_string(round) + ")";

    expect(close(effective_rank(xs), oracle::effective_rank(x), 1e-9), "effective_rank" + where);
    expect(close(centroid_shift(xs, as), oracle::shift(x, anchor), 1e-9), "centroid_shift" + where);
    expect(close(diversity(xs), oracle::diversity(x), 1e-9), "diversity" + where);
    auto c = cse(xs, as);
    expect(c && close(*c, oracle::diversity(x) / oracle::shift(x, anchor), 1e-9), "cse" + where);
    expect(close(directional_similarity(xs, sv), oracle::directional_similarity(x, seeds), 1e-9),
           "directional_similarity" + where);
    expect(close(aligned_variance({xs, make_set("o", other)}, "x", p), oracle::aligned_variance({x, other}, 0, p), 1e-9),
           "aligned_variance" + where);
  }

  oracle::Matrix cross;
  for (std::size_t i = 0; i < 4; ++i) {
    for (double sign : {1.0, -1.0}) {
      std::vector<double> r(4, 0.0);
      r[i] = sign;
      cross.push_back(r);
    }
  }
  expect(std::abs(effective_rank(make_set("eq", cross)) - 4.0) <= 1e-9, "equal-spectrum effective rank != 4");
  expect(std::abs(centroid_shift(make_set("b", {{3, 4}}), make_set("a", {{0, 0}})) - 5.0) <= 1e-15, "shift != 5");
  expect(std::abs(directional_similarity(make_set("anti", {{2, 1}, {0, 1}}), EmbeddingVector{{1, 1}}) + 1.0) <= 1e-12,
         "antipodal dir_sim != -1");
  expect(!cse(make_set("b", {{5e-7, 0}, {5e-7, 1e-7}}), make_set("a", {{0, 0}})).has_value(),
         "cse defined below eps_shift");
  return "100 random sets within 1e-9, anchors hold";
}

// ---- 5 ----------------------------------------------------------------------

std::string parser_closure() {
  using hazardgen::Method;
  auto demo = load_demo();
  llm::MockLlmBackend mock;
  embedding::Embedder embedder(std::make_shared<embedding::MockEmbeddingProvider>());
  std::vector<std::string> ids;
  for (const auto& [id, r] : demo.rules) ids.push_back(id);

  std::size_t hazards = 0, fsrs = 0, judged = 0, audits = 0;
  for (const auto& seed : demo.seeds) {
    std::vector<hazardgen::FactorCombination> combos;
    for (auto& c : hazardgen::enumerate_subsets(ids, 3)) combos.push_back({seed.id, c});
    auto jobs = hazardgen::plan_ours(seed, combos, demo.rules, demo.spec);
    jobs.push_back(hazardgen::plan_baseline(seed, Method::Vanilla, demo.spec));
    jobs.push_back(hazardgen::plan_baseline(seed, Method::Cot, demo.spec));
    auto scenarios = hazardgen::run_jobs(mock, jobs, {}, 4);
    hazards += scenarios.size();

    evalkit::ScenarioBlocks blocks;
    std::vector<fsrsynth::FSRecord> records;
    for (const auto& h : scenarios) {
      auto text = h.description + "\nHazard mechanism: " + h.mechanism;
      (h.method == Method::Vanilla ? blocks.method_a : h.method == Method::Cot ? blocks.method_b : blocks.method_c)
          .push_back(text);
      auto ctx = fsrsynth::retrieve_clauses(h, demo.clauses, embedder, 0.0);
      auto result = fsrsynth::synthesize(mock, h, ctx, demo.spec, {});
      fsrs += result.records.size();
      if (records.size() < 6) records.insert(records.end(), result.records.begin(), result.records.end());
    }
    judged += evalkit::parse_scenario_judgment(
                  mock.complete(evalkit::build_scenario_judge_prompt(seed.text, blocks, demo.spec), {}))
                  .size();
    evalkit::parse_fsr_audit(mock.complete(evalkit::build_fsr_audit_prompt(seed.text, records, demo.spec), {}));
    ++audits;
  }

  using hazardgen::ParseMode;
  expect_error([] { hazardgen::parse_hazard("", ParseMode::Strict); }, ErrorCode::EmptyResponse, "empty hazard");
  expect_error([] { hazardgen::parse_hazard("one line", ParseMode::Strict); }, ErrorCode::WrongLineCount,
               "one-line hazard");
  expect_error([] { hazardgen::parse_hazard("a\nMechanism: b", ParseMode::Strict); },
               ErrorCode::MissingMechanismPrefix, "hazard without prefix");
  expect_error([] { fsrsynth::parse_fsr("FSR-ID: 1\nTITLE: t\nTRIGGER: a\nEXIT: b\n", "H", {}); },
               ErrorCode::FsrParseError, "fsr without REQUIREMENT");
  expect_error(
      [] {
        evalkit::parse_scenario_judgment("[Method A Scenario Evaluation]\nScenario 1: x\n"
                                         "Physical Reliability: 11 pts, Long-tail Risk: 5 pts, Safety Requirements: 6 pts\n");
      },
      ErrorCode::ScoreOutOfRange, "judge score 11");
  expect_error([] { evalkit::parse_scenario_judgment("[Method A Scenario Evaluation]\nScenario 1: x\n"); },
               ErrorCode::JudgeParseError, "judge entry without scores");
  expect_error(
      [] {
        evalkit::parse_fsr_audit("**3. Final Scores**\n **Capability Compliance (CC)** | 9/10 | a\n"
                                 " **Scenario Risk Coverage (PRC)** | 9/10 | b\n");
      },
      ErrorCode::MissingMetric, "audit without LRC");
  return std::to_string(hazards) + " hazards, " + std::to_string(fsrs) + " FSRs, " + std::to_string(judged) +
         " judged scenarios, " + std::to_string(audits) + " audits; 7 malformations rejected";
}

// ---- 6 ----------------------------------------------------------------------

std::string template_fidelity() {
  auto demo = load_demo();
  const auto& s01 = demo.seeds.front();
  auto golden = [](const std::string& name) {
    return testing::slurp(fs::path(ARGOS_GOLDEN_DIR) / (name + ".txt"));
  };
  auto has = [](const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; };

  auto ours = hazardgen::build_prompt_ours(s01, {"S01", {"T01", "U02"}}, demo.rules, demo.spec);
  auto vanilla = hazardgen::build_prompt_vanilla(s01, demo.spec);
  auto cot = hazardgen::build_prompt_cot(s01, demo.spec);
  evalkit::ScenarioBlocks blocks{{"The robot carries soup past the sofa.", "Hazard mechanism: spill."},
                                 {},
                                 {"The child darts into the path while the arm extends.\nHazard mechanism: release timing fails."}};
  auto judge = evalkit::build_scenario_judge_prompt(s01.text, blocks, demo.spec);
  auto fsr = [](std::string id, std::string title, std::string req, std::string trig, std::string exit,
                std::vector<std::string> cites) {
    fsrsynth::FSRecord r;
    r.id = id;
    r.title = title;
    r.requirement = req;
    r.trigger = trig;
    r.exit = exit;
    r.cited_clause_ids = cites;
    return r;
  };
  auto audit = evalkit::build_fsr_audit_prompt(
      s01.text,
      {fsr("FSR-001", "Reduce speed near a child", "The robot shall limit chassis speed to 0.3 m/s.",
           "Child within 1.5 m.", "Child beyond 2 m for 3 s.", {"C01", "C03"}),
       fsr("FSR-002", "Hold hot liquids level", "The robot shall keep the cup tilt under 5 degrees.",
           "Liquid above 50 C.", "Cup released.", {})},
      demo.spec);

  expect(has(ours, "EXACTLY TWO LINES"), "ours lacks EXACTLY TWO LINES");
  expect(has(ours, "STRICT CLOSED WORLD") && has(vanilla, "STRICT CLOSED WORLD"), "STRICT CLOSED WORLD missing");
  expect(has(ours, "Hazard mechanism:") && has(vanilla, "Hazard mechanism:"), "Hazard mechanism: missing");
  expect(has(cot, "[REASONING INSTRUCTIONS]") && has(cot, "[ANALYSIS]"), "CoT reasoning block missing");
  expect(has(audit, "Principal Functional Safety Auditor"), "auditor role missing");
  expect(has(judge, "Physical Reliability: X pts"), "score line template missing");

  const std::pair<const char*, const std::string*> files[] = {{"ours_S01_T01_U02", &ours}, {"vanilla_S01", &vanilla},
                                                              {"cot_S01", &cot},           {"scenario_judge", &judge},
                                                              {"fsr_audit", &audit}};
  for (const auto& [name, text] : files) expect(*text == golden(name), std::string("golden mismatch: ") + name);
  return "6 anchors, 5 golden files";
}

// ---- 7 ----------------------------------------------------------------------

std::string default_constants() {
  pipeline::RunConfig cfg;
  expect(cfg.tau_attr == 0.7, "tau_attr default is not 0.7");
  expect(cfg.k_max == 3, "k_max default is not 3");
  return "tau_attr=0.7 k_max=3";
}

// ---- 8 ----------------------------------------------------------------------

std::string live_smoke(const std::string& config_path) {
  testing::TempDir dir;
  pipeline::KeyValues overrides{{"run_dir", dir.path().string()}};
  auto probe = pipeline::load_config(config_path, overrides);
  auto seeds = corpus::load_seeds(probe.corpus.seeds);
  expect(!seeds.empty(), "no seeds");
  const char* wanted = std::getenv("ARGOS_LIVE_SEED");
  overrides["seed_filter"] = wanted && *wanted ? wanted : seeds.front().id;
  auto cfg = pipeline::load_config(config_path, overrides);

  pipeline::Pipeline p(cfg, pipeline::make_backends(cfg));
  p.ground();
  p.generate(hazardgen::Method::Ours);
  p.synthesize(fsrsynth::Arm::Full);
  auto hazards = line_count(testing::slurp(dir.path() / "hazards_ours.jsonl"));
  auto fsrs = line_count(testing::slurp(dir.path() / "fsr_full.jsonl"));
  expect(hazards >= 1, "no hazard scenarios");
  expect(fsrs >= 1, "no FSR records");
  return "seed " + overrides["seed_filter"] + ": " + std::to_string(hazards) + " hazards, " + std::to_string(fsrs) +
         " FSRs";
}

bool report(int id, const std::string& name, const std::function<std::string()>& check) {
  try {
    auto detail = check();
    std::cout << "PASS " << id << " " << name << ": " << detail << std::endl;
    return true;
  } catch (const Failure& f) {
    std::cout << "FAIL " << id << " " << name << ": " << f.why << std::endl;
  } catch (const Error& e) {
    std::cout << "FAIL " << id << " " << name << ": " << to_string(e.code()) << ": " << e.detail() << std::endl;
  } catch (const std::exception& e) {
    std::cout << "FAIL " << id << " " << name << ": " << e.what() << std::endl;
  }
  return false;
}

}  // namespace

int main() {
  bool ok = true;
  ok &= report(1, "mock end-to-end determinism", mock_determinism);
  ok &= report(2, "enumeration oracle", enumeration_oracle);
  ok &= report(3, "retrieval thresholding", retrieval_thresholding);
  ok &= report(4, "topology oracle equivalence", topology_oracle);
  ok &= report(5, "parser closure", parser_closure);
  ok &= report(6, "template fidelity", template_fidelity);
  ok &= report(7, "default constants", default_constants);

  const char* live = std::getenv("ARGOS_LIVE_CONFIG");
  if (live && *live) {
    report(8, "live-mode smoke (non-gating)", [&] { return live_smoke(live); });
  } else {
    std::cout << "SKIP 8 live-mode smoke (non-gating): set ARGOS_LIVE_CONFIG to a live config file" << std::endl;
  }
  return ok ? 0 : 1;
}
