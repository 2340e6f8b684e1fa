#include "argos/pipeline.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "argos/error.hpp"
#include "argos/evalkit.hpp"
#include "argos/grounding.hpp"
#include "argos/parallel.hpp"
#include "argos/report.hpp"
#include "argos/util.hpp"
#include "json.hpp"

namespace argos::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;
using hazardgen::HazardScenario;
using hazardgen::Method;

namespace {

std::string env_token(const char* primary) {
  for (const char* name : {primary, "OPENAI_API_KEY"}) {
    if (const char* v = std::getenv(name); v && *v) return v;
  }
  return {};
}

std::shared_ptr<llm::LlmBackend> make_llm(const BackendConfig& b, int retries, const char* token_var) {
  if (b.backend == "mock") return std::make_shared<llm::MockLlmBackend>(b.model);
  llm::ChatBackendOptions opts{b.endpoint, b.model, env_token(token_var), {}};
  opts.retry.max_retries = retries;
  return std::make_shared<llm::ChatCompletionsBackend>(opts, http::make_default_transport());
}

llm::GenerationParams params_of(const BackendConfig& b) { return {b.temperature, b.max_tokens, b.seed}; }

std::string digest(std::initializer_list<std::string> parts) {
  std::string joined;
  for (const auto& p : parts) {
    joined += p;
    joined.push_back('\x1f');
  }
  return sha256_hex(joined);
}

std::string backend_identity(const BackendConfig& b) {
  auto snap = format_double(b.temperature) + "/" + std::to_string(b.max_tokens) + "/" +
              (b.seed ? std::to_string(*b.seed) : std::string("-"));
  return b.backend + "|" + b.endpoint + "|" + b.model + "|" + snap;
}

std::string embedding_identity(const RunConfig& c) {
  return c.embedding.provider + "|" + c.embedding.endpoint + "|" + c.embedding.model + "|" +
         std::to_string(c.embedding.dims);
}

std::string stage_of(Method m) { return "generate." + std::string(hazardgen::to_string(m)); }
std::string stage_of(fsrsynth::Arm a) { return "synthesize." + std::string(fsrsynth::to_string(a)); }
std::string hazards_file(Method m) { return "hazards_" + std::string(hazardgen::to_string(m)) + ".jsonl"; }
std::string fsr_file(fsrsynth::Arm a) { return "fsr_" + std::string(fsrsynth::to_string(a)) + ".jsonl"; }

std::string warning_line(const std::string& message) {
  ojson j;
  j["message"] = message;
  return j.dump();
}

std::vector<std::string> non_empty_lines(const fs::path& path) {
  std::vector<std::string> out;
  for (auto& l : split_lines(read_file(path))) {
    if (!trim(l).empty()) out.push_back(std::move(l));
  }
  return out;
}

// Wraps module errors with the stage that raised them.
template <typename Fn>
void with_context(const std::string& stage, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MissingStage || e.code() == ErrorCode::ConfigError) throw;
    throw Error(e.code(), stage + ": " + e.detail(), e.status());
  }
}

constexpr Method kMethods[] = {Method::Vanilla, Method::Cot, Method::Ours};
constexpr fsrsynth::Arm kArms[] = {fsrsynth::Arm::Full, fsrsynth::Arm::NoIso, fsrsynth::Arm::IsoOnly,
                                   fsrsynth::Arm::Vanilla};

}  // namespace

Backends make_backends(const RunConfig& cfg) {
  Backends b;
  if (cfg.embedding.provider == "mock") {
    b.embedding = std::make_shared<embedding::MockEmbeddingProvider>(cfg.embedding.dims ? cfg.embedding.dims : 64,
                                                                     cfg.embedding.model);
  } else {
    embedding::RemoteEmbeddingOptions opts{cfg.embedding.endpoint, cfg.embedding.model, cfg.embedding.dims,
                                           env_token("ARGOS_EMBEDDING_API_KEY"), {}};
    opts.retry.max_retries = cfg.retries;
    b.embedding = std::make_shared<embedding::RemoteEmbeddingProvider>(opts, http::make_default_transport());
  }
  b.llm = make_llm(cfg.llm, cfg.retries, "ARGOS_LLM_API_KEY");
  const char* judge_var = std::getenv("ARGOS_JUDGE_API_KEY") ? "ARGOS_JUDGE_API_KEY" : "ARGOS_LLM_API_KEY";
  b.judge = make_llm(cfg.judge, cfg.retries, judge_var);
  return b;
}

RunLock::RunLock(const fs::path& run_dir) {
  auto path = run_dir / ".lock";
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorCode::LockHeld, path.string());
  }
}

RunLock::~RunLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

Pipeline::Pipeline(RunConfig cfg, Backends backends) : cfg_(std::move(cfg)), backends_(std::move(backends)) {
  if (cfg_.run_dir.empty()) throw Error(ErrorCode::ConfigError, "run_dir");
  std::error_code ec;
  fs::create_directories(cfg_.run_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + cfg_.run_dir.string());
  lock_ = std::make_unique<RunLock>(cfg_.run_dir);

  auto hash_of = [](const fs::path& p) { return sha256_hex(read_file(p)); };
  rules_ = corpus::load_rules(cfg_.corpus.rules);
  seeds_ = corpus::load_seeds(cfg_.corpus.seeds);
  std::sort(seeds_.begin(), seeds_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  clauses_ = corpus::load_clauses(cfg_.corpus.clauses);
  spec_ = corpus::load_robot_spec(cfg_.corpus.robot_spec);
  input_hashes_["rules"] = hash_of(cfg_.corpus.rules);
  input_hashes_["seeds"] = hash_of(cfg_.corpus.seeds);
  input_hashes_["clauses"] = hash_of(cfg_.corpus.clauses);
  input_hashes_["robot_spec"] = hash_of(cfg_.corpus.robot_spec);
  input_hashes_["aliases"] = "";
  if (!cfg_.corpus.aliases.empty()) {
    aliases_ = corpus::load_aliases(cfg_.corpus.aliases, rules_);
    input_hashes_["aliases"] = hash_of(cfg_.corpus.aliases);
  }

  if (cfg_.embedding.cache) {
    cache_ = std::make_shared<embedding::EmbeddingCache>();
    cache_->load(cfg_.run_dir / "embedding_cache.jsonl");
  }
  embedder_ = std::make_unique<embedding::Embedder>(backends_.embedding, cache_, cfg_.max_in_flight);
  load_manifest();
}

// ---- manifest & freshness --------------------------------------------------

std::string Pipeline::expected_fingerprint(const std::string& stage) const {
  const auto& in = input_hashes_;
  const std::string llm_id = backend_identity(cfg_.llm);
  if (stage == "ground") {
    return digest({stage, in.at("rules"), in.at("seeds"), in.at("aliases"), embedding_identity(cfg_),
                   format_double(cfg_.tau_attr), cfg_.grounding_mode, cfg_.grounding_mode == "llm" ? llm_id : "",
                   cfg_.seed_filter});
  }
  if (stage == "generate.ours") {
    std::string k_max = std::to_string(cfg_.k_max);
    if (auto it = stages_.find(stage); it != stages_.end() && it->second.params.contains("k_max")) {
      k_max = it->second.params.at("k_max");
    }
    return digest({stage, expected_fingerprint("ground"), in.at("robot_spec"), k_max, llm_id});
  }
  if (stage == "generate.vanilla" || stage == "generate.cot") {
    return digest({stage, in.at("seeds"), in.at("robot_spec"), llm_id, cfg_.seed_filter});
  }
  if (stage.starts_with("synthesize.")) {
    auto arm = fsrsynth::parse_arm(stage.substr(std::string("synthesize.").size()));
    bool clauses = fsrsynth::uses_clauses(arm);
    return digest({stage, expected_fingerprint(stage_of(fsrsynth::source_method(arm))), in.at("robot_spec"),
                   clauses ? in.at("clauses") : "", clauses ? format_double(cfg_.tau_reg) : "",
                   clauses ? embedding_identity(cfg_) : "", llm_id});
  }
  if (stage == "evaluate") {
    std::string upstream;
    for (const auto& s : evaluate_inputs()) upstream += s + "=" + expected_fingerprint(s) + ";";
    return digest({stage, upstream, embedding_identity(cfg_), backend_identity(cfg_.judge), in.at("seeds"),
                   in.at("robot_spec"), cfg_.eval_anchor, cfg_.eval_embed_text, std::to_string(cfg_.aligned_dims),
                   format_double(cfg_.eps_shift)});
  }
  if (stage == "report") return digest({stage, expected_fingerprint("evaluate")});
  throw Error(ErrorCode::InvalidArgument, "unknown stage " + stage);
}

bool Pipeline::fresh(const std::string& stage) const {
  auto it = stages_.find(stage);
  return it != stages_.end() && it->second.fingerprint == expected_fingerprint(stage);
}

void Pipeline::require(const std::string& stage) const {
  if (!fresh(stage)) throw Error(ErrorCode::MissingStage, stage);
}

std::vector<std::string> Pipeline::evaluate_inputs() const {
  std::vector<std::string> out;
  for (auto m : kMethods) {
    if (fresh(stage_of(m))) out.push_back(stage_of(m));
  }
  for (auto a : kArms) {
    if (fresh(stage_of(a))) out.push_back(stage_of(a));
  }
  return out;
}

std::string Pipeline::run_id() const {
  std::string material;
  for (const auto& [k, v] : cfg_.snapshot()) {
    if (k.starts_with("corpus.") || k.starts_with("concurrency.")) continue;
    material += k + "=" + v + "\n";
  }
  for (const auto& [k, v] : input_hashes_) material += k + ":" + v + "\n";
  return sha256_hex(material).substr(0, 16);
}

void Pipeline::load_manifest() {
  auto path = cfg_.run_dir / "manifest.json";
  if (!fs::exists(path)) return;
  auto j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("stages")) {
    throw Error(ErrorCode::MalformedRecord, path.string());
  }
  try {
    for (const auto& [name, s] : j["stages"].items()) {
      StageRecord rec;
      rec.fingerprint = s.value("fingerprint", "");
      if (s.contains("records")) {
        for (const auto& [file, n] : s["records"].items()) rec.records[file] = n.get<std::size_t>();
      }
      if (s.contains("params")) {
        for (const auto& [key, v] : s["params"].items()) rec.params[key] = v.get<std::string>();
      }
      stages_[name] = std::move(rec);
    }
  } catch (const json::exception&) {
    throw Error(ErrorCode::MalformedRecord, path.string());
  }
}

void Pipeline::save_manifest() const {
  ojson j;
  j["run_id"] = run_id();
  ojson config = ojson::object();
  for (const auto& [k, v] : cfg_.snapshot()) config[k] = v;
  j["config"] = config;
  ojson inputs = ojson::object();
  for (const auto& [k, v] : input_hashes_) inputs[k] = v;
  j["inputs"] = inputs;
  ojson stages = ojson::object();
  for (const auto& [name, rec] : stages_) {
    ojson s;
    s["done"] = true;
    s["fingerprint"] = rec.fingerprint;
    ojson records = ojson::object();
    for (const auto& [file, n] : rec.records) records[file] = n;
    s["records"] = records;
    if (!rec.params.empty()) {
      ojson params = ojson::object();
      for (const auto& [key, v] : rec.params) params[key] = v;
      s["params"] = params;
    }
    stages[name] = s;
  }
  j["stages"] = stages;
  write_file_atomic(cfg_.run_dir / "manifest.json", j.dump(2) + "\n");
}

void Pipeline::finish_stage(const std::string& stage, std::map<std::string, std::size_t> counts,
                            std::map<std::string, std::string> params) {
  stages_[stage] = {"", std::move(counts), std::move(params)};
  stages_[stage].fingerprint = expected_fingerprint(stage);
  // Anything no longer consistent with the current inputs loses its flag.
  for (auto it = stages_.begin(); it != stages_.end();) {
    it = fresh(it->first) ? std::next(it) : stages_.erase(it);
  }
  if (cache_) cache_->save(cfg_.run_dir / "embedding_cache.jsonl");
  save_manifest();
}

void Pipeline::write_records(const std::string& file, const std::vector<std::string>& lines,
                             std::map<std::string, std::size_t>& counts) const {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  write_file_atomic(cfg_.run_dir / file, out);
  counts[file] = lines.size();
}

void Pipeline::write_calls(const std::string& file, const llm::CallLog& log,
                           std::map<std::string, std::size_t>& counts) const {
  std::vector<std::string> lines;
  for (const auto& c : log.sorted()) {
    ojson j;
    j["key"] = c.key;
    j["model"] = c.model;
    j["prompt_sha256"] = c.prompt_sha256;
    j["response_sha256"] = c.response_sha256;
    lines.push_back(j.dump());
  }
  write_records(file, lines, counts);
}

std::vector<corpus::SeedScenario> Pipeline::selected_seeds() const {
  if (cfg_.seed_filter.empty()) return seeds_;
  std::vector<corpus::SeedScenario> out;
  for (const auto& s : seeds_) {
    if (s.id == cfg_.seed_filter) out.push_back(s);
  }
  if (out.empty()) throw Error(ErrorCode::ConfigError, "seed_filter: no seed with id " + cfg_.seed_filter);
  return out;
}

std::vector<HazardScenario> Pipeline::read_hazards(Method m) const {
  std::vector<HazardScenario> out;
  for (const auto& line : non_empty_lines(cfg_.run_dir / hazards_file(m))) {
    out.push_back(hazardgen::parse_hazard_record(line));
  }
  return out;
}

// ---- stages ----------------------------------------------------------------

void Pipeline::ground() {
  with_context("ground", [&] {
    auto seeds = selected_seeds();
    llm::CallLog calls;
    const bool use_llm = cfg_.grounding_mode == "llm";
    auto units = parallel_map(seeds.size(), use_llm ? cfg_.max_in_flight : 1, [&](std::size_t i) {
      if (use_llm) return grounding::extract_units_llm(seeds[i], *backends_.llm, params_of(cfg_.llm), &calls);
      return grounding::extract_units_lexicon(seeds[i], rules_, aliases_);
    });

    std::vector<std::string> match_lines, unit_lines, warnings;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      auto matches = grounding::match_attributes(units[i], rules_, *embedder_, cfg_.tau_attr);
      std::set<std::string> matched_units;
      for (const auto& m : matches) {
        matched_units.insert(m.unit.text);
        ojson j;
        j["seed_id"] = seeds[i].id;
        j["unit"] = m.unit.text;
        j["rule_id"] = m.rule_id;
        j["similarity"] = m.similarity;
        match_lines.push_back(j.dump());
      }
      for (const auto& u : units[i]) {
        ojson j;
        j["seed_id"] = seeds[i].id;
        j["unit"] = u.text;
        j["source"] = grounding::to_string(u.source);
        j["matched"] = matched_units.contains(u.text);
        unit_lines.push_back(j.dump());
      }
      if (units[i].empty()) warnings.push_back(warning_line(seeds[i].id + ": no semantic units extracted"));
      else if (matches.empty()) warnings.push_back(warning_line(seeds[i].id + ": no unit exceeded tau_attr"));
    }

    std::map<std::string, std::size_t> counts;
    write_records("ground.jsonl", match_lines, counts);
    write_records("ground_units.jsonl", unit_lines, counts);
    write_records("ground.warnings.jsonl", warnings, counts);
    if (use_llm) write_calls("ground.calls.jsonl", calls, counts);
    finish_stage("ground", std::move(counts));
  });
}

void Pipeline::generate(Method method) {
  const std::string stage = stage_of(method);
  if (method == Method::Ours) require("ground");
  with_context(stage, [&] {
    auto seeds = selected_seeds();
    std::vector<hazardgen::HazardJob> jobs;
    std::vector<std::string> warnings;
    if (method == Method::Ours) {
      std::map<std::string, std::vector<grounding::AttributeMatch>> by_seed;
      for (const auto& line : non_empty_lines(cfg_.run_dir / "ground.jsonl")) {
        auto j = json::parse(line);
        by_seed[j.at("seed_id").get<std::string>()].push_back(
            {{j.at("unit").get<std::string>()}, j.at("rule_id").get<std::string>(), j.at("similarity").get<double>()});
      }
      for (const auto& seed : seeds) {
        auto it = by_seed.find(seed.id);
        if (it == by_seed.end()) {
          warnings.push_back(warning_line(seed.id + ": no attribute matches, no hazards generated"));
          continue;
        }
        auto combos = hazardgen::enumerate_combinations(it->second, cfg_.k_max, seed.id);
        auto planned = hazardgen::plan_ours(seed, combos, rules_, spec_);
        jobs.insert(jobs.end(), planned.begin(), planned.end());
      }
    } else {
      for (const auto& seed : seeds) jobs.push_back(hazardgen::plan_baseline(seed, method, spec_));
    }

    llm::CallLog calls;
    auto hazards = hazardgen::run_jobs(*backends_.llm, jobs, params_of(cfg_.llm), cfg_.max_in_flight, &calls);
    std::vector<std::string> lines;
    for (const auto& h : hazards) lines.push_back(hazardgen::serialize_hazard(h));

    const std::string base = "hazards_" + std::string(hazardgen::to_string(method));
    std::map<std::string, std::size_t> counts;
    write_records(base + ".jsonl", lines, counts);
    write_records(base + ".warnings.jsonl", warnings, counts);
    write_calls(base + ".calls.jsonl", calls, counts);
    std::map<std::string, std::string> params;
    if (method == Method::Ours) params["k_max"] = std::to_string(cfg_.k_max);
    finish_stage(stage, std::move(counts), std::move(params));
  });
}

void Pipeline::synthesize(fsrsynth::Arm arm) {
  const std::string stage = stage_of(arm);
  require(stage_of(fsrsynth::source_method(arm)));
  with_context(stage, [&] {
    auto hazards = read_hazards(fsrsynth::source_method(arm));
    llm::CallLog calls;
    struct Out {
      fsrsynth::ConstraintContext ctx;
      fsrsynth::FsrParseResult result;
    };
    auto outs = parallel_map(hazards.size(), cfg_.max_in_flight, [&](std::size_t i) {
      const auto& h = hazards[i];
      fsrsynth::ConstraintContext ctx{h.id, {}};
      if (fsrsynth::uses_clauses(arm)) ctx = fsrsynth::retrieve_clauses(h, clauses_, *embedder_, cfg_.tau_reg);
      auto result = fsrsynth::synthesize(*backends_.llm, h, ctx, spec_, params_of(cfg_.llm), &calls);
      return Out{std::move(ctx), std::move(result)};
    });

    std::vector<std::string> lines, ctx_lines, warnings;
    for (const auto& o : outs) {
      for (const auto& r : o.result.records) lines.push_back(fsrsynth::serialize_fsr(r));
      for (const auto& w : o.result.warnings) warnings.push_back(warning_line(w));
      ojson j;
      j["hazard_id"] = o.ctx.hazard_id;
      ojson clauses = ojson::array();
      for (const auto& rc : o.ctx.clauses) {
        ojson c;
        c["id"] = rc.clause.id;
        c["similarity"] = rc.similarity;
        clauses.push_back(c);
      }
      j["clauses"] = clauses;
      ctx_lines.push_back(j.dump());
    }

    const std::string base = "fsr_" + std::string(fsrsynth::to_string(arm));
    std::map<std::string, std::size_t> counts;
    write_records(base + ".jsonl", lines, counts);
    write_records(base + ".context.jsonl", ctx_lines, counts);
    write_records(base + ".warnings.jsonl", warnings, counts);
    write_calls(base + ".calls.jsonl", calls, counts);
    finish_stage(stage, std::move(counts));
  });
}

void Pipeline::evaluate() {
  auto inputs = evaluate_inputs();
  std::vector<Method> methods;
  for (auto m : kMethods) {
    if (std::find(inputs.begin(), inputs.end(), stage_of(m)) != inputs.end()) methods.push_back(m);
  }
  if (methods.empty()) throw Error(ErrorCode::MissingStage, "generate");

  with_context("evaluate", [&] {
    std::vector<std::string> warnings;
    auto seeds = selected_seeds();
    std::map<std::string, const corpus::SeedScenario*> seed_by_id;
    for (const auto& s : seeds) seed_by_id[s.id] = &s;

    std::map<Method, std::vector<HazardScenario>> hazards;
    for (auto m : methods) hazards[m] = read_hazards(m);

    // Topology over hazard embeddings.
    auto text_of = [&](const HazardScenario& h) {
      return cfg_.eval_embed_text == "description" ? h.description : fsrsynth::hazard_text(h);
    };
    std::vector<std::string> seed_texts;
    for (const auto& s : seeds) seed_texts.push_back(s.text);
    auto seed_vecs = embedder_->embed_all(seed_texts);
    std::map<std::string, embedding::EmbeddingVector> seed_vec_by_id;
    for (std::size_t i = 0; i < seeds.size(); ++i) seed_vec_by_id[seeds[i].id] = seed_vecs[i];

    std::vector<evalkit::EmbeddingSet> sets;
    std::vector<std::vector<embedding::EmbeddingVector>> set_seeds;
    std::vector<std::string> csv_lines;
    for (auto m : methods) {
      std::vector<std::string> texts;
      for (const auto& h : hazards[m]) texts.push_back(text_of(h));
      evalkit::EmbeddingSet set{std::string(hazardgen::to_string(m)), embedder_->embed_all(texts)};
      std::vector<embedding::EmbeddingVector> anchors;
      for (std::size_t i = 0; i < hazards[m].size(); ++i) {
        anchors.push_back(seed_vec_by_id.at(hazards[m][i].seed_id));
        std::string row = set.label + "," + hazards[m][i].id;
        for (double x : set.vectors[i].values) row += "," + format_double(x);
        csv_lines.push_back(row);
      }
      sets.push_back(std::move(set));
      set_seeds.push_back(std::move(anchors));
    }
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      std::string row = "seed," + seeds[i].id;
      for (double x : seed_vecs[i].values) row += "," + format_double(x);
      csv_lines.push_back(row);
    }

    evalkit::EmbeddingSet anchor{"seed", seed_vecs};
    if (cfg_.eval_anchor == "vanilla") {
      auto it = std::find_if(sets.begin(), sets.end(), [](const auto& s) { return s.label == "vanilla"; });
      if (it != sets.end() && !it->vectors.empty()) {
        anchor = *it;
      } else {
        warnings.push_back(warning_line("vanilla hazards unavailable, topology anchored on seed embeddings"));
      }
    }

    auto guarded = [&](const std::string& what, auto&& fn) -> std::optional<double> {
      try {
        return fn();
      } catch (const Error& e) {
        warnings.push_back(warning_line(what + ": " + std::string(to_string(e.code())) + " " + e.detail()));
        return std::nullopt;
      }
    };
    std::vector<std::string> topo_lines;
    for (std::size_t s = 0; s < sets.size(); ++s) {
      const auto& set = sets[s];
      evalkit::TopologyReport r;
      r.label = set.label;
      r.anchor_label = anchor.label;
      r.eff_rank = guarded(set.label + " eff_rank", [&] { return evalkit::effective_rank(set); });
      r.shift = guarded(set.label + " shift", [&] { return evalkit::centroid_shift(set, anchor); });
      r.aligned_var =
          guarded(set.label + " aligned_var", [&] { return evalkit::aligned_variance(sets, set.label, cfg_.aligned_dims); });
      if (r.shift && *r.shift >= cfg_.eps_shift) {
        r.cse = guarded(set.label + " cse", [&] { return evalkit::diversity(set) / *r.shift; });
      }
      std::size_t excluded = 0;
      r.dir_sim = guarded(set.label + " dir_sim",
                          [&] { return evalkit::directional_similarity(set, set_seeds[s], &excluded); });
      if (excluded) {
        warnings.push_back(warning_line(set.label + " dir_sim: " + std::to_string(excluded) +
                                        " hazard(s) identical to their seed excluded"));
      }
      topo_lines.push_back(evalkit::serialize_topology(r));
    }

    // Scenario judge: Method A = vanilla, B = cot, C = ours.
    llm::CallLog calls;
    const auto judge_params = params_of(cfg_.judge);
    struct SeedJudgment {
      std::vector<std::string> lines;
      std::vector<evalkit::JudgeResult> results;
    };
    auto scenario_judgments = parallel_map(seeds.size(), cfg_.max_in_flight, [&](std::size_t si) {
      const auto& seed = seeds[si];
      std::map<std::string, std::vector<const HazardScenario*>> block_hazards;
      evalkit::ScenarioBlocks blocks;
      const std::pair<const char*, Method> labels[] = {{"A", Method::Vanilla}, {"B", Method::Cot}, {"C", Method::Ours}};
      for (const auto& [label, m] : labels) {
        if (!hazards.contains(m)) continue;
        auto& list = label[0] == 'A' ? blocks.method_a : label[0] == 'B' ? blocks.method_b : blocks.method_c;
        for (const auto& h : hazards[m]) {
          if (h.seed_id != seed.id) continue;
          list.push_back(h.description + " Hazard mechanism: " + h.mechanism);
          block_hazards[label].push_back(&h);
        }
      }
      SeedJudgment out;
      if (block_hazards.empty()) return out;
      auto prompt = evalkit::build_scenario_judge_prompt(seed.text, blocks, spec_);
      auto raw = llm::generate(*backends_.judge, prompt, judge_params, &calls, seed.id + "/scenarios");
      auto digest_hex = sha256_hex(prompt);
      std::set<std::string> seen;
      for (auto& r : evalkit::parse_scenario_judgment(raw)) {
        auto& list = block_hazards[r.method];
        std::size_t ordinal = std::stoul(r.target_id);
        if (ordinal < 1 || ordinal > list.size()) {
          throw Error(ErrorCode::JudgeParseError, seed.id + ": Method " + r.method + " Scenario " + r.target_id);
        }
        const auto* h = list[ordinal - 1];
        if (!seen.insert(h->id).second) continue;
        r.target_id = h->id;
        r.method = std::string(hazardgen::to_string(h->method));
        out.lines.push_back(evalkit::serialize_judge(r, digest_hex));
        out.results.push_back(std::move(r));
      }
      return out;
    });

    std::vector<std::string> judge_lines;
    std::vector<evalkit::JudgeResult> scenario_results;
    std::set<std::string> judged;
    for (auto& sj : scenario_judgments) {
      judge_lines.insert(judge_lines.end(), sj.lines.begin(), sj.lines.end());
      for (auto& r : sj.results) {
        judged.insert(r.target_id);
        scenario_results.push_back(std::move(r));
      }
    }
    for (auto m : methods) {
      for (const auto& h : hazards[m]) {
        if (!judged.contains(h.id)) warnings.push_back(warning_line(h.id + ": no score from the scenario judge"));
      }
    }

    // FSR audit per seed and arm.
    struct AuditJob {
      std::string seed_id;
      fsrsynth::Arm arm;
      std::vector<fsrsynth::FSRecord> records;
    };
    std::vector<AuditJob> audit_jobs;
    for (auto arm : kArms) {
      if (std::find(inputs.begin(), inputs.end(), stage_of(arm)) == inputs.end()) continue;
      std::map<std::string, std::string> seed_of_hazard;
      for (const auto& h : read_hazards(fsrsynth::source_method(arm))) seed_of_hazard[h.id] = h.seed_id;
      std::map<std::string, std::vector<fsrsynth::FSRecord>> by_seed;
      for (const auto& line : non_empty_lines(cfg_.run_dir / fsr_file(arm))) {
        auto r = fsrsynth::parse_fsr_record(line);
        auto it = seed_of_hazard.find(r.hazard_id);
        if (it == seed_of_hazard.end() || !seed_by_id.contains(it->second)) continue;
        by_seed[it->second].push_back(std::move(r));
      }
      for (auto& [seed_id, records] : by_seed) audit_jobs.push_back({seed_id, arm, std::move(records)});
    }
    auto audits = parallel_map(audit_jobs.size(), cfg_.max_in_flight, [&](std::size_t i) {
      const auto& job = audit_jobs[i];
      std::string target = job.seed_id + "/" + std::string(fsrsynth::to_string(job.arm));
      auto prompt = evalkit::build_fsr_audit_prompt(seed_by_id.at(job.seed_id)->text, job.records, spec_);
      auto raw = llm::generate(*backends_.judge, prompt, judge_params, &calls, target);
      auto r = evalkit::parse_fsr_audit(raw);
      r.target_id = target;
      r.method = std::string(fsrsynth::to_string(job.arm));
      return std::make_pair(r, sha256_hex(prompt));
    });
    std::vector<evalkit::JudgeResult> audit_results;
    for (auto& [r, digest_hex] : audits) {
      judge_lines.push_back(evalkit::serialize_judge(r, digest_hex));
      audit_results.push_back(std::move(r));
    }

    std::vector<std::string> summary_lines;
    for (const auto& s : evalkit::aggregate(scenario_results)) summary_lines.push_back(evalkit::serialize_summary(s));
    auto audit_summaries = evalkit::aggregate(audit_results);
    std::map<std::string, std::vector<double>> overall;
    for (const auto& r : audit_results) {
      overall[r.method].push_back((r.scores.at("CC") + r.scores.at("PRC") + r.scores.at("LRC")) / 3.0);
    }
    for (const auto& [arm, values] : overall) audit_summaries.push_back(evalkit::summarize(arm, "Overall", values));
    std::stable_sort(audit_summaries.begin(), audit_summaries.end(),
                     [](const auto& a, const auto& b) { return a.method < b.method; });
    for (const auto& s : audit_summaries) summary_lines.push_back(evalkit::serialize_summary(s));

    std::string header = "label,id";
    if (!sets.empty() || !seed_vecs.empty()) {
      std::size_t dims = seed_vecs.empty() ? sets.front().vectors.front().dims() : seed_vecs.front().dims();
      for (std::size_t d = 0; d < dims; ++d) header += ",d" + std::to_string(d);
    }
    std::map<std::string, std::size_t> counts;
    write_records("topology.jsonl", topo_lines, counts);
    write_records("judge.jsonl", judge_lines, counts);
    write_records("summaries.jsonl", summary_lines, counts);
    std::string csv = header + "\n";
    for (const auto& l : csv_lines) csv += l + "\n";
    write_file_atomic(cfg_.run_dir / "embeddings.csv", csv);
    counts["embeddings.csv"] = csv_lines.size();
    write_records("evaluate.warnings.jsonl", warnings, counts);
    write_calls("evaluate.calls.jsonl", calls, counts);
    finish_stage("evaluate", std::move(counts));
  });
}

void Pipeline::report() {
  require("evaluate");
  with_context("report", [&] {
    std::vector<evalkit::ScoreSummary> summaries;
    for (const auto& l : non_empty_lines(cfg_.run_dir / "summaries.jsonl")) summaries.push_back(evalkit::parse_summary(l));
    std::vector<evalkit::TopologyReport> topo;
    for (const auto& l : non_empty_lines(cfg_.run_dir / "topology.jsonl")) topo.push_back(evalkit::parse_topology(l));

    auto t2 = evalkit::scenario_quality_table(summaries);
    auto t3 = evalkit::topology_table(topo);
    auto t4 = evalkit::fsr_audit_table(summaries);

    std::string md = "# Run report\n\n";
    md += "Run id: `" + run_id() + "`\n\n";
    md += "## Scenario quality (mean ± sd, 1-10)\n\n" + evalkit::to_markdown(t2) + "\n";
    md += "## Latent semantic topology\n\n" + evalkit::to_markdown(t3) + "\n";
    md += "CSE is undefined when the centroid shift is below " + format_double(cfg_.eps_shift) + ".\n\n";
    md += "## FSR audit by arm (mean ± sd, 1-10)\n\n" + evalkit::to_markdown(t4);

    std::map<std::string, std::size_t> counts;
    write_file_atomic(cfg_.run_dir / "report.md", md);
    auto csv = [&](const std::string& file, const evalkit::Table& t) {
      write_file_atomic(cfg_.run_dir / file, evalkit::to_csv(t));
      counts[file] = t.rows.size();
    };
    csv("scenario_quality.csv", evalkit::summary_csv_table(summaries, {"PR", "LR", "FSR"}));
    csv("topology.csv", t3);
    csv("fsr_audit.csv", evalkit::summary_csv_table(summaries, {"CC", "PRC", "LRC", "Overall"}));
    finish_stage("report", std::move(counts));
  });
}

void Pipeline::run_all() {
  ground();
  for (auto m : {Method::Ours, Method::Vanilla, Method::Cot}) generate(m);
  for (auto a : kArms) synthesize(a);
  evaluate();
  report();
}

}  // namespace argos::pipeline
