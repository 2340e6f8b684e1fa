#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "argos/config.hpp"
#include "argos/error.hpp"
#include "argos/pipeline.hpp"

namespace {

using argos::ErrorCode;
using namespace argos::pipeline;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError: return 2;
    case ErrorCode::MissingStage: return 3;
    case ErrorCode::BackendError:
    case ErrorCode::ProviderError: return 4;
    default: return 1;
  }
}

void print_stage(const Pipeline& p, const std::string& prefix) {
  for (const auto& [name, rec] : p.stages()) {
    if (!name.starts_with(prefix)) continue;
    std::cout << name << ":";
    for (const auto& [file, n] : rec.records) std::cout << " " << file << "=" << n;
    std::cout << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"argos: attribute-guided hazard discovery and FSR synthesis"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  bool mock = false;
  KeyValues overrides;
  app.add_option("--config", config_path, "Flat key = value config file");
  app.add_flag("--mock", mock, "Force mock embedding, LLM and judge backends");
  app.add_option_function<std::string>("--run-dir", [&](const std::string& v) { overrides["run_dir"] = v; },
                                       "Run directory");
  app.add_option_function<std::string>("--seed-filter", [&](const std::string& v) { overrides["seed_filter"] = v; },
                                       "Restrict every stage to one seed id");
  for (const auto& key : RunConfig::keys()) {
    app.add_option_function<std::string>("--" + key, [&overrides, key](const std::string& v) { overrides[key] = v; })
        ->group("Config keys");
  }

  auto* ground = app.add_subcommand("ground", "Extract semantic units and match rule-base attributes");
  auto* generate = app.add_subcommand("generate", "Generate hazard scenarios");
  std::string method = "ours";
  generate->add_option("--method", method, "ours | vanilla | cot")->check(CLI::IsMember({"ours", "vanilla", "cot"}));
  generate->add_option_function<int>("--k-max", [&](int k) { overrides["k_max"] = std::to_string(k); },
                                     "Largest factor combination");
  auto* synthesize = app.add_subcommand("synthesize", "Synthesize functional safety requirements");
  std::string arm = "full";
  synthesize->add_option("--arm", arm, "full | no-iso | iso-only | vanilla")
      ->check(CLI::IsMember({"full", "no-iso", "iso-only", "vanilla"}));
  auto* evaluate = app.add_subcommand("evaluate", "Topology metrics, scenario judge and FSR audit");
  auto* report = app.add_subcommand("report", "Render markdown and CSV tables");
  auto* run_all = app.add_subcommand("run-all", "Run every stage in order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (mock) force_mock(overrides);
    auto cfg = load_config(config_path, overrides);
    if (cfg.run_dir.empty()) throw argos::Error(ErrorCode::ConfigError, "run_dir (use --run-dir)");
    Pipeline p(cfg, make_backends(cfg));

    if (ground->parsed()) {
      p.ground();
      print_stage(p, "ground");
    } else if (generate->parsed()) {
      auto m = argos::hazardgen::parse_method(method);
      p.generate(m);
      print_stage(p, "generate." + method);
    } else if (synthesize->parsed()) {
      p.synthesize(argos::fsrsynth::parse_arm(arm));
      print_stage(p, "synthesize." + arm);
    } else if (evaluate->parsed()) {
      p.evaluate();
      print_stage(p, "evaluate");
    } else if (report->parsed()) {
      p.report();
      print_stage(p, "report");
      std::cout << (p.run_dir() / "report.md").string() << "\n";
    } else if (run_all->parsed()) {
      p.run_all();
      print_stage(p, "");
      std::cout << (p.run_dir() / "report.md").string() << "\n";
    }
  } catch (const argos::Error& e) {
    std::cerr << "argos: " << argos::to_string(e.code()) << ": " << e.detail() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "argos: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
