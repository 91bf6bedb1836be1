#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bench.hpp"
#include "runner.hpp"
#include "scenario.hpp"

namespace {

// Exit codes: 0 success, 2 configuration/schema problems, 3 a safety
// violation was detected during the run (which a correct decision module
// makes impossible; treat it as a severe regression).
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSafety = 3;

std::string default_out_dir(const std::string& scenario_path) {
  return std::filesystem::path(scenario_path).stem().string() + "_out";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-Box Simplex scenario runner"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  bool svg = false;
  std::int64_t seed_override = -1;
  std::int64_t steps_override = -1;
  int reps = 100;

  auto* run = app.add_subcommand("run", "Execute a scenario and write its logs");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  run->add_option("--seed", seed_override, "Override the scenario seed");
  run->add_option("--steps", steps_override, "Override the step count");
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--svg", svg, "Also render run.svg");

  auto* bench = app.add_subcommand("bench", "Time the reachability-based check");
  bench->add_option("scenario", scenario_path, "Scenario file (mas_uncertain)")->required();
  bench->add_option("--reps", reps, "Repetitions");

  auto* validate = app.add_subcommand("validate", "Check a scenario file against the schema");
  validate->add_option("scenario", scenario_path, "Scenario file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      const auto cfg = bbsim::cli::load_scenario(scenario_path);
      std::printf("OK: %s (%s, %zu steps, seed %llu)\n", scenario_path.c_str(),
                  bbsim::cli::to_string(cfg.case_study), cfg.n_steps,
                  static_cast<unsigned long long>(cfg.seed));
      return kExitOk;
    }

    if (bench->parsed()) {
      const auto cfg = bbsim::cli::load_scenario(scenario_path);
      const auto report = bbsim::cli::bench_decision_module(cfg, reps);
      std::cout << report.dump(2) << "\n";
      return kExitOk;
    }

    auto cfg = bbsim::cli::load_scenario(scenario_path);
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    if (steps_override >= 0) cfg.n_steps = static_cast<std::size_t>(steps_override);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (svg) cfg.svg = true;
    if (cfg.out_dir.empty()) cfg.out_dir = default_out_dir(scenario_path);

    const auto data = bbsim::cli::run_scenario(cfg);
    bbsim::cli::write_outputs(data, cfg.out_dir, cfg.svg);
    std::cout << bbsim::cli::summarize(data).dump(2) << "\n";

    if (data.mas && data.mas->abort_reason) {
      std::cerr << "run aborted: " << *data.mas->abort_reason << "\n";
      return kExitSafety;
    }
    if (data.air && data.air->abort_reason) {
      std::cerr << "run aborted: " << *data.air->abort_reason << "\n";
      return kExitSafety;
    }
    return data.safety_violation() ? kExitSafety : kExitOk;
  } catch (const bbsim::cli::SchemaError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const bbsim::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
