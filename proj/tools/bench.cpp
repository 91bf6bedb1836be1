#include "bench.hpp"

#include <algorithm>
#include <chrono>

namespace bbsim::cli {

nlohmann::json bench_decision_module(const ScenarioConfig& config, int repetitions) {
  if (config.case_study != CaseStudy::mas_uncertain) {
    throw SchemaError("bench requires an uncertainty-mode MAS scenario");
  }
  if (repetitions < 1) throw SchemaError("bench needs at least one repetition");

  const auto scenario =
      mas::make_circle_scenario(config.mas_n, config.mas_radius, config.mas_params);
  const mas::MasState& x = scenario.state;

  // The checked sequence has the look-ahead shape (horizon + leading command
  // + zero tail) but commands that keep the velocity boxes inside the linear
  // regime, so every repetition propagates the full set sequence instead of
  // stopping at a conservatism fault. Per-step cost does not depend on the
  // command values.
  const std::size_t length = static_cast<std::size_t>(config.mas_params.horizon) + 2;
  const auto proposal = CommandSequence<mas::MasCommand>(
      std::vector<mas::MasCommand>(length, mas::zero_command(x.size())));

  std::vector<double> micros;
  micros.reserve(repetitions);
  bool accepted = false;
  Eigen::Index generators = 0;
  for (int rep = 0; rep < repetitions; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    const reach::Zonotope z0 = reach::initial_zonotope(x, config.uncertainty);
    const auto verdict =
        reach::mas_permanently_safe_uncertain(z0, proposal, config.uncertainty,
                                              config.mas_params);
    const auto dt = std::chrono::steady_clock::now() - t0;
    micros.push_back(std::chrono::duration<double, std::micro>(dt).count());
    accepted = verdict.accepted;
    if (rep == 0) {
      const auto r = reach_sequence(z0, proposal, config.uncertainty, config.mas_params);
      generators = r.sets.back().order();
    }
  }
  std::sort(micros.begin(), micros.end());

  nlohmann::json j;
  j["repetitions"] = repetitions;
  j["sequence_length"] = proposal.size();
  j["final_generator_count"] = generators;
  j["proposal_accepted"] = accepted;
  j["median_us"] = micros[micros.size() / 2];
  j["p95_us"] = micros[std::min(micros.size() - 1, (micros.size() * 95) / 100)];
  j["max_us"] = micros.back();
  return j;
}

}  // namespace bbsim::cli
