#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenario.hpp"

namespace bbsim::cli {

struct MinSeparation {
  double value = 0.0;
  std::size_t step = 0;
  std::pair<int, int> agents{-1, -1};
};

/// Everything a run produced, kept in memory; the writers serialize it.
struct RunData {
  ScenarioConfig config;

  // Simplex MAS runs
  std::optional<ExecutionResult<mas::MasState, mas::MasCommand>> mas;
  std::optional<mas::MasState> mas_initial;

  // Simplex aircraft runs
  std::optional<ExecutionResult<aircraft::FleetState, aircraft::FleetCommand>> air;
  std::optional<aircraft::FleetState> air_initial;
  std::vector<double> air_substep_minima;  // one per executed step

  // Raw aircraft runs (advisories actuated directly, no decision module)
  std::vector<aircraft::FleetState> raw_states;       // 0..n
  std::vector<aircraft::FleetCommand> raw_commands;   // n
  std::vector<double> raw_substep_minima;

  aircraft::AircraftConfig air_cfg;  // resolved (waypoints filled)

  double total_ms = 0.0;

  bool safety_violation() const;
  MinSeparation min_separation() const;          // instant of closest approach
  double min_substep_separation() const;         // aircraft runs: over substeps
};

RunData run_scenario(const ScenarioConfig& config);

nlohmann::json summarize(const RunData& data);
std::string trajectory_csv(const RunData& data);
std::string decisions_csv(const RunData& data);

/// Writes trajectory.csv, decisions.csv, summary.json and optionally
/// run.svg into dir (created if needed).
void write_outputs(const RunData& data, const std::string& dir, bool svg);

}  // namespace bbsim::cli
