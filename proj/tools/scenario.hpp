#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bbsim/aircraft.hpp"
#include "bbsim/mas.hpp"
#include "bbsim/reach.hpp"

namespace bbsim::cli {

/// Scenario file violations: unknown keys, bad types, missing sections.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CaseStudy { mas, mas_uncertain, aircraft };

const char* to_string(CaseStudy c);

enum class MasLayout { circle, custom };

struct ScenarioConfig {
  CaseStudy case_study = CaseStudy::mas;
  std::size_t n_steps = 1;
  std::uint64_t seed = 0;
  std::string out_dir;  // empty: derive from the scenario filename
  bool svg = false;

  // MAS case studies
  mas::MasParams mas_params;
  MasLayout layout = MasLayout::circle;
  int mas_n = 7;
  double mas_radius = 10.0;
  std::vector<mas::AgentState> custom_agents;
  std::vector<Vec2> custom_targets;
  Vec2 custom_center;

  reach::UncertaintyModel uncertainty;

  // Aircraft case study
  aircraft::AircraftConfig aircraft_cfg;
  bool aircraft_simplex = true;

  // Budgets: < 0 selects the default of one plant period; 0 disables.
  double check_budget_ms = -1.0;
  double controller_budget_ms = -1.0;
  bool recheck_stored = false;

  FaultSchedule fault_advanced;
  FaultSchedule fault_baseline;

  double plant_period_seconds() const {
    return case_study == CaseStudy::aircraft ? aircraft_cfg.decision_period : mas_params.dt;
  }
  std::chrono::microseconds check_budget() const;
  std::chrono::microseconds controller_budget() const;
};

/// Parse and validate a scenario file (flat key-value with [section]
/// headers, full-line # or ; comments). Unknown sections or keys are
/// errors, as are sections that do not belong to the selected case study.
ScenarioConfig load_scenario(const std::string& path);

/// Same, from text (tests use this to avoid temp files).
ScenarioConfig parse_scenario(const std::string& text, const std::string& origin = "<memory>");

}  // namespace bbsim::cli
